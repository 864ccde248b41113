#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenswap/grammar.hpp"
#include "tokenswap/source.hpp"
#include "tokenswap/types.hpp"

namespace tokenswap {

// One main-vocabulary grammar token and the auxiliary ids whose probability
// it receives.
struct GrammarLink {
  TokenId main = 0;
  std::vector<TokenId> aux;
};

class SwapConfig {
 public:
  static constexpr double kDefaultEpsilon = 1e-12;

  // Links must be keyed by bound ids (each at most once); bound ids without a
  // link get an empty one. Throws InvalidArgument.
  SwapConfig(BoundGrammarSet bound_main, std::vector<GrammarLink> links,
             double epsilon = kDefaultEpsilon);

  // Main and auxiliary share a vocabulary: every bound id links to itself.
  static SwapConfig identity(BoundGrammarSet bound, double epsilon = kDefaultEpsilon);

  // Binds gs in both vocabularies and links each main id to the auxiliary ids
  // with the same trimmed surface, falling back to all auxiliary ids of the
  // same word when no surface matches. An auxiliary vocabulary where nothing
  // binds yields empty links (every step falls back).
  static SwapConfig build(const GrammarSet& gs, const Tokenizer& main, const Tokenizer& aux,
                          double epsilon = kDefaultEpsilon);

  const BoundGrammarSet& bound_main() const noexcept { return bound_main_; }
  // One link per bound id, ascending by main id.
  std::span<const GrammarLink> links() const noexcept { return links_; }
  double epsilon() const noexcept { return epsilon_; }
  // All auxiliary ids referenced by links, sorted and unique.
  std::span<const TokenId> aux_ids() const noexcept { return aux_ids_; }

 private:
  BoundGrammarSet bound_main_;
  std::vector<GrammarLink> links_;
  std::vector<TokenId> aux_ids_;
  double epsilon_;
};

// Auxiliary probability per link (aligned with config.links()): the sum of the
// auxiliary distribution over the linked ids. Empty links give 0.
std::vector<double> map_aux_distribution(const TokenDist& aux_dist, const SwapConfig& config);

struct AlphaResult {
  double alpha = 1.0;
  double main_mass = 0.0;
  double aux_mass = 0.0;
  bool fallback = false;  // aux grammar mass below epsilon
};

// alpha = main grammar mass / max(aux grammar mass, epsilon).
AlphaResult compute_alpha(const TokenDist& p_main, std::span<const double> aux_on_grammar,
                          const SwapConfig& config);

struct SwapOutcome {
  TokenDist dist;
  AlphaResult alpha;
};

// Non-grammar coordinates are copied bit-exactly from p_main; grammar
// coordinate g becomes main_mass * (aux[g] / aux_mass), i.e. alpha * aux[g].
// On fallback the output equals p_main.
SwapOutcome swap_distribution(const TokenDist& p_main, std::span<const double> aux_on_grammar,
                              const SwapConfig& config);

enum class DecodeMode { Standard, TokenSwap, MemFree };

std::string_view to_string(DecodeMode mode) noexcept;
// Throws InvalidArgument on unknown names.
DecodeMode parse_decode_mode(std::string_view name);

struct SwapStepTrace {
  std::size_t step_index = 0;
  double alpha = 1.0;
  double main_grammar_mass = 0.0;
  double aux_grammar_mass = 0.0;
  TokenId chosen = 0;
  bool swapped = false;   // chosen is a grammar token
  bool fallback = false;  // swap disabled this step
  double aux_grammar_coverage = 1.0;
};

struct GenerationRecord {
  std::vector<TokenId> prompt_tokens;
  std::vector<TokenId> generated_tokens;
  std::string generated_text;
  std::vector<SwapStepTrace> traces;  // one per generated token in tokenswap mode
  GenerationParams params;
  DecodeMode mode = DecodeMode::Standard;
  bool stopped_on_eos = false;
  // Steps where a guard altered normal behaviour (memfree all-masked steps).
  std::vector<std::size_t> flagged_steps;
  // Tokenswap steps whose auxiliary grammar coverage was below 99%.
  std::size_t low_coverage_steps = 0;
};

inline constexpr double kLowCoverageThreshold = 0.99;

// Presents main with auxiliary grammar probabilities swapped in as a single
// source. Auxiliary context is the same ids when both tokenizers agree,
// otherwise the auxiliary re-encoding of the main context's surface text.
class TokenSwapSource final : public ProbabilitySource {
 public:
  TokenSwapSource(const ProbabilitySource& main, const ProbabilitySource& aux,
                  const SwapConfig& config);

  struct Step {
    SwapOutcome outcome;
    double aux_coverage = 1.0;
  };

  Step step(std::span<const TokenId> context) const;

  const Tokenizer& tokenizer() const noexcept override { return main_.tokenizer(); }
  SourceOutput query(std::span<const TokenId> context) const override;
  std::string describe() const override;

  bool passthrough() const noexcept { return passthrough_; }

 private:
  const ProbabilitySource& main_;
  const ProbabilitySource& aux_;
  const SwapConfig& config_;
  bool passthrough_;
};

struct AuxiliaryModel {
  const ProbabilitySource& source;
  const SwapConfig& config;
};

// Autoregressive generation from prompt. Standard mode queries only main;
// tokenswap mode requires aux and swaps every generation step (never the
// prompt). Stops after params.max_tokens tokens or on main's eos (not
// emitted). Source failures are rethrown with the step index. MemFree mode is
// handled by memfree_decode.
GenerationRecord decode(const ProbabilitySource& main, const AuxiliaryModel* aux,
                        std::string_view prompt, const GenerationParams& params,
                        DecodeMode mode);

}  // namespace tokenswap
