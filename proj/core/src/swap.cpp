#include "tokenswap/swap.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tokenswap/error.hpp"
#include "tokenswap/unicode.hpp"

namespace tokenswap {

SwapConfig::SwapConfig(BoundGrammarSet bound_main, std::vector<GrammarLink> links, double epsilon)
    : bound_main_(std::move(bound_main)), epsilon_(epsilon) {
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  }
  std::map<TokenId, std::vector<TokenId>> by_main;
  for (auto& link : links) {
    if (!bound_main_.contains(link.main)) {
      throw Error(ErrorKind::InvalidArgument,
                  "link key " + std::to_string(link.main) + " is not a bound grammar token");
    }
    if (!by_main.emplace(link.main, std::move(link.aux)).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate link for " + std::to_string(link.main));
    }
  }
  links_.reserve(bound_main_.size());
  for (TokenId id : bound_main_.token_ids()) {
    GrammarLink link{id, {}};
    if (auto it = by_main.find(id); it != by_main.end()) link.aux = std::move(it->second);
    std::sort(link.aux.begin(), link.aux.end());
    link.aux.erase(std::unique(link.aux.begin(), link.aux.end()), link.aux.end());
    aux_ids_.insert(aux_ids_.end(), link.aux.begin(), link.aux.end());
    links_.push_back(std::move(link));
  }
  std::sort(aux_ids_.begin(), aux_ids_.end());
  aux_ids_.erase(std::unique(aux_ids_.begin(), aux_ids_.end()), aux_ids_.end());
}

SwapConfig SwapConfig::identity(BoundGrammarSet bound, double epsilon) {
  std::vector<GrammarLink> links;
  for (TokenId id : bound.token_ids()) links.push_back({id, {id}});
  return SwapConfig(std::move(bound), std::move(links), epsilon);
}

SwapConfig SwapConfig::build(const GrammarSet& gs, const Tokenizer& main, const Tokenizer& aux,
                             double epsilon) {
  BoundGrammarSet bound_main = bind(gs, main);
  if (main.fingerprint() == aux.fingerprint()) return identity(std::move(bound_main), epsilon);

  std::vector<GrammarLink> links;
  std::optional<BoundGrammarSet> bound_aux;
  try {
    bound_aux = bind(gs, aux);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EmptyBinding) throw;
  }
  for (TokenId id : bound_main.token_ids()) {
    GrammarLink link{id, {}};
    if (bound_aux) {
      const std::string surface = unicode::trim(main.vocabulary().surface(id));
      const std::string& word = bound_main.word_of(id);
      for (TokenId a : bound_aux->token_ids()) {
        if (unicode::trim(aux.vocabulary().surface(a)) == surface) link.aux.push_back(a);
      }
      if (link.aux.empty()) {
        for (TokenId a : bound_aux->token_ids()) {
          if (bound_aux->word_of(a) == word) link.aux.push_back(a);
        }
      }
    }
    links.push_back(std::move(link));
  }
  return SwapConfig(std::move(bound_main), std::move(links), epsilon);
}

std::vector<double> map_aux_distribution(const TokenDist& aux_dist, const SwapConfig& config) {
  const auto ids = config.aux_ids();
  if (!ids.empty() && ids.back() >= aux_dist.size()) {
    throw Error(ErrorKind::VocabMismatch, "auxiliary distribution shorter than linked ids");
  }
  std::vector<double> out;
  out.reserve(config.links().size());
  for (const auto& link : config.links()) {
    double p = 0.0;
    for (TokenId a : link.aux) p += aux_dist[a];
    out.push_back(p);
  }
  return out;
}

AlphaResult compute_alpha(const TokenDist& p_main, std::span<const double> aux_on_grammar,
                          const SwapConfig& config) {
  const auto links = config.links();
  if (aux_on_grammar.size() != links.size()) {
    throw Error(ErrorKind::InvalidArgument, "auxiliary grammar values not aligned with links");
  }
  if (p_main.size() != config.bound_main().vocab_size()) {
    throw Error(ErrorKind::VocabMismatch, "main distribution size differs from binding");
  }
  AlphaResult r;
  for (std::size_t i = 0; i < links.size(); ++i) {
    r.main_mass += p_main[links[i].main];
    r.aux_mass += aux_on_grammar[i];
  }
  r.fallback = r.aux_mass < config.epsilon();
  r.alpha = r.main_mass / std::max(r.aux_mass, config.epsilon());
  return r;
}

SwapOutcome swap_distribution(const TokenDist& p_main, std::span<const double> aux_on_grammar,
                              const SwapConfig& config) {
  const AlphaResult alpha = compute_alpha(p_main, aux_on_grammar, config);
  if (alpha.fallback) return {p_main, alpha};

  const auto src = p_main.probs();
  std::vector<double> out(src.begin(), src.end());
  const auto links = config.links();
  for (std::size_t i = 0; i < links.size(); ++i) {
    // Dividing first keeps a single-token grammar exact: aux/aux == 1.
    out[links[i].main] = std::min(1.0, alpha.main_mass * (aux_on_grammar[i] / alpha.aux_mass));
  }
  return {TokenDist::from_probabilities(std::move(out)), alpha};
}

std::string_view to_string(DecodeMode mode) noexcept {
  switch (mode) {
    case DecodeMode::Standard: return "standard";
    case DecodeMode::TokenSwap: return "tokenswap";
    case DecodeMode::MemFree: return "memfree";
  }
  return "standard";
}

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "standard") return DecodeMode::Standard;
  if (name == "tokenswap") return DecodeMode::TokenSwap;
  if (name == "memfree") return DecodeMode::MemFree;
  throw Error(ErrorKind::InvalidArgument, "unknown mode '" + std::string(name) + "'");
}

TokenSwapSource::TokenSwapSource(const ProbabilitySource& main, const ProbabilitySource& aux,
                                 const SwapConfig& config)
    : main_(main),
      aux_(aux),
      config_(config),
      passthrough_(main.tokenizer().fingerprint() == aux.tokenizer().fingerprint()) {
  if (config.bound_main().vocab_fingerprint() != main.tokenizer().vocabulary().fingerprint()) {
    throw Error(ErrorKind::VocabMismatch, "swap config is not bound to the main vocabulary");
  }
}

TokenSwapSource::Step TokenSwapSource::step(std::span<const TokenId> context) const {
  SourceOutput main_out = main_.query(context);
  SourceOutput aux_out = [&] {
    try {
      return passthrough_ ? aux_.query(context)
                          : aux_.query_text(main_.tokenizer().decode(context));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::TokenizerDesync) throw;
      throw Error(e.kind(), "auxiliary source: " + e.detail());
    }
  }();
  const std::vector<double> aux_on_grammar = map_aux_distribution(aux_out.dist, config_);
  return {swap_distribution(main_out.dist, aux_on_grammar, config_),
          aux_out.coverage(config_.aux_ids())};
}

SourceOutput TokenSwapSource::query(std::span<const TokenId> context) const {
  return {step(context).outcome.dist, true, {}};
}

std::string TokenSwapSource::describe() const {
  return "tokenswap(" + main_.describe() + ", " + aux_.describe() + ")";
}

GenerationRecord decode(const ProbabilitySource& main, const AuxiliaryModel* aux,
                        std::string_view prompt, const GenerationParams& params,
                        DecodeMode mode) {
  params.validate();
  if (mode == DecodeMode::MemFree) {
    throw Error(ErrorKind::InvalidArgument, "memfree decoding needs an index; use memfree_decode");
  }
  if (mode == DecodeMode::TokenSwap && aux == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "tokenswap mode needs an auxiliary model");
  }

  const Tokenizer& tok = main.tokenizer();
  GenerationRecord rec;
  rec.params = params;
  rec.mode = mode;
  rec.prompt_tokens = tok.encode(prompt);

  std::optional<TokenSwapSource> swapper;
  if (mode == DecodeMode::TokenSwap) swapper.emplace(main, aux->source, aux->config);

  std::vector<TokenId> context = with_bos(tok, rec.prompt_tokens);
  Rng rng(params.seed);
  const auto eos = tok.eos();

  for (std::size_t step = 0; step < static_cast<std::size_t>(params.max_tokens); ++step) {
    std::optional<TokenSwapSource::Step> swapped;
    std::optional<SourceOutput> plain;
    try {
      if (swapper) {
        swapped = swapper->step(context);
      } else {
        plain = main.query(context);
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(step) + ": " + e.detail());
    }
    const TokenDist& dist = swapped ? swapped->outcome.dist : plain->dist;
    const TokenId chosen = sample(dist, params, rng);
    if (eos && chosen == *eos) {
      rec.stopped_on_eos = true;
      break;
    }
    if (swapped) {
      const AlphaResult& a = swapped->outcome.alpha;
      rec.traces.push_back({step, a.alpha, a.main_mass, a.aux_mass, chosen,
                            aux->config.bound_main().contains(chosen), a.fallback,
                            swapped->aux_coverage});
      if (swapped->aux_coverage < kLowCoverageThreshold) ++rec.low_coverage_steps;
    }
    rec.generated_tokens.push_back(chosen);
    context.push_back(chosen);
  }
  rec.generated_text = tok.decode(rec.generated_tokens);
  return rec;
}

}  // namespace tokenswap
