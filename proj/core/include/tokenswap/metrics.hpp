#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenswap/source.hpp"
#include "tokenswap/swap.hpp"
#include "tokenswap/tokenizer.hpp"

namespace tokenswap {

enum class Normalization { None, StripPunctuation };

std::string_view to_string(Normalization n) noexcept;
Normalization parse_normalization(std::string_view name);

// One extraction probe: decode from prefix and compare against the reference
// suffix.
struct ExtractionTask {
  std::string id;
  std::string prefix;
  std::string reference_suffix;
  Normalization normalization = Normalization::None;

  void validate() const;  // throws InvalidArgument on empty prefix/suffix
};

// Applies the normalization to text: None returns it unchanged.
std::string normalize_text(std::string_view text, Normalization normalization);

struct MatchingLength {
  std::size_t tokens = 0;
  std::size_t chars = 0;  // code points of the decoded common prefix
};

// Longest common prefix of the two token sequences.
MatchingLength matching_length(std::span<const TokenId> generated, std::span<const TokenId> reference,
                               const Tokenizer& tokenizer);

bool exact_match(std::string_view generated, std::string_view reference,
                 Normalization normalization = Normalization::None);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Word-level LCS length over the reference word count. Throws EmptyReference.
double rouge_l(std::string_view generated, std::string_view reference);

// Unit-cost insert/delete/substitute distance over code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

// levenshtein / max(length) in code points. Throws BothEmpty.
double norm_levenshtein(std::string_view generated, std::string_view reference);

struct SequenceScores {
  std::size_t ml_tokens = 0;
  std::size_t ml_chars = 0;
  bool exact_match = false;
  double rouge_l = 0.0;
  double norm_levenshtein = 0.0;

  friend bool operator==(const SequenceScores&, const SequenceScores&) = default;
};

// Token-level matching length plus text metrics on the normalized texts.
SequenceScores score_sequence(std::span<const TokenId> generated_tokens,
                              std::span<const TokenId> reference_tokens,
                              std::string_view generated_text, std::string_view reference_text,
                              const Tokenizer& tokenizer, Normalization normalization);

// Percentage of scores with rouge_l strictly above threshold. Throws EmptyList,
// or InvalidArgument when threshold is outside (0, 1].
double threshold_rate(std::span<const SequenceScores> scores, double threshold);

inline constexpr double kProbabilityFloor = 1e-300;

// Mean over all token positions of -ln p(x_i | x_<i) under provider, in nats.
// Each text is conditioned on the tokenizer's bos when defined. Texts are
// processed on `jobs` threads and summed in input order.
double cross_entropy(const ProbabilitySource& provider, std::span<const std::string> texts,
                     int jobs = 1);

struct SequenceRow {
  std::string task_id;
  DecodeMode mode = DecodeMode::Standard;
  SequenceScores scores;
  std::string generated_text;

  friend bool operator==(const SequenceRow&, const SequenceRow&) = default;
};

struct ModeAggregate {
  DecodeMode mode = DecodeMode::Standard;
  std::size_t count = 0;
  double mean_ml_tokens = 0.0;
  double mean_ml_chars = 0.0;
  double emr_percent = 0.0;
  double mean_rouge_l = 0.0;
  double mean_norm_levenshtein = 0.0;
  double rouge_l_above_threshold_percent = 0.0;

  friend bool operator==(const ModeAggregate&, const ModeAggregate&) = default;
};

// Per-mode means and rates over rows, modes in first-appearance order.
std::vector<ModeAggregate> aggregate(std::span<const SequenceRow> rows, double rouge_threshold);

struct RunMetadata {
  std::string main_spec;
  std::string aux_spec;
  std::string grammar_provenance;
  std::size_t grammar_size = 0;
  std::size_t bound_grammar_size = 0;
  std::vector<std::string> dropped_grammar_words;
  std::optional<double> gamma;
  int prefix_tokens = 0;
  int gen_tokens = 0;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  double rouge_threshold = 0.8;
  Normalization normalization = Normalization::None;
  int memfree_n = 0;
  std::size_t low_coverage_steps = 0;
  std::size_t memfree_flagged_steps = 0;
  std::optional<std::string> timestamp;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct ErrorEntry {
  std::string task_id;
  std::string mode;
  std::string message;

  friend bool operator==(const ErrorEntry&, const ErrorEntry&) = default;
};

struct MemorizationReport {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  RunMetadata metadata;
  std::vector<SequenceRow> per_sequence;
  std::vector<ModeAggregate> aggregates;
  std::optional<double> ce_loss;
  std::vector<std::string> skipped;  // task ids rejected as too short
  std::vector<ErrorEntry> errors;

  const ModeAggregate* find(DecodeMode mode) const;

  friend bool operator==(const MemorizationReport&, const MemorizationReport&) = default;
};

}  // namespace tokenswap
