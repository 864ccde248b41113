#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tokenswap/dataset.hpp"
#include "tokenswap/grammar.hpp"
#include "tokenswap/memfree.hpp"
#include "tokenswap/metrics.hpp"
#include "tokenswap/ngram.hpp"
#include "tokenswap/swap.hpp"

namespace tokenswap {

struct ExperimentConfig {
  int prefix_tokens = 20;
  int gen_tokens = 128;
  std::vector<DecodeMode> modes{DecodeMode::Standard, DecodeMode::TokenSwap};
  double temperature = 0.0;
  std::uint64_t seed = 0;
  int memfree_n = 10;
  double rouge_threshold = 0.8;
  Normalization normalization = Normalization::None;
  bool timestamp = true;
  int jobs = 1;
  // Recorded in the report metadata.
  std::string main_spec;
  std::string aux_spec;

  void validate() const;  // throws InvalidArgument
};

struct ExperimentSources {
  const ProbabilitySource& main;
  const ProbabilitySource* aux = nullptr;   // required for tokenswap mode
  const SwapConfig* swap = nullptr;         // required for tokenswap mode
  const MemFreeIndex* memfree = nullptr;    // required for memfree mode
};

// Decodes every task in every configured mode and scores it against the
// reference. Tasks run in id order; the sampling seed of the k-th task is
// config.seed + k, so results do not depend on config.jobs. A task that fails
// in one mode is recorded in the error list and the run continues.
MemorizationReport run_extraction(const ExperimentConfig& config, const ExperimentSources& sources,
                                  std::span<const ExtractionTask> tasks,
                                  std::vector<std::string> skipped = {});

// Splits records with the main tokenizer first; too-short texts are skipped.
MemorizationReport run_extraction(const ExperimentConfig& config, const ExperimentSources& sources,
                                  std::span<const DatasetRecord> records);

struct InductionConfig {
  NGramOptions main{.order = 5, .dup_factor = 50};
  int aux_order = 2;
  // Train the auxiliary model on the last aux_texts texts and the main model
  // on the rest. Otherwise both see the whole corpus.
  bool aux_disjoint = false;
  std::size_t aux_texts = 0;  // 0 = half the corpus

  void validate() const;
};

struct InductionModels {
  NGramModel main;
  NGramModel aux;
  std::size_t main_text_count = 0;
  std::size_t aux_text_count = 0;
};

// Builds a memorizing main model (high order, duplicated counts) and a weak
// auxiliary model (low order, single counts). Throws EmptyCorpus.
InductionModels run_induction(std::span<const std::string> corpus, const InductionConfig& config);

struct AblationResult {
  std::vector<std::size_t> sizes;
  std::vector<MemorizationReport> reports;  // tokenswap mode, one per size
};

// Runs tokenswap with the first n words of wordlist for each n in sizes.
// Throws InvalidArgument when sizes is empty or any n is 0 or too large.
AblationResult run_ablation(const ExperimentConfig& config, const ProbabilitySource& main,
                            const ProbabilitySource& aux, const GrammarSet& wordlist,
                            std::span<const std::size_t> sizes, std::span<const ExtractionTask> tasks,
                            std::vector<std::string> skipped = {});

// UTC, second resolution: 2024-01-31T12:00:00Z.
std::string utc_timestamp();

}  // namespace tokenswap
