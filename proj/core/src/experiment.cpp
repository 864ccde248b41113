#include "tokenswap/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <optional>

#include "tokenswap/error.hpp"
#include "tokenswap/parallel.hpp"

namespace tokenswap {

void ExperimentConfig::validate() const {
  if (prefix_tokens < 1) throw Error(ErrorKind::InvalidArgument, "prefix_tokens must be >= 1");
  if (gen_tokens < 1) throw Error(ErrorKind::InvalidArgument, "gen_tokens must be >= 1");
  if (modes.empty()) throw Error(ErrorKind::InvalidArgument, "no decoding modes");
  if (!(temperature >= 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be >= 0");
  if (memfree_n < 1) throw Error(ErrorKind::InvalidArgument, "memfree_n must be >= 1");
  if (!(rouge_threshold > 0.0 && rouge_threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "rouge_threshold must lie in (0, 1]");
  }
  if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be >= 1");
}

void InductionConfig::validate() const {
  main.validate();
  if (aux_order < 1) throw Error(ErrorKind::InvalidArgument, "aux_order must be >= 1");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

struct Cell {
  std::optional<SequenceRow> row;
  std::optional<ErrorEntry> error;
  std::size_t low_coverage = 0;
  std::size_t flagged = 0;
};

Cell run_cell(const ExperimentConfig& config, const ExperimentSources& sources, const ExtractionTask& task,
              DecodeMode mode, std::uint64_t seed) {
  Cell cell;
  try {
    task.validate();
    const Tokenizer& tok = sources.main.tokenizer();
    const GenerationParams params{config.gen_tokens, config.temperature, seed};
    GenerationRecord rec;
    if (mode == DecodeMode::MemFree) {
      if (!sources.memfree) throw Error(ErrorKind::InvalidArgument, "memfree mode needs an index");
      rec = memfree_decode(sources.main, *sources.memfree, task.prefix, params);
    } else if (mode == DecodeMode::TokenSwap) {
      if (!sources.aux || !sources.swap) throw Error(ErrorKind::InvalidArgument, "tokenswap mode needs an auxiliary model");
      const AuxiliaryModel aux{*sources.aux, *sources.swap};
      rec = decode(sources.main, &aux, task.prefix, params, mode);
    } else {
      rec = decode(sources.main, nullptr, task.prefix, params, mode);
    }
    auto ref_tokens = tok.encode(task.reference_suffix);
    if (ref_tokens.size() > static_cast<std::size_t>(config.gen_tokens)) {
      ref_tokens.resize(static_cast<std::size_t>(config.gen_tokens));
    }
    const std::string ref_text = tok.decode(ref_tokens);
    cell.row = SequenceRow{task.id, mode,
                           score_sequence(rec.generated_tokens, ref_tokens, rec.generated_text, ref_text, tok,
                                          task.normalization),
                           rec.generated_text};
    cell.low_coverage = rec.low_coverage_steps;
    cell.flagged = rec.flagged_steps.size();
  } catch (const std::exception& e) {
    cell.error = ErrorEntry{task.id, std::string(to_string(mode)), e.what()};
  }
  return cell;
}

}  // namespace

MemorizationReport run_extraction(const ExperimentConfig& config, const ExperimentSources& sources,
                                  std::span<const ExtractionTask> tasks, std::vector<std::string> skipped) {
  config.validate();
  std::vector<ExtractionTask> sorted(tasks.begin(), tasks.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  const std::size_t n_modes = config.modes.size();
  std::vector<Cell> cells(sorted.size() * n_modes);
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const std::size_t t = i / n_modes;
    cells[i] = run_cell(config, sources, sorted[t], config.modes[i % n_modes], config.seed + t);
  });

  MemorizationReport report;
  auto& md = report.metadata;
  md.main_spec = config.main_spec;
  md.aux_spec = config.aux_spec;
  md.prefix_tokens = config.prefix_tokens;
  md.gen_tokens = config.gen_tokens;
  md.temperature = config.temperature;
  md.seed = config.seed;
  md.rouge_threshold = config.rouge_threshold;
  md.normalization = config.normalization;
  md.memfree_n = sources.memfree ? sources.memfree->n() : config.memfree_n;
  if (config.timestamp) md.timestamp = utc_timestamp();

  if (sources.swap) {
    const BoundGrammarSet& bound = sources.swap->bound_main();
    md.grammar_provenance = bound.source().provenance();
    md.grammar_size = bound.source().size();
    md.bound_grammar_size = bound.size();
    md.dropped_grammar_words = bound.dropped_words();
    std::vector<std::string> texts;
    for (const auto& t : sorted) texts.push_back(t.prefix + " " + t.reference_suffix);
    try {
      md.gamma = measure_gamma(texts, sources.main.tokenizer(), bound, "eval").gamma;
    } catch (const Error&) {
      md.gamma.reset();
    }
  }

  for (auto& cell : cells) {
    if (cell.row) report.per_sequence.push_back(std::move(*cell.row));
    if (cell.error) report.errors.push_back(std::move(*cell.error));
    md.low_coverage_steps += cell.low_coverage;
    md.memfree_flagged_steps += cell.flagged;
  }
  report.aggregates = aggregate(report.per_sequence, config.rouge_threshold);
  report.skipped = std::move(skipped);
  return report;
}

MemorizationReport run_extraction(const ExperimentConfig& config, const ExperimentSources& sources,
                                  std::span<const DatasetRecord> records) {
  config.validate();
  auto split = split_tasks(records, config.prefix_tokens, config.gen_tokens, sources.main.tokenizer(),
                           config.normalization);
  return run_extraction(config, sources, split.tasks, std::move(split.too_short));
}

InductionModels run_induction(std::span<const std::string> corpus, const InductionConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "no training texts");
  NGramOptions aux_opts = config.main;
  aux_opts.order = config.aux_order;
  aux_opts.dup_factor = 1;

  if (!config.aux_disjoint) {
    return {NGramModel::train(corpus, config.main), NGramModel::train(corpus, aux_opts), corpus.size(),
            corpus.size()};
  }
  const std::size_t n_aux = config.aux_texts == 0 ? corpus.size() / 2 : config.aux_texts;
  if (n_aux == 0 || n_aux >= corpus.size()) {
    throw Error(ErrorKind::EmptyCorpus, "disjoint split leaves one side without texts");
  }
  const auto main_part = corpus.first(corpus.size() - n_aux);
  const auto aux_part = corpus.last(n_aux);
  return {NGramModel::train(main_part, config.main), NGramModel::train(aux_part, aux_opts), main_part.size(),
          aux_part.size()};
}

AblationResult run_ablation(const ExperimentConfig& config, const ProbabilitySource& main,
                            const ProbabilitySource& aux, const GrammarSet& wordlist,
                            std::span<const std::size_t> sizes, std::span<const ExtractionTask> tasks,
                            std::vector<std::string> skipped) {
  if (sizes.empty()) throw Error(ErrorKind::InvalidArgument, "no grammar sizes given");
  for (std::size_t n : sizes) {
    if (n == 0 || n > wordlist.size()) {
      throw Error(ErrorKind::InvalidArgument,
                  "grammar size " + std::to_string(n) + " outside 1.." + std::to_string(wordlist.size()));
    }
  }
  ExperimentConfig cfg = config;
  cfg.modes = {DecodeMode::TokenSwap};
  AblationResult out;
  for (std::size_t n : sizes) {
    const SwapConfig swap = SwapConfig::build(wordlist.prefix(n), main.tokenizer(), aux.tokenizer());
    const ExperimentSources sources{main, &aux, &swap, nullptr};
    out.sizes.push_back(n);
    out.reports.push_back(run_extraction(cfg, sources, tasks, skipped));
  }
  return out;
}

}  // namespace tokenswap
