#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tokenswap/dataset.hpp"
#include "tokenswap/error.hpp"
#include "tokenswap/experiment.hpp"
#include "tokenswap/grammar.hpp"
#include "tokenswap/memfree.hpp"
#include "tokenswap/metrics.hpp"
#include "tokenswap/ngram.hpp"
#include "tokenswap/report.hpp"
#include "tokenswap/source_spec.hpp"
#include "tokenswap/swap.hpp"

namespace ts = tokenswap;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct DatasetArgs {
  std::string path;
  std::string format = "auto";

  std::vector<ts::DatasetRecord> load() const {
    ts::DatasetFormat fmt = ts::infer_dataset_format(path);
    if (format == "jsonl") fmt = ts::DatasetFormat::Jsonl;
    if (format == "txt") fmt = ts::DatasetFormat::Txt;
    return ts::ingest(path, fmt);
  }
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args, const std::string& name, const std::string& help) {
  cmd->add_option(name, args.path, help)->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", args.format, "Dataset format")->check(CLI::IsMember({"auto", "jsonl", "txt"}));
}

ts::GrammarSet grammar_from(const std::string& path) {
  return path.empty() ? ts::default_grammar_set() : ts::load_grammar_set(path);
}

// Full texts of all records, paired ones joined with a space.
std::vector<std::string> all_texts(const std::vector<ts::DatasetRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (const auto* p = std::get_if<ts::PairedText>(&r.content)) {
      out.push_back(p->prefix + " " + p->suffix);
    } else {
      out.push_back(std::get<std::string>(r.content));
    }
  }
  return out;
}

std::vector<ts::DecodeMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<ts::DecodeMode> out;
  try {
    for (const auto& n : names) out.push_back(ts::parse_decode_mode(n));
  } catch (const ts::Error& e) {
    throw ts::Error(ts::ErrorKind::Usage, e.detail());
  }
  return out;
}

void print_aggregates(const ts::MemorizationReport& report) {
  std::printf("%-10s %6s %9s %9s %7s %8s %8s %8s\n", "mode", "n", "ML(tok)", "ML(chr)", "EMR%", "ROUGE-L",
              "normLev", ">thr%");
  for (const auto& a : report.aggregates) {
    std::printf("%-10s %6zu %9.3f %9.3f %7.2f %8.4f %8.4f %8.2f\n", std::string(ts::to_string(a.mode)).c_str(),
                a.count, a.mean_ml_tokens, a.mean_ml_chars, a.emr_percent, a.mean_rouge_l, a.mean_norm_levenshtein,
                a.rouge_l_above_threshold_percent);
  }
  if (!report.errors.empty()) std::printf("%zu task(s) failed; see the report's error list\n", report.errors.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TokenSwap decoding and memorization metrics"};
  app.require_subcommand(1);

  // train-ngram
  auto* train = app.add_subcommand("train-ngram", "Train a word n-gram model, optionally with an auxiliary model");
  DatasetArgs train_data;
  ts::InductionConfig train_cfg;
  std::string train_out, train_aux_out;
  train_cfg.main = ts::NGramOptions{};
  add_dataset_options(train, train_data, "--corpus", "Training corpus");
  train->add_option("--order", train_cfg.main.order, "Model order")->capture_default_str();
  train->add_option("--dup,--dup-factor", train_cfg.main.dup_factor, "Count multiplier per text")->capture_default_str();
  train->add_option("--backoff", train_cfg.main.backoff, "Stupid-backoff factor")->capture_default_str();
  train->add_flag("--lowercase", train_cfg.main.lowercase, "Lowercase words before counting");
  train->add_option("--out", train_out, "Output model path")->required();
  auto* aux_out_opt = train->add_option("--aux-out", train_aux_out, "Also train an auxiliary model to this path");
  train->add_option("--aux-order", train_cfg.aux_order, "Auxiliary model order")->capture_default_str()->needs(aux_out_opt);
  train->add_flag("--aux-disjoint", train_cfg.aux_disjoint, "Train the auxiliary model on held-out trailing texts")
      ->needs(aux_out_opt);
  train->add_option("--aux-texts", train_cfg.aux_texts, "Held-out text count (0 = half)")->capture_default_str()
      ->needs(aux_out_opt);

  // generate
  auto* gen = app.add_subcommand("generate", "Decode from a prompt");
  std::string gen_main, gen_aux, gen_prompt, gen_mode = "standard", gen_gset, gen_memfree_corpus;
  ts::GenerationParams gen_params;
  int gen_memfree_n = 10;
  bool gen_trace = false;
  gen->add_option("--main", gen_main, "Main source spec")->required();
  gen->add_option("--aux", gen_aux, "Auxiliary source spec");
  gen->add_option("--prompt", gen_prompt, "Prompt text")->required();
  gen->add_option("--mode", gen_mode, "standard | tokenswap | memfree")->capture_default_str();
  gen->add_option("--gset", gen_gset, "Grammar word list (default: built-in)");
  gen->add_option("--max-tokens", gen_params.max_tokens, "Maximum new tokens")->capture_default_str();
  gen->add_option("--temperature", gen_params.temperature, "0 = greedy")->capture_default_str();
  gen->add_option("--seed", gen_params.seed, "Sampling seed")->capture_default_str();
  gen->add_option("--memfree-corpus", gen_memfree_corpus, "Corpus for the memfree index")->check(CLI::ExistingFile);
  gen->add_option("--memfree-n", gen_memfree_n, "Memfree window length")->capture_default_str();
  gen->add_flag("--trace", gen_trace, "Print the generation record with per-step swap traces as JSON");

  // eval-mem
  auto* mem = app.add_subcommand("eval-mem", "Run extraction and score memorization");
  DatasetArgs mem_data;
  ts::ExperimentConfig mem_cfg;
  std::string mem_gset, mem_out, mem_csv, mem_memfree_corpus;
  std::vector<std::string> mem_modes{"standard", "tokenswap"};
  bool mem_strip = false, mem_no_timestamp = false;
  mem->add_option("--main", mem_cfg.main_spec, "Main source spec")->required();
  mem->add_option("--aux", mem_cfg.aux_spec, "Auxiliary source spec");
  add_dataset_options(mem, mem_data, "--dataset", "Evaluation dataset");
  mem->add_option("--modes", mem_modes, "Decoding modes")->delimiter(',')->capture_default_str();
  mem->add_option("--gset", mem_gset, "Grammar word list (default: built-in)");
  mem->add_option("--prefix-tokens", mem_cfg.prefix_tokens, "Prompt length in tokens")->capture_default_str();
  mem->add_option("--gen-tokens", mem_cfg.gen_tokens, "Generation length in tokens")->capture_default_str();
  mem->add_option("--temperature", mem_cfg.temperature, "0 = greedy")->capture_default_str();
  mem->add_option("--seed", mem_cfg.seed, "Base sampling seed")->capture_default_str();
  mem->add_option("--rouge-threshold", mem_cfg.rouge_threshold, "ROUGE-L rate threshold")->capture_default_str();
  mem->add_option("--memfree-n", mem_cfg.memfree_n, "Memfree window length")->capture_default_str();
  mem->add_option("--memfree-corpus", mem_memfree_corpus, "Corpus for the memfree index (default: dataset)")
      ->check(CLI::ExistingFile);
  mem->add_option("--jobs", mem_cfg.jobs, "Worker threads")->capture_default_str();
  mem->add_flag("--strip-punct", mem_strip, "Strip punctuation before text metrics");
  mem->add_flag("--no-timestamp", mem_no_timestamp, "Omit the run timestamp");
  mem->add_option("--report", mem_out, "JSON report path")->required();
  mem->add_option("--csv", mem_csv, "Per-sequence CSV path");

  // eval-ce
  auto* ce = app.add_subcommand("eval-ce", "Cross-entropy of held-out texts");
  DatasetArgs ce_data;
  std::string ce_main, ce_aux, ce_gset, ce_mode = "standard";
  int ce_jobs = 1;
  ce->add_option("--main", ce_main, "Main source spec")->required();
  ce->add_option("--aux", ce_aux, "Auxiliary source spec");
  ce->add_option("--mode", ce_mode, "standard | tokenswap")->check(CLI::IsMember({"standard", "tokenswap"}))
      ->capture_default_str();
  add_dataset_options(ce, ce_data, "--dataset", "Held-out texts");
  ce->add_option("--gset", ce_gset, "Grammar word list (default: built-in)");
  ce->add_option("--jobs", ce_jobs, "Worker threads")->capture_default_str();

  // gamma
  auto* gam = app.add_subcommand("gamma", "Grammar-token share of a corpus");
  DatasetArgs gam_data;
  std::string gam_model, gam_gset;
  gam->add_option("--main", gam_model, "Source spec whose tokenizer is used")->required();
  add_dataset_options(gam, gam_data, "--corpus", "Corpus");
  gam->add_option("--gset", gam_gset, "Grammar word list (default: built-in)");

  // ablate-gsize
  auto* abl = app.add_subcommand("ablate-gsize", "Tokenswap extraction over grammar-set sizes");
  DatasetArgs abl_data;
  ts::ExperimentConfig abl_cfg;
  std::string abl_gset, abl_out;
  std::vector<std::size_t> abl_sizes;
  bool abl_strip = false;
  abl->add_option("--main", abl_cfg.main_spec, "Main source spec")->required();
  abl->add_option("--aux", abl_cfg.aux_spec, "Auxiliary source spec")->required();
  add_dataset_options(abl, abl_data, "--dataset", "Evaluation dataset");
  abl->add_option("--sizes", abl_sizes, "Grammar-set sizes")->delimiter(',')->required();
  abl->add_option("--wordlist", abl_gset, "Ordered word list (default: built-in)");
  abl->add_option("--prefix-tokens", abl_cfg.prefix_tokens, "Prompt length in tokens")->capture_default_str();
  abl->add_option("--gen-tokens", abl_cfg.gen_tokens, "Generation length in tokens")->capture_default_str();
  abl->add_option("--seed", abl_cfg.seed, "Base sampling seed")->capture_default_str();
  abl->add_option("--jobs", abl_cfg.jobs, "Worker threads")->capture_default_str();
  abl->add_flag("--strip-punct", abl_strip, "Strip punctuation before text metrics");
  abl->add_option("--out", abl_out, "Combined CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      const auto texts = ts::texts_of(train_data.load());
      if (train_aux_out.empty()) {
        const auto model = ts::NGramModel::train(texts, train_cfg.main);
        model.save(train_out);
        std::printf("trained %s -> %s\n", model.describe().c_str(), train_out.c_str());
      } else {
        const auto models = ts::run_induction(texts, train_cfg);
        models.main.save(train_out);
        models.aux.save(train_aux_out);
        std::printf("main: %s on %zu texts -> %s\naux: %s on %zu texts -> %s\n", models.main.describe().c_str(),
                    models.main_text_count, train_out.c_str(), models.aux.describe().c_str(), models.aux_text_count,
                    train_aux_out.c_str());
      }
    } else if (*gen) {
      const ts::DecodeMode mode = parse_modes({gen_mode}).front();
      const auto main_src = ts::load_source(gen_main, "main");
      ts::GenerationRecord rec;
      if (mode == ts::DecodeMode::MemFree) {
        if (gen_memfree_corpus.empty()) throw ts::Error(ts::ErrorKind::Usage, "memfree mode needs --memfree-corpus");
        const auto corpus = all_texts(ts::ingest(gen_memfree_corpus, ts::infer_dataset_format(gen_memfree_corpus)));
        const auto index = ts::MemFreeIndex::build(corpus, main_src->tokenizer(), gen_memfree_n);
        rec = ts::memfree_decode(*main_src, index, gen_prompt, gen_params);
      } else if (mode == ts::DecodeMode::TokenSwap) {
        if (gen_aux.empty()) throw ts::Error(ts::ErrorKind::Usage, "tokenswap mode needs --aux");
        const auto aux_src = ts::load_source(gen_aux, "aux");
        const auto swap = ts::SwapConfig::build(grammar_from(gen_gset), main_src->tokenizer(), aux_src->tokenizer());
        const ts::AuxiliaryModel aux{*aux_src, swap};
        rec = ts::decode(*main_src, &aux, gen_prompt, gen_params, mode);
      } else {
        rec = ts::decode(*main_src, nullptr, gen_prompt, gen_params, mode);
      }
      if (gen_trace) {
        std::cout << ts::generation_to_json(rec);
      } else {
        std::cout << rec.generated_text << "\n";
      }
    } else if (*mem) {
      mem_cfg.modes = parse_modes(mem_modes);
      mem_cfg.normalization = mem_strip ? ts::Normalization::StripPunctuation : ts::Normalization::None;
      mem_cfg.timestamp = !mem_no_timestamp;
      const auto records = mem_data.load();
      const auto main_src = ts::load_source(mem_cfg.main_spec, "main");
      std::unique_ptr<ts::ProbabilitySource> aux_src;
      std::optional<ts::SwapConfig> swap;
      std::optional<ts::MemFreeIndex> index;
      for (auto m : mem_cfg.modes) {
        if (m == ts::DecodeMode::TokenSwap && !aux_src) {
          if (mem_cfg.aux_spec.empty()) throw ts::Error(ts::ErrorKind::Usage, "tokenswap mode needs --aux");
          aux_src = ts::load_source(mem_cfg.aux_spec, "aux");
          swap.emplace(ts::SwapConfig::build(grammar_from(mem_gset), main_src->tokenizer(), aux_src->tokenizer()));
        }
        if (m == ts::DecodeMode::MemFree && !index) {
          const auto corpus =
              mem_memfree_corpus.empty()
                  ? all_texts(records)
                  : all_texts(ts::ingest(mem_memfree_corpus, ts::infer_dataset_format(mem_memfree_corpus)));
          index.emplace(ts::MemFreeIndex::build(corpus, main_src->tokenizer(), mem_cfg.memfree_n));
        }
      }
      const ts::ExperimentSources sources{*main_src, aux_src.get(), swap ? &*swap : nullptr,
                                          index ? &*index : nullptr};
      const auto report = ts::run_extraction(mem_cfg, sources, std::span<const ts::DatasetRecord>(records));
      ts::emit_report(report, mem_out, ts::ReportFormat::Json);
      if (!mem_csv.empty()) ts::emit_report(report, mem_csv, ts::ReportFormat::Csv);
      print_aggregates(report);
    } else if (*ce) {
      const auto texts = all_texts(ce_data.load());
      const auto main_src = ts::load_source(ce_main, "main");
      if (ce_mode == "standard") {
        std::printf("standard %.12f\n", ts::cross_entropy(*main_src, texts, ce_jobs));
      } else {
        if (ce_aux.empty()) throw ts::Error(ts::ErrorKind::Usage, "tokenswap mode needs --aux");
        const auto aux_src = ts::load_source(ce_aux, "aux");
        const auto swap = ts::SwapConfig::build(grammar_from(ce_gset), main_src->tokenizer(), aux_src->tokenizer());
        const ts::TokenSwapSource swapped(*main_src, *aux_src, swap);
        std::printf("tokenswap %.12f\n", ts::cross_entropy(swapped, texts, ce_jobs));
      }
    } else if (*gam) {
      const auto src = ts::load_source(gam_model, "main");
      const auto bound = ts::bind(grammar_from(gam_gset), src->tokenizer());
      const auto report = ts::measure_gamma(all_texts(gam_data.load()), src->tokenizer(), bound, gam_data.path);
      std::cout << ts::gamma_to_json(report);
    } else if (*abl) {
      abl_cfg.normalization = abl_strip ? ts::Normalization::StripPunctuation : ts::Normalization::None;
      abl_cfg.timestamp = false;
      const auto main_src = ts::load_source(abl_cfg.main_spec, "main");
      const auto aux_src = ts::load_source(abl_cfg.aux_spec, "aux");
      auto split = ts::split_tasks(abl_data.load(), abl_cfg.prefix_tokens, abl_cfg.gen_tokens,
                                   main_src->tokenizer(), abl_cfg.normalization);
      const auto result = ts::run_ablation(abl_cfg, *main_src, *aux_src, grammar_from(abl_gset), abl_sizes,
                                           split.tasks, split.too_short);
      ts::write_text_file(abl_out, ts::ablation_to_csv(result.reports, result.sizes));
      for (std::size_t i = 0; i < result.sizes.size(); ++i) {
        const auto* a = result.reports[i].find(ts::DecodeMode::TokenSwap);
        if (a) {
          std::printf("|G|=%-4zu EMR %.2f%%  ROUGE-L %.4f  ML %.3f\n", result.sizes[i], a->emr_percent,
                      a->mean_rouge_l, a->mean_ml_tokens);
        }
      }
    }
  } catch (const ts::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ts::ErrorKind::Usage ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
