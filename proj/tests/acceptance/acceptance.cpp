// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"
#include "tokenswap/dataset.hpp"
#include "tokenswap/experiment.hpp"
#include "tokenswap/grammar.hpp"
#include "tokenswap/memfree.hpp"
#include "tokenswap/metrics.hpp"
#include "tokenswap/ngram.hpp"
#include "tokenswap/report.hpp"
#include "tokenswap/swap.hpp"

namespace ts = tokenswap;

namespace {

// Pinned thresholds.
constexpr int kSwapTrials = 1000;
constexpr std::size_t kMinVocab = 4;
constexpr std::size_t kMaxVocab = 1000;
constexpr double kMassTol = 1e-9;
constexpr double kSingletonTol = 1e-12;
constexpr double kFixedPointTol = 1e-9;
constexpr double kSwapSeconds = 5.0;

constexpr std::size_t kEvalTexts = 200;
constexpr std::size_t kAuxTexts = 100;
constexpr int kMainOrder = 5;
constexpr std::uint64_t kDupFactor = 50;
constexpr int kAuxOrder = 2;
constexpr int kPrefixTokens = 20;
constexpr int kGenTokens = 128;
constexpr double kMinStandardEmr = 80.0;
constexpr double kMaxReductionRatio = 0.2;
constexpr double kInductionSeconds = 60.0;
constexpr double kOrderSweepSeconds = 180.0;

constexpr std::size_t kLevMaxLen = 4;
constexpr std::size_t kLcsMaxLen = 6;

constexpr std::size_t kHeldOutTexts = 50;
constexpr double kCeTol = 1e-9;

constexpr std::size_t kMinGammaTokens = 50000;
constexpr double kGammaLow = 0.15;
constexpr double kGammaHigh = 0.35;

constexpr int kMemFreeN = 10;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("C%d %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::filesystem::path kCorpus = std::filesystem::path(TOKENSWAP_DATA_DIR) / "desk_corpus.txt";

struct Desk {
  std::vector<ts::DatasetRecord> records;
  std::vector<std::string> texts;
  std::vector<ts::DatasetRecord> eval;  // the main model's training texts
  ts::InductionConfig induction;
};

Desk load_desk() {
  Desk d;
  d.records = ts::ingest(kCorpus, ts::DatasetFormat::Txt);
  d.texts = ts::texts_of(d.records);
  d.eval.assign(d.records.begin(), d.records.begin() + static_cast<std::ptrdiff_t>(kEvalTexts));
  d.induction.main = ts::NGramOptions{.order = kMainOrder, .dup_factor = kDupFactor, .lowercase = true};
  d.induction.aux_order = kAuxOrder;
  d.induction.aux_disjoint = true;
  d.induction.aux_texts = kAuxTexts;
  return d;
}

ts::ExperimentConfig extraction_config(std::vector<ts::DecodeMode> modes) {
  ts::ExperimentConfig cfg;
  cfg.prefix_tokens = kPrefixTokens;
  cfg.gen_tokens = kGenTokens;
  cfg.modes = std::move(modes);
  cfg.timestamp = false;
  cfg.jobs = 1;
  return cfg;
}

double emr(const ts::MemorizationReport& r, ts::DecodeMode mode) {
  const auto* a = r.find(mode);
  return a ? a->emr_percent : -1.0;
}

// 1: swap algebra on random triples.
void swap_algebra() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  int bad_untouched = 0, bad_gmass = 0, bad_total = 0, bad_singleton = 0, bad_fixed = 0;
  double worst_gmass = 0, worst_total = 0, worst_singleton = 0, worst_fixed = 0;
  for (int trial = 0; trial < kSwapTrials; ++trial) {
    const std::size_t n = kMinVocab + rng() % (kMaxVocab - kMinVocab + 1);
    std::vector<std::string> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) entries.push_back("w" + std::to_string(i));
    const auto tok = testutil::word_tokenizer(entries);
    const double share = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    std::vector<std::string> g;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::uniform_real_distribution<double>(0, 1)(rng) < share) g.push_back(entries[i]);
    }
    if (g.empty()) g.push_back(entries[rng() % n]);
    const auto cfg = ts::SwapConfig::identity(ts::bind(ts::GrammarSet(g, "random"), *tok));
    const auto p_main = ts::normalize(testutil::random_simplex(n, rng));
    const auto p_aux = ts::normalize(testutil::random_simplex(n, rng));
    const auto out = ts::swap_distribution(p_main, ts::map_aux_distribution(p_aux, cfg), cfg).dist;

    double g_in = 0, g_out = 0, total = 0;
    bool untouched_ok = true;
    for (ts::TokenId k = 0; k < n; ++k) {
      total += out[k];
      if (cfg.bound_main().contains(k)) {
        g_in += p_main[k];
        g_out += out[k];
      } else if (out[k] != p_main[k]) {
        untouched_ok = false;
      }
    }
    bad_untouched += !untouched_ok;
    worst_gmass = std::max(worst_gmass, std::abs(g_out - g_in));
    worst_total = std::max(worst_total, std::abs(total - 1.0));
    bad_gmass += std::abs(g_out - g_in) > kMassTol;
    bad_total += std::abs(total - 1.0) > kMassTol;

    // A single grammar token leaves the distribution unchanged.
    const auto one = ts::SwapConfig::identity(ts::bind(ts::GrammarSet({entries[rng() % n]}, "one"), *tok));
    const auto out1 = ts::swap_distribution(p_main, ts::map_aux_distribution(p_aux, one), one).dist;
    double d1 = 0;
    for (ts::TokenId k = 0; k < n; ++k) d1 = std::max(d1, std::abs(out1[k] - p_main[k]));
    worst_singleton = std::max(worst_singleton, d1);
    bad_singleton += d1 > kSingletonTol;

    // An auxiliary proportional to main on G is a fixed point.
    const double c = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    std::vector<double> prop(n);
    for (ts::TokenId k = 0; k < n; ++k) {
      prop[k] = cfg.bound_main().contains(k) ? c * p_main[k] : std::uniform_real_distribution<double>(0, 1)(rng);
    }
    std::vector<double> prop_on_g;
    for (ts::TokenId id : cfg.bound_main().token_ids()) prop_on_g.push_back(prop[id]);
    const auto outp = ts::swap_distribution(p_main, prop_on_g, cfg).dist;
    double dp = 0;
    for (ts::TokenId k = 0; k < n; ++k) dp = std::max(dp, std::abs(outp[k] - p_main[k]));
    worst_fixed = std::max(worst_fixed, dp);
    bad_fixed += dp > kFixedPointTol;
  }
  const double secs = seconds_since(t0);
  const bool ok = bad_untouched + bad_gmass + bad_total + bad_singleton + bad_fixed == 0 && secs < kSwapSeconds;
  report(1, ok,
         fmt("swap algebra, %d triples: untouched-mismatch %d, max |dG| %.2e, max |1-sum| %.2e, "
             "max |G|=1 dev %.2e, max fixed-point dev %.2e, %.2fs (limit %.0fs)",
             kSwapTrials, bad_untouched, worst_gmass, worst_total, worst_singleton, worst_fixed, secs,
             kSwapSeconds));
}

// 2: memorization reduction on the induced corpus. Returns the report for reuse.
ts::MemorizationReport induction_effect(const Desk& desk, const ts::InductionModels& models, double train_secs) {
  const auto t0 = Clock::now();
  const auto swap = ts::SwapConfig::build(ts::default_grammar_set(), models.main.tokenizer(), models.aux.tokenizer());
  const ts::ExperimentSources sources{models.main, &models.aux, &swap, nullptr};
  const auto rep = ts::run_extraction(extraction_config({ts::DecodeMode::Standard, ts::DecodeMode::TokenSwap}),
                                      sources, std::span<const ts::DatasetRecord>(desk.eval));
  const double secs = train_secs + seconds_since(t0);
  const double std_emr = emr(rep, ts::DecodeMode::Standard);
  const double ts_emr = emr(rep, ts::DecodeMode::TokenSwap);
  const std::size_t n = rep.find(ts::DecodeMode::Standard) ? rep.find(ts::DecodeMode::Standard)->count : 0;
  const bool ok = n == kEvalTexts && rep.errors.empty() && std_emr >= kMinStandardEmr &&
                  ts_emr <= kMaxReductionRatio * std_emr && secs < kInductionSeconds;
  report(2, ok,
         fmt("induction, %zu texts: standard EMR %.2f%% (min %.0f), tokenswap EMR %.2f%% (max %.2f), %.2fs "
             "(limit %.0fs)",
             n, std_emr, kMinStandardEmr, ts_emr, kMaxReductionRatio * std_emr, secs, kInductionSeconds));
  return rep;
}

// 3: EMR against main-model order.
void order_sweep(const Desk& desk) {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;
  double prev = -1;
  for (int order = 2; order <= kMainOrder; ++order) {
    ts::InductionConfig ic = desk.induction;
    ic.main.order = order;
    const auto models = ts::run_induction(desk.texts, ic);
    const auto swap =
        ts::SwapConfig::build(ts::default_grammar_set(), models.main.tokenizer(), models.aux.tokenizer());
    const ts::ExperimentSources sources{models.main, &models.aux, &swap, nullptr};
    const auto rep = ts::run_extraction(extraction_config({ts::DecodeMode::Standard, ts::DecodeMode::TokenSwap}),
                                        sources, std::span<const ts::DatasetRecord>(desk.eval));
    const double s = emr(rep, ts::DecodeMode::Standard);
    const double t = emr(rep, ts::DecodeMode::TokenSwap);
    ok = ok && rep.errors.empty() && s >= prev && t <= s;
    prev = s;
    detail += fmt("order %d %.1f/%.1f  ", order, s, t);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kOrderSweepSeconds;
  report(3, ok, fmt("order sweep (standard/tokenswap EMR %%): %s%.2fs (limit %.0fs)", detail.c_str(), secs,
                    kOrderSweepSeconds));
}

// 4: metric oracles.
void metric_oracles() {
  std::size_t lev_pairs = 0, lev_bad = 0;
  const auto strs = oracle::all_sequences<std::string>(std::string("ab"), kLevMaxLen);
  for (const auto& a : strs) {
    for (const auto& b : strs) {
      ++lev_pairs;
      lev_bad += ts::levenshtein(a, b) != oracle::edit_script_distance(a, b);
    }
  }
  std::size_t lcs_pairs = 0, lcs_bad = 0;
  const std::vector<std::string> words{"x", "y"};
  const auto seqs = oracle::all_sequences<std::vector<std::string>>(words, kLcsMaxLen);
  for (const auto& a : seqs) {
    for (const auto& b : seqs) {
      ++lcs_pairs;
      lcs_bad += ts::lcs_length(a, b) != oracle::lcs_by_enumeration(a, b);
    }
  }
  const std::size_t kitten = ts::levenshtein(std::string_view("kitten"), std::string_view("sitting"));
  const bool ok = lev_bad == 0 && lcs_bad == 0 && kitten == 3;
  report(4, ok,
         fmt("metric oracles: levenshtein %zu/%zu pairs agree, LCS %zu/%zu pairs agree, kitten/sitting = %zu",
             lev_pairs - lev_bad, lev_pairs, lcs_pairs - lcs_bad, lcs_pairs, kitten));
}

// 5: tokenswap with aux == main leaves cross-entropy unchanged.
void ce_fixed_point(const Desk& desk, const ts::InductionModels& models) {
  const auto first = desk.texts.begin() + static_cast<std::ptrdiff_t>(kEvalTexts);
  const std::vector<std::string> held_out(first, first + static_cast<std::ptrdiff_t>(kHeldOutTexts));
  const auto swap = ts::SwapConfig::identity(ts::bind(ts::default_grammar_set(), models.main.tokenizer()));
  const ts::TokenSwapSource swapped(models.main, models.main, swap);
  const double ce_std = ts::cross_entropy(models.main, held_out);
  const double ce_swap = ts::cross_entropy(swapped, held_out);
  const double diff = std::abs(ce_std - ce_swap);
  const bool ok = held_out.size() == kHeldOutTexts && std::isfinite(ce_std) && diff <= kCeTol;
  report(5, ok,
         fmt("CE fixed point, %zu held-out texts: standard %.12f nats, tokenswap %.12f nats, |diff| %.2e (tol %.0e)",
             held_out.size(), ce_std, ce_swap, diff, kCeTol));
}

// Word-level count that shares nothing with the library tokenizer: split on
// whitespace, detach ASCII punctuation, lowercase.
std::pair<std::size_t, std::size_t> count_grammar_tokens(const std::vector<std::string>& texts,
                                                         const std::unordered_set<std::string>& grammar) {
  const std::string punct = "!\"#%&'()*,-./:;?@[\\]_{}";
  std::size_t total = 0, hits = 0;
  auto flush = [&](std::string& w) {
    if (w.empty()) return;
    ++total;
    hits += grammar.contains(w);
    w.clear();
  };
  for (const auto& t : texts) {
    std::string w;
    for (char c : t) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        flush(w);
      } else if (punct.find(c) != std::string::npos) {
        flush(w);
        w = c;
        flush(w);
      } else {
        w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    flush(w);
  }
  return {total, hits};
}

// 6: grammar share of the bundled English sample.
void gamma_plausibility(const Desk& desk) {
  const auto model = ts::NGramModel::train(desk.texts, ts::NGramOptions{.order = 1, .lowercase = true});
  const auto gs = ts::default_grammar_set();
  const auto bound = ts::bind(gs, model.tokenizer());
  const auto g = ts::measure_gamma(desk.texts, model.tokenizer(), bound, kCorpus.string());
  const std::unordered_set<std::string> words(gs.words().begin(), gs.words().end());
  const auto [total, hits] = count_grammar_tokens(desk.texts, words);
  const bool routes_agree = total == g.token_count && hits == g.grammar_token_count;
  const bool ok = routes_agree && g.token_count >= kMinGammaTokens && g.gamma >= kGammaLow && g.gamma <= kGammaHigh;
  report(6, ok,
         fmt("gamma on %zu tokens (min %zu): %.4f, band [%.2f, %.2f]; independent count %zu/%zu %s", g.token_count,
             kMinGammaTokens, g.gamma, kGammaLow, kGammaHigh, hits, total, routes_agree ? "agrees" : "DISAGREES"));
}

// 7: memfree output never completes a training window.
void memfree_postcondition(const Desk& desk, const ts::InductionModels& models) {
  const auto& tok = models.main.tokenizer();
  const std::vector<std::string> train(desk.texts.begin(), desk.texts.begin() + static_cast<std::ptrdiff_t>(kEvalTexts));
  const auto index = ts::MemFreeIndex::build(train, tok, kMemFreeN);

  std::set<std::vector<ts::TokenId>> windows;
  for (const auto& t : train) {
    const auto ids = tok.encode(t);
    for (std::size_t i = 0; i + kMemFreeN <= ids.size(); ++i) {
      windows.emplace(ids.begin() + static_cast<std::ptrdiff_t>(i),
                      ids.begin() + static_cast<std::ptrdiff_t>(i + kMemFreeN));
    }
  }

  const auto split = ts::split_tasks(desk.eval, kPrefixTokens, kGenTokens, tok);
  ts::GenerationParams params;
  params.max_tokens = kGenTokens;
  std::size_t scanned = 0, hits = 0, flagged = 0, generated = 0;
  for (const auto& task : split.tasks) {
    const auto rec = ts::memfree_decode(models.main, index, task.prefix, params);
    std::vector<ts::TokenId> seq = rec.prompt_tokens;
    seq.insert(seq.end(), rec.generated_tokens.begin(), rec.generated_tokens.end());
    const std::set<std::size_t> flagged_steps(rec.flagged_steps.begin(), rec.flagged_steps.end());
    flagged += flagged_steps.size();
    generated += rec.generated_tokens.size();
    for (std::size_t step = 0; step < rec.generated_tokens.size(); ++step) {
      const std::size_t end = rec.prompt_tokens.size() + step + 1;
      if (end < static_cast<std::size_t>(kMemFreeN) || flagged_steps.contains(step)) continue;
      ++scanned;
      const std::vector<ts::TokenId> w(seq.begin() + static_cast<std::ptrdiff_t>(end - kMemFreeN),
                                       seq.begin() + static_cast<std::ptrdiff_t>(end));
      hits += windows.contains(w);
    }
  }
  const bool ok = split.tasks.size() == kEvalTexts && scanned > 0 && hits == 0;
  report(7, ok,
         fmt("memfree n=%d: %zu generations, %zu tokens, %zu windows re-scanned against %zu training windows, "
             "%zu present, %zu flagged steps excluded",
             kMemFreeN, split.tasks.size(), generated, scanned, windows.size(), hits, flagged));
}

// 8: grammar-size ablation.
void ablation(const Desk& desk, const ts::InductionModels& models, const ts::MemorizationReport& baseline) {
  const auto split = ts::split_tasks(desk.eval, kPrefixTokens, kGenTokens, models.main.tokenizer());
  const std::vector<std::size_t> sizes{1, 43, 110};
  const auto result = ts::run_ablation(extraction_config({ts::DecodeMode::TokenSwap}), models.main, models.aux,
                                       ts::default_grammar_set(), sizes, split.tasks, split.too_short);
  bool ok = result.reports.size() == sizes.size();
  std::string detail;
  double prev = 101;
  for (std::size_t i = 0; ok && i < sizes.size(); ++i) {
    const double e = emr(result.reports[i], ts::DecodeMode::TokenSwap);
    ok = ok && result.reports[i].errors.empty() && e <= prev;
    prev = e;
    detail += fmt("|G|=%zu %.1f%%  ", sizes[i], e);
  }
  // |G|=1 against the standard rows of the same tasks.
  std::vector<const ts::SequenceRow*> standard_rows;
  for (const auto& row : baseline.per_sequence) {
    if (row.mode == ts::DecodeMode::Standard) standard_rows.push_back(&row);
  }
  std::size_t differing = 0;
  const auto& single = result.reports.front().per_sequence;
  if (single.size() != standard_rows.size()) {
    differing = std::max(single.size(), standard_rows.size());
  } else {
    for (std::size_t i = 0; i < single.size(); ++i) {
      differing += single[i].task_id != standard_rows[i]->task_id ||
                   single[i].generated_text != standard_rows[i]->generated_text ||
                   !(single[i].scores == standard_rows[i]->scores);
    }
  }
  ok = ok && !single.empty() && differing == 0;
  report(8, ok,
         fmt("grammar-size ablation: %s|G|=1 vs standard: %zu of %zu generations differ", detail.c_str(), differing,
             single.size()));
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 9: the CLI report is byte-identical across runs.
void determinism(const Desk& desk) {
  testutil::TempDir dir;
  {
    std::ofstream eval(dir / "eval.txt", std::ios::binary);
    for (std::size_t i = 0; i < kEvalTexts; ++i) eval << desk.texts[i] << "\n";
  }
  const std::string cli = TOKENSWAP_CLI_PATH;
  const auto p = [&](const char* name) { return "'" + (dir / name).string() + "'"; };
  const int train_rc =
      run(cli + " train-ngram --corpus '" + kCorpus.string() + "' --order 5 --dup 50 --lowercase --out " +
          p("main.bin") + " --aux-out " + p("aux.bin") + " --aux-order 2 --aux-disjoint --aux-texts 100");
  const std::string eval_cmd = cli + " eval-mem --main ngram:" + (dir / "main.bin").string() +
                               " --aux ngram:" + (dir / "aux.bin").string() + " --dataset " + p("eval.txt") +
                               " --modes standard,tokenswap,memfree --seed 7 --no-timestamp --report ";
  const int rc1 = run(eval_cmd + p("r1.json"));
  const int rc2 = run(eval_cmd + p("r2.json"));
  std::string r1, r2;
  if (rc1 == 0 && rc2 == 0) {
    r1 = ts::read_text_file(dir / "r1.json");
    r2 = ts::read_text_file(dir / "r2.json");
  }
  const bool ok = train_rc == 0 && rc1 == 0 && rc2 == 0 && !r1.empty() && r1 == r2;
  report(9, ok,
         fmt("determinism: exit codes train %d, run1 %d, run2 %d; reports %zu and %zu bytes, %s", train_rc, rc1,
             rc2, r1.size(), r2.size(), !r1.empty() && r1 == r2 ? "identical" : "DIFFERENT"));
}

template <class F>
void guarded(int id, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, swap_algebra);

  Desk desk;
  std::optional<ts::InductionModels> models;
  double train_secs = 0;
  try {
    desk = load_desk();
    const auto t0 = Clock::now();
    models.emplace(ts::run_induction(desk.texts, desk.induction));
    train_secs = seconds_since(t0);
  } catch (const std::exception& e) {
    std::printf("setup failed: %s\n", e.what());
  }

  ts::MemorizationReport baseline;
  if (models) {
    guarded(2, [&] { baseline = induction_effect(desk, *models, train_secs); });
    guarded(3, [&] { order_sweep(desk); });
  } else {
    report(2, false, "no induced models");
    report(3, false, "no induced models");
  }
  guarded(4, metric_oracles);
  if (models) {
    guarded(5, [&] { ce_fixed_point(desk, *models); });
  } else {
    report(5, false, "no induced models");
  }
  guarded(6, [&] { gamma_plausibility(desk.texts.empty() ? load_desk() : desk); });
  if (models) {
    guarded(7, [&] { memfree_postcondition(desk, *models); });
    guarded(8, [&] { ablation(desk, *models, baseline); });
  } else {
    report(7, false, "no induced models");
    report(8, false, "no induced models");
  }
  guarded(9, [&] { determinism(desk.texts.empty() ? load_desk() : desk); });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
