#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "tokenswap/error.hpp"
#include "tokenswap/experiment.hpp"
#include "tokenswap/report.hpp"

using namespace tokenswap;

namespace {

const std::vector<std::string> kCorpus{
    "the cat sat on the mat with a dog and the bird",
    "my old friend walked to town in the rain without a coat",
};

struct Fixture {
  NGramModel main = NGramModel::train(kCorpus, {.order = 4, .dup_factor = 20});
  std::shared_ptr<const Tokenizer> tok{std::shared_ptr<const Tokenizer>{}, &main.tokenizer()};
  // Prefers "a" over every other grammar word.
  testutil::FnSource aux{tok, [this](std::span<const TokenId>) {
                           std::vector<double> p(main.vocabulary().size(), 0.01);
                           p[*main.vocabulary().find("a")] = 1.0;
                           return p;
                         }};
  SwapConfig swap = SwapConfig::identity(bind(default_grammar_set(), main.tokenizer()));
  std::vector<ExtractionTask> tasks{{"t1", "the cat sat", "on the mat with a dog and the bird", Normalization::None},
                                    {"t0", "my old friend", "walked to town in the rain without a coat",
                                     Normalization::None}};
  ExperimentConfig config() const {
    ExperimentConfig c;
    c.timestamp = false;
    c.main_spec = "main";
    c.aux_spec = "aux";
    return c;
  }
};

}  // namespace

TEST(RunExtraction, StandardMemorizedTokenSwapBroken) {
  Fixture f;
  const auto report = run_extraction(f.config(), {f.main, &f.aux, &f.swap, nullptr}, f.tasks);
  ASSERT_EQ(report.aggregates.size(), 2u);
  EXPECT_EQ(report.find(DecodeMode::Standard)->emr_percent, 100.0);
  EXPECT_EQ(report.find(DecodeMode::TokenSwap)->emr_percent, 0.0);
  ASSERT_EQ(report.per_sequence.size(), 4u);
  EXPECT_EQ(report.per_sequence[0].task_id, "t0");  // sorted by id
  EXPECT_EQ(report.per_sequence[0].mode, DecodeMode::Standard);
  EXPECT_EQ(report.per_sequence[1].mode, DecodeMode::TokenSwap);
  EXPECT_EQ(report.metadata.grammar_size, 110u);
  EXPECT_TRUE(report.metadata.gamma.has_value());
  EXPECT_FALSE(report.metadata.timestamp.has_value());
  EXPECT_TRUE(report.errors.empty());
}

TEST(RunExtraction, StandardResultsIgnoreAuxPresence) {
  Fixture f;
  auto cfg = f.config();
  cfg.modes = {DecodeMode::Standard};
  const auto with_aux = run_extraction(cfg, {f.main, &f.aux, &f.swap, nullptr}, f.tasks);
  const auto without = run_extraction(cfg, {f.main}, f.tasks);
  EXPECT_EQ(with_aux.per_sequence, without.per_sequence);
  EXPECT_EQ(with_aux.aggregates, without.aggregates);
}

TEST(RunExtraction, ParallelMatchesSerial) {
  Fixture f;
  auto cfg = f.config();
  cfg.temperature = 0.7;
  cfg.seed = 99;
  const auto serial = run_extraction(cfg, {f.main, &f.aux, &f.swap, nullptr}, f.tasks);
  cfg.jobs = 4;
  const auto parallel = run_extraction(cfg, {f.main, &f.aux, &f.swap, nullptr}, f.tasks);
  EXPECT_EQ(report_to_json(serial), report_to_json(parallel));
}

TEST(RunExtraction, FailuresGoToErrorManifest) {
  Fixture f;
  auto tasks = f.tasks;
  tasks.push_back({"t2", "", "x", Normalization::None});
  auto cfg = f.config();
  cfg.modes = {DecodeMode::Standard, DecodeMode::MemFree};
  const auto report = run_extraction(cfg, {f.main}, tasks);
  // Memfree without an index fails for every task; the empty prefix fails in both modes.
  EXPECT_EQ(report.errors.size(), 4u);
  EXPECT_EQ(report.per_sequence.size(), 2u);
  EXPECT_EQ(report.errors.front().task_id, "t0");
  EXPECT_EQ(report.errors.front().mode, "memfree");
}

TEST(RunExtraction, RecordsAreSplitWithMainTokenizer) {
  Fixture f;
  const std::vector<DatasetRecord> recs{{"long", kCorpus[0], Split::Eval}, {"short", "the cat", Split::Eval}};
  auto cfg = f.config();
  cfg.prefix_tokens = 3;
  cfg.modes = {DecodeMode::Standard};
  const auto report = run_extraction(cfg, {f.main}, std::span<const DatasetRecord>(recs));
  EXPECT_EQ(report.skipped, (std::vector<std::string>{"short"}));
  EXPECT_EQ(report.find(DecodeMode::Standard)->emr_percent, 100.0);
}

TEST(RunExtraction, ConfigValidation) {
  Fixture f;
  auto cfg = f.config();
  cfg.modes.clear();
  EXPECT_THROW(run_extraction(cfg, {f.main}, f.tasks), Error);
  cfg = f.config();
  cfg.rouge_threshold = 1.5;
  EXPECT_THROW(run_extraction(cfg, {f.main}, f.tasks), Error);
}

TEST(RunInduction, MainMemorizesAuxDoesNot) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 20; ++i) {
    corpus.push_back("story " + std::to_string(i) + " begins when item" + std::to_string(i) + " meets thing" +
                     std::to_string(i * 7) + " near place" + std::to_string(i * 3) + " at dusk");
  }
  const auto models = run_induction(corpus, {.main = {.order = 5, .dup_factor = 50}, .aux_disjoint = true});
  EXPECT_EQ(models.main_text_count, 10u);
  EXPECT_EQ(models.aux_text_count, 10u);
  EXPECT_EQ(models.main.order(), 5);
  EXPECT_EQ(models.aux.order(), 2);
  const std::span<const std::string> main_texts(corpus.data(), 10);
  for (const auto& text : main_texts) {
    const auto ids = models.main.tokenizer().encode(text);
    for (std::size_t k = 4; k < ids.size(); ++k) {
      const std::span<const TokenId> prefix(ids.data(), k);
      const auto rec = decode(models.main, nullptr, models.main.tokenizer().decode(prefix),
                              {.max_tokens = 64}, DecodeMode::Standard);
      ASSERT_EQ(rec.generated_tokens, std::vector<TokenId>(ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end()));
    }
  }
  EXPECT_THROW(run_induction(std::vector<std::string>{}, {}), Error);
  EXPECT_THROW(run_induction(std::vector<std::string>{"a"}, {.aux_disjoint = true}), Error);
}

TEST(RunAblation, SizeOneMatchesStandard) {
  Fixture f;
  const std::vector<std::size_t> sizes{1};
  const auto result = run_ablation(f.config(), f.main, f.aux, default_grammar_set(), sizes, f.tasks);
  ASSERT_EQ(result.reports.size(), 1u);
  auto cfg = f.config();
  cfg.modes = {DecodeMode::Standard};
  const auto standard = run_extraction(cfg, {f.main}, f.tasks);
  ASSERT_EQ(result.reports[0].per_sequence.size(), standard.per_sequence.size());
  for (std::size_t i = 0; i < standard.per_sequence.size(); ++i) {
    EXPECT_EQ(result.reports[0].per_sequence[i].scores, standard.per_sequence[i].scores);
    EXPECT_EQ(result.reports[0].per_sequence[i].generated_text, standard.per_sequence[i].generated_text);
  }
  EXPECT_THROW(run_ablation(f.config(), f.main, f.aux, default_grammar_set(), std::vector<std::size_t>{}, f.tasks),
               Error);
  EXPECT_THROW(run_ablation(f.config(), f.main, f.aux, default_grammar_set(), std::vector<std::size_t>{111}, f.tasks),
               Error);
}

#ifdef TOKENSWAP_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TOKENSWAP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  testutil::TempDir dir;
  {
    std::ofstream f(dir / "c.txt");
    for (const auto& t : kCorpus) f << t << "\n";
  }
  const std::string corpus = (dir / "c.txt").string();
  const std::string model = (dir / "m.bin").string();
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("train-ngram --corpus " + corpus), 2);
  EXPECT_EQ(run_cli("train-ngram --corpus " + corpus + " --order 4 --dup 5 --out " + model), 0);
  EXPECT_EQ(run_cli("generate --main ngram:" + model + " --prompt 'the cat' --max-tokens 4"), 0);
  EXPECT_EQ(run_cli("generate --main bogus:" + model + " --prompt x"), 2);
  EXPECT_EQ(run_cli("generate --main ngram:" + model + " --prompt x --mode beam"), 2);
  EXPECT_EQ(run_cli("generate --main ngram:" + (dir / "missing.bin").string() + " --prompt x"), 1);
  EXPECT_EQ(run_cli("eval-mem --main ngram:" + model + " --dataset " + corpus + " --prefix-tokens 3 --modes standard "
                    "--report " + (dir / "r.json").string()),
            0);
  EXPECT_EQ(run_cli("eval-mem --main ngram:" + model + " --dataset " + corpus + " --modes tokenswap --report " +
                    (dir / "r.json").string()),
            2);
  EXPECT_EQ(run_cli("eval-ce --main ngram:" + model + " --dataset " + corpus), 0);
  EXPECT_EQ(run_cli("gamma --main ngram:" + model + " --corpus " + corpus), 0);
  EXPECT_EQ(run_cli("ablate-gsize --main ngram:" + model + " --aux ngram:" + model + " --dataset " + corpus +
                    " --prefix-tokens 3 --sizes 1,5 --out " + (dir / "a.csv").string()),
            0);
  EXPECT_EQ(run_cli("ablate-gsize --main ngram:" + model + " --aux ngram:" + model + " --dataset " + corpus +
                    " --sizes 0 --out " + (dir / "a.csv").string()),
            1);
}
#endif
