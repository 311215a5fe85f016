#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bis/cli.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kData = BIS_TEST_DATA;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("bis_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + BIS_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j, const std::string& name = "run.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

nlohmann::json gmm_predict_config() {
  return {{"source", (kData / "corpus" / "source.jsonl").string()},
          {"target", (kData / "corpus" / "target.jsonl").string()},
          {"density", "gmm"},
          {"gmm_components", 2},
          {"seed", 3}};
}

// ---------------------------------------------------------------------------
// Config parsing

TEST(Config, DefaultsAndOverrides) {
  const auto c = bis::cli::parse_config(
      {{"percentile", 0.8}, {"pca_dim", 4}, {"train", {{"epochs", 12}, {"k_eval", 7}}}, {"seed", 9}}, "/base");
  EXPECT_EQ(c.pipeline.percentile, 0.8);
  EXPECT_EQ(c.pipeline.pca_dim, 4);
  EXPECT_EQ(c.pipeline.train.epochs, 12);
  EXPECT_EQ(c.pipeline.train.k_eval, 7);
  EXPECT_EQ(c.pipeline.train.k_train, 10);
  EXPECT_EQ(c.effective_pipeline().train.seed, 9u);
  EXPECT_EQ(c.metric, "pass@1");
}

TEST(Config, RelativePathsResolveAgainstConfigDirectory) {
  const auto c = bis::cli::parse_config({{"source", "data/a.jsonl"}, {"target", "/abs/b.jsonl"}}, "/cfgdir");
  EXPECT_EQ(c.source, fs::path("/cfgdir/data/a.jsonl"));
  EXPECT_EQ(c.target, fs::path("/abs/b.jsonl"));
}

TEST(Config, UnknownKeysAndBadTypesRejected) {
  EXPECT_THROW(bis::cli::parse_config({{"percentil", 0.9}}, "."), bis::ConfigError);
  EXPECT_THROW(bis::cli::parse_config({{"train", {{"epoch", 3}}}}, "."), bis::ConfigError);
  EXPECT_THROW(bis::cli::parse_config({{"synthetic", {{"lift", {{"dim", 3}}}}}}, "."), bis::ConfigError);
  EXPECT_THROW(bis::cli::parse_config({{"percentile", "high"}}, "."), bis::ConfigError);
  EXPECT_THROW(bis::cli::parse_config({{"density", "flow"}}, "."), bis::ConfigError);
  try {
    bis::cli::parse_config({{"sweep", {{"grid", 1}}}}, ".");
    FAIL();
  } catch (const bis::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sweep.grid"), std::string::npos);
  }
}

TEST(Config, ValidateCatchesBadValues) {
  auto c = bis::cli::parse_config({{"percentile", 1.5}}, ".");
  EXPECT_THROW(c.validate(), bis::ConfigError);
  c = bis::cli::parse_config({{"sweep", {{"kind", "nope"}}}}, ".");
  EXPECT_THROW(c.validate(), bis::ConfigError);
  c = bis::cli::parse_config({{"sweep", {{"data", "elsewhere"}}}}, ".");
  EXPECT_THROW(c.validate(), bis::ConfigError);
}

TEST(Config, ShippedConfigsLoadAndValidate) {
  const fs::path dir = kData.parent_path().parent_path() / "configs";
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") {
      continue;
    }
    const auto c = bis::cli::load_config(e.path());
    EXPECT_NO_THROW(c.validate()) << e.path();
    if (!c.source.empty()) {
      EXPECT_TRUE(fs::exists(c.source)) << e.path();
    }
    ++n;
  }
  EXPECT_GE(n, 1);
}

TEST(Config, LoadErrors) {
  TempDir t;
  EXPECT_THROW(bis::cli::load_config(t.path() / "missing.json"), bis::ConfigError);
  std::ofstream(t.path() / "bad.json") << "{ not json";
  EXPECT_THROW(bis::cli::load_config(t.path() / "bad.json"), bis::ConfigError);
}

// ---------------------------------------------------------------------------
// Exit codes

TEST(Cli, PercentileOutOfRangeIsConfigError) {
  TempDir t;
  const auto cfg = write_config(t.path(), gmm_predict_config());
  const CliRun r = run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "o").string() + "\" --percentile 1.5 predict", t.path());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("config_error"), std::string::npos);
}

TEST(Cli, UnknownSubcommandOrFlagIsConfigError) {
  TempDir t;
  EXPECT_EQ(run_cli("frobnicate", t.path()).code, 1);
  EXPECT_EQ(run_cli("--nope 3 predict", t.path()).code, 1);
  EXPECT_EQ(run_cli("", t.path()).code, 1);
}

TEST(Cli, MissingMetricIsDataErrorNamingTheMetric) {
  TempDir t;
  const auto cfg = write_config(t.path(), gmm_predict_config());
  const CliRun r = run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "o").string() + "\" --metric bleu4 predict", t.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bleu4"), std::string::npos);
}

TEST(Cli, MissingInputFileIsDataError) {
  TempDir t;
  auto j = gmm_predict_config();
  j["source"] = (t.path() / "nope.jsonl").string();
  const auto cfg = write_config(t.path(), j);
  EXPECT_EQ(run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "o").string() + "\" predict", t.path()).code,
            2);
}

TEST(Cli, UnknownSweepIsConfigError) {
  TempDir t;
  const CliRun r = run_cli("ablate --sweep depth", t.path());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("depth"), std::string::npos);
}

TEST(Cli, PcaSweepAboveAmbientDimensionIsConfigError) {
  TempDir t;
  const CliRun r = run_cli("ablate --sweep pca_dim --values 4", t.path());
  EXPECT_EQ(r.code, 1);
}

// ---------------------------------------------------------------------------
// metrics

TEST(Cli, MetricsOnMixedDirectory) {
  TempDir t;
  const CliRun r = run_cli("metrics \"" + (kData / "code_mixed").string() + "\" --findings \"" +
                            (kData / "findings").string() + "\"",
                        t.path());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) {
    rows.push_back(nlohmann::json::parse(line));
  }
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["id"], "a_ok");
  EXPECT_EQ(rows[0]["status"], "ok");
  EXPECT_EQ(rows[0]["ss"], 100.0);
  EXPECT_EQ(rows[1]["id"], "b_broken");
  EXPECT_EQ(rows[1]["status"], "parse_error");
  EXPECT_TRUE(rows[1]["cc"].is_null());
  EXPECT_EQ(rows[2]["id"], "c_ok");
  EXPECT_EQ(rows[2]["ss"], 50.0);
  const auto summary_at = r.err.find("{\"summary\"");
  ASSERT_NE(summary_at, std::string::npos);
  const auto summary = nlohmann::json::parse(r.err.substr(summary_at, r.err.find('\n', summary_at) - summary_at));
  EXPECT_EQ(summary["summary"]["total"], 3);
  EXPECT_EQ(summary["summary"]["ok"], 2);
  EXPECT_EQ(summary["summary"]["skipped"], 1);
}

TEST(Cli, MetricsWithoutFindingsLeavesScoreEmpty) {
  TempDir t;
  const CliRun r = run_cli("metrics \"" + (kData / "code_mixed").string() + "\"", t.path());
  ASSERT_EQ(r.code, 0);
  const auto first = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  EXPECT_TRUE(first["ss"].is_null());
}

TEST(Cli, MetricsOnEmptyDirectory) {
  TempDir t;
  fs::create_directories(t.path() / "empty");
  const CliRun r = run_cli("metrics \"" + (t.path() / "empty").string() + "\"", t.path());
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, MetricsFromJsonl) {
  TempDir t;
  std::ofstream(t.path() / "code.jsonl") << R"({"id": "one", "code": "def f(x):\n    return x if x else 0\n"})"
                                         << "\n";
  const CliRun r = run_cli("--out \"" + (t.path() / "m.jsonl").string() + "\" metrics \"" +
                            (t.path() / "code.jsonl").string() + "\"",
                        t.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto row = nlohmann::json::parse(slurp(t.path() / "m.jsonl"));
  EXPECT_EQ(row["id"], "one");
  EXPECT_EQ(row["cc"], 2);
}

// ---------------------------------------------------------------------------
// predict / train-density / report

TEST(Cli, PredictWritesReportAndIsIdempotent) {
  TempDir t;
  const auto cfg = write_config(t.path(), gmm_predict_config());
  const CliRun a = run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "a").string() + "\" predict",
                        t.path());
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("prediction="), std::string::npos);
  const CliRun b = run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "b").string() + "\" predict",
                        t.path());
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"estimate.json", "source_model.json", "target_model.json", "embedding_space.json"}) {
    ASSERT_TRUE(fs::exists(t.path() / "a" / f)) << f;
  }
  // The report records its output directory, so compare everything but that.
  auto ja = nlohmann::json::parse(slurp(t.path() / "a" / "estimate.json"));
  auto jb = nlohmann::json::parse(slurp(t.path() / "b" / "estimate.json"));
  ja["config"].erase("out");
  jb["config"].erase("out");
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_EQ(slurp(t.path() / "a" / "target_model.json"), slurp(t.path() / "b" / "target_model.json"));
  EXPECT_TRUE(ja["estimate"].contains("prediction"));
  EXPECT_TRUE(ja["estimate"].contains("error"));
  EXPECT_TRUE(ja["estimate"]["diagnostics"].contains("effective_sample_size"));

  const CliRun rep = run_cli("report \"" + (t.path() / "a").string() + "\"", t.path());
  EXPECT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("prediction"), std::string::npos);
}

TEST(Cli, IdentityRunRecoversSourceMean) {
  TempDir t;
  const nlohmann::json j = {{"source", (kData / "corpus" / "source.jsonl").string()},
                            {"target", (kData / "corpus" / "source.jsonl").string()},
                            {"seed", 1}};
  const auto cfg = write_config(t.path(), j);
  const CliRun r = run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "o").string() + "\" predict",
                           t.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(slurp(t.path() / "o" / "estimate.json"));
  EXPECT_LE(std::abs(rep["estimate"]["error"].get<double>()), 0.02);
}

TEST(Cli, PredictWithSeparateEmbeddingFile) {
  TempDir t;
  auto j = gmm_predict_config();
  {
    // Prompt-only target: ids and prompts, no scores, embeddings in a separate file.
    std::ifstream in(kData / "corpus" / "target_prompts.jsonl");
    std::ofstream out(t.path() / "prompts.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      auto rec = nlohmann::json::parse(line);
      rec.erase("scores");
      out << rec.dump() << '\n';
    }
  }
  j["target"] = (t.path() / "prompts.jsonl").string();
  j["target_embeddings"] = (kData / "corpus" / "target_embeddings.jsonl").string();
  const auto cfg = write_config(t.path(), j);
  const CliRun r = run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "o").string() + "\" predict",
                        t.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(slurp(t.path() / "o" / "estimate.json"));
  EXPECT_FALSE(rep["estimate"].contains("error"));
}

TEST(Cli, TrainDensityRoundTrips) {
  TempDir t;
  auto j = gmm_predict_config();
  const auto cfg = write_config(t.path(), j);
  const CliRun r = run_cli("--config \"" + cfg.string() + "\" --out \"" + (t.path() / "o").string() + "\" train-density",
                        t.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto model = bis::load_model(t.path() / "o" / "model.json");
  EXPECT_TRUE(std::holds_alternative<bis::GmmModel>(model));
}

TEST(Cli, ReportRejectsUnknownInput) {
  TempDir t;
  std::ofstream(t.path() / "x.json") << R"({"command": "mystery"})";
  EXPECT_NE(run_cli("report \"" + (t.path() / "x.json").string() + "\"", t.path()).code, 0);
}

}  // namespace
