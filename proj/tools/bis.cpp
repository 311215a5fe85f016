#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bis/cli.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> percentile;
  std::optional<long> pca_dim;
  std::optional<int> k_train;
  std::optional<int> k_eval;
  std::string metric;
};

bis::cli::RunConfig effective_config(const Overrides& o) {
  bis::cli::RunConfig c = o.config.empty() ? bis::cli::RunConfig{} : bis::cli::load_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
  }
  if (!o.out.empty()) {
    c.out = o.out;
  }
  if (o.percentile) {
    c.pipeline.percentile = *o.percentile;
  }
  if (o.pca_dim) {
    c.pipeline.pca_dim = *o.pca_dim;
  }
  if (o.k_train) {
    c.pipeline.train.k_train = *o.k_train;
  }
  if (o.k_eval) {
    c.pipeline.train.k_eval = *o.k_eval;
  }
  if (!o.metric.empty()) {
    c.metric = o.metric;
  }
  return c;
}

int fail(const char* kind, const std::string& what, int code) {
  std::cerr << "bis: " << kind << ": " << what << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark importance sampling: predict target-set scores from reweighted source scores"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "JSON run config");
  app.add_option("--seed", o.seed, "Run seed");
  app.add_option("--out", o.out, "Output directory (metrics: output file)");
  app.add_option("--percentile", o.percentile, "Truncation percentile in (0, 1]");
  app.add_option("--pca-dim", o.pca_dim, "Projected embedding dimension");
  app.add_option("--k-train", o.k_train, "IWAE samples per point during training");
  app.add_option("--k-eval", o.k_eval, "IWAE samples per point for log-density estimates");
  app.add_option("--metric", o.metric, "Score metric name");

  auto* predict = app.add_subcommand("predict", "Predict the target mean score and write the report");
  auto* train = app.add_subcommand("train-density", "Fit the embedding space and one density model on a corpus");
  std::string train_input;
  train->add_option("--input", train_input, "Corpus JSONL (default: config source)");

  auto* metrics = app.add_subcommand("metrics", "CC, Halstead and security score per code sample");
  std::string code_input;
  std::string findings;
  metrics->add_option("input", code_input, "Directory of .py files or JSONL of {id, code}");
  metrics->add_option("--findings", findings, "Directory of <id>.json security-linter reports");

  auto* ablate = app.add_subcommand("ablate", "Sweep one setting and write a CSV grid");
  std::string sweep;
  std::vector<double> values;
  ablate->add_option("--sweep", sweep, "pca_dim | k_samples | percentile | set_size");
  ablate->add_option("--values", values, "Sweep values (default: the standard grid)");

  auto* synthetic = app.add_subcommand("synthetic", "Seeded trials on mixtures with known truth");
  std::optional<int> trials;
  std::optional<double> separation;
  synthetic->add_option("--trials", trials, "Number of seeded trials");
  synthetic->add_option("--separation", separation, "Target shift in component standard deviations");

  auto* report = app.add_subcommand("report", "Render report files as text");
  std::vector<std::string> report_inputs;
  report->add_option("inputs", report_inputs, "Report JSON files or output directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    return fail("config_error", e.what(), 1);
  }

  try {
    if (*report) {
      std::vector<std::filesystem::path> paths(report_inputs.begin(), report_inputs.end());
      if (paths.empty() && !o.out.empty()) {
        paths.emplace_back(o.out);
      }
      return bis::cli::cmd_report(paths, std::cout);
    }
    bis::cli::RunConfig cfg = effective_config(o);
    if (*predict) {
      return bis::cli::cmd_predict(cfg, std::cout, std::cerr);
    }
    if (*train) {
      if (!train_input.empty()) {
        cfg.source = train_input;
        cfg.source_embeddings.clear();
      }
      return bis::cli::cmd_train_density(cfg, std::cout, std::cerr);
    }
    if (*metrics) {
      if (!code_input.empty()) {
        cfg.code = code_input;
      }
      if (!findings.empty()) {
        cfg.findings = findings;
      }
      return bis::cli::cmd_metrics(cfg, std::cout, std::cerr);
    }
    if (*ablate) {
      if (!sweep.empty()) {
        cfg.sweep.kind = sweep;
      }
      if (!values.empty()) {
        cfg.sweep.values = values;
      }
      return bis::cli::cmd_ablate(cfg, std::cout, std::cerr);
    }
    if (*synthetic) {
      if (trials) {
        cfg.synthetic.trials = *trials;
      }
      if (separation) {
        cfg.synthetic.separation = *separation;
      }
      return bis::cli::cmd_synthetic(cfg, std::cout, std::cerr);
    }
  } catch (const bis::ConfigError& e) {
    return fail("config_error", e.what(), 1);
  } catch (const bis::DataError& e) {
    return fail("data_error", e.what(), 2);
  } catch (const bis::NumericError& e) {
    return fail("numeric_error", e.what(), 3);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("data_error", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("numeric_error", e.what(), 3);
  }
  return 1;
}
