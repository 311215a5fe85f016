#ifndef BIS_CLI_HPP
#define BIS_CLI_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bis/codemetrics.hpp"
#include "bis/corpus.hpp"
#include "bis/density.hpp"
#include "bis/error.hpp"
#include "bis/harness.hpp"
#include "bis/pipeline.hpp"

/**
 * \file
 * \brief Run configuration and the bodies of the command-line subcommands.
 *
 * The config file is JSON. Relative paths in it resolve against the file's
 * directory; unknown keys are rejected so typos surface as config errors.
 */

namespace bis::cli {

namespace fs = std::filesystem;

struct SyntheticOptions {
  double separation = 1.0;
  Eigen::Index dim = 2;
  Eigen::Index n_source = 1000;
  Eigen::Index n_target = 1000;
  int trials = 10;
  Eigen::Index oracle_draws = 1000000;
  double tolerance = 0.05;
  std::optional<Lift> lift;
};

struct SweepOptions {
  std::string kind = "percentile";
  std::vector<double> values;  ///< empty: the default grid for the kind
  std::string data = "synthetic";
  int trials = 1;
};

struct RunConfig {
  fs::path source;
  fs::path target;
  fs::path source_embeddings;
  fs::path target_embeddings;
  fs::path out;
  fs::path code;
  fs::path findings;
  std::string metric = "pass@1";
  NormalizerScope normalizer = NormalizerScope::kPooled;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
  SyntheticOptions synthetic;
  SweepOptions sweep;

  /// Pipeline settings with the run seed folded in.
  PipelineConfig effective_pipeline() const {
    PipelineConfig p = pipeline;
    p.train.seed = seed;
    return p;
  }

  void validate() const {
    effective_pipeline().validate();
    if (metric.empty()) {
      throw ConfigError("metric must be non-empty");
    }
    if (synthetic.trials < 1 || sweep.trials < 1) {
      throw ConfigError("trial counts must be positive");
    }
    if (sweep.data != "synthetic" && sweep.data != "corpus") {
      throw ConfigError("sweep.data must be synthetic|corpus");
    }
    parse_sweep_kind(sweep.kind);
  }
};

namespace detail {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return;
  }
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: field '" + where + key + "' has the wrong type");
  }
}

inline void read_path(const nlohmann::json& j, const char* key, fs::path& out, const fs::path& base) {
  std::string s;
  read(j, key, s, "");
  if (!s.empty()) {
    const fs::path p(s);
    out = p.is_absolute() ? p : base / p;
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError("config: '" + where + "' must be an object");
  }
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
      throw ConfigError("config: unknown field '" + where + k + "'");
    }
  }
}

}  // namespace detail

/// Builds a RunConfig from JSON; \p base resolves relative paths.
inline RunConfig parse_config(const nlohmann::json& j, const fs::path& base) {
  using detail::read;
  detail::reject_unknown(j,
                         {"source", "target", "source_embeddings", "target_embeddings", "out", "code", "findings",
                          "metric", "normalizer", "seed", "density", "percentile", "pca_dim", "gmm_components",
                          "extreme_factor", "train", "synthetic", "sweep"},
                         "");
  RunConfig c;
  detail::read_path(j, "source", c.source, base);
  detail::read_path(j, "target", c.target, base);
  detail::read_path(j, "source_embeddings", c.source_embeddings, base);
  detail::read_path(j, "target_embeddings", c.target_embeddings, base);
  detail::read_path(j, "out", c.out, base);
  detail::read_path(j, "code", c.code, base);
  detail::read_path(j, "findings", c.findings, base);
  read(j, "metric", c.metric, "");
  std::string s;
  read(j, "normalizer", s, "");
  if (!s.empty()) {
    c.normalizer = parse_normalizer_scope(s);
  }
  read(j, "seed", c.seed, "");
  s.clear();
  read(j, "density", s, "");
  if (!s.empty()) {
    c.pipeline.density = parse_density_kind(s);
  }
  read(j, "percentile", c.pipeline.percentile, "");
  if (j.contains("pca_dim") && !j["pca_dim"].is_null()) {
    Eigen::Index d = 0;
    read(j, "pca_dim", d, "");
    c.pipeline.pca_dim = d;
  }
  read(j, "gmm_components", c.pipeline.gmm_components, "");
  read(j, "extreme_factor", c.pipeline.extreme_factor, "");
  if (auto it = j.find("train"); it != j.end()) {
    const auto& t = *it;
    detail::reject_unknown(t, {"epochs", "batch_size", "learning_rate", "k_train", "k_eval", "patience", "hidden", "latent"},
                           "train.");
    auto& tc = c.pipeline.train;
    read(t, "epochs", tc.epochs, "train.");
    read(t, "batch_size", tc.batch_size, "train.");
    read(t, "learning_rate", tc.learning_rate, "train.");
    read(t, "k_train", tc.k_train, "train.");
    read(t, "k_eval", tc.k_eval, "train.");
    read(t, "patience", tc.patience, "train.");
    read(t, "hidden", tc.hidden, "train.");
    read(t, "latent", tc.latent, "train.");
  }
  if (auto it = j.find("synthetic"); it != j.end()) {
    const auto& t = *it;
    detail::reject_unknown(t, {"separation", "dim", "n_source", "n_target", "trials", "oracle_draws", "tolerance", "lift"},
                           "synthetic.");
    auto& so = c.synthetic;
    read(t, "separation", so.separation, "synthetic.");
    read(t, "dim", so.dim, "synthetic.");
    read(t, "n_source", so.n_source, "synthetic.");
    read(t, "n_target", so.n_target, "synthetic.");
    read(t, "trials", so.trials, "synthetic.");
    read(t, "oracle_draws", so.oracle_draws, "synthetic.");
    read(t, "tolerance", so.tolerance, "synthetic.");
    if (auto l = t.find("lift"); l != t.end() && !l->is_null()) {
      detail::reject_unknown(*l, {"ambient_dim", "noise_std"}, "synthetic.lift.");
      Lift lift;
      read(*l, "ambient_dim", lift.ambient_dim, "synthetic.lift.");
      read(*l, "noise_std", lift.noise_std, "synthetic.lift.");
      so.lift = lift;
    }
  }
  if (auto it = j.find("sweep"); it != j.end()) {
    const auto& t = *it;
    detail::reject_unknown(t, {"kind", "values", "data", "trials"}, "sweep.");
    read(t, "kind", c.sweep.kind, "sweep.");
    read(t, "values", c.sweep.values, "sweep.");
    read(t, "data", c.sweep.data, "sweep.");
    read(t, "trials", c.sweep.trials, "sweep.");
  }
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

inline nlohmann::json to_json(const RunConfig& c) {
  auto p = [](const fs::path& x) { return x.empty() ? nlohmann::json(nullptr) : nlohmann::json(x.generic_string()); };
  nlohmann::json synth = {{"separation", c.synthetic.separation}, {"dim", c.synthetic.dim},
                          {"n_source", c.synthetic.n_source},     {"n_target", c.synthetic.n_target},
                          {"trials", c.synthetic.trials},         {"oracle_draws", c.synthetic.oracle_draws},
                          {"tolerance", c.synthetic.tolerance},   {"lift", nullptr}};
  if (c.synthetic.lift) {
    synth["lift"] = {{"ambient_dim", c.synthetic.lift->ambient_dim}, {"noise_std", c.synthetic.lift->noise_std}};
  }
  return {{"source", p(c.source)},
          {"target", p(c.target)},
          {"source_embeddings", p(c.source_embeddings)},
          {"target_embeddings", p(c.target_embeddings)},
          {"out", p(c.out)},
          {"code", p(c.code)},
          {"findings", p(c.findings)},
          {"metric", c.metric},
          {"normalizer", to_string(c.normalizer)},
          {"seed", c.seed},
          {"pipeline", bis::to_json(c.effective_pipeline())},
          {"synthetic", synth},
          {"sweep", {{"kind", c.sweep.kind}, {"values", c.sweep.values}, {"data", c.sweep.data}, {"trials", c.sweep.trials}}}};
}

// ---------------------------------------------------------------------------
// Shared helpers

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

inline void ensure_out_dir(const fs::path& dir) {
  if (dir.empty()) {
    throw ConfigError("an output directory is required (--out or \"out\")");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

/// Loads a corpus and, when given, joins a separate embedding file into it.
inline Corpus load_corpus_with_embeddings(const fs::path& corpus_path, const fs::path& embeddings_path,
                                          std::ostream& log) {
  if (corpus_path.empty()) {
    throw ConfigError("corpus path is required");
  }
  if (!fs::exists(corpus_path)) {
    throw DataError("corpus file does not exist: " + corpus_path.string());
  }
  Corpus c = load_corpus(corpus_path);
  if (!embeddings_path.empty()) {
    const JoinStats s = join_embeddings(c, load_embeddings(embeddings_path));
    log << "joined " << embeddings_path.filename().string() << ": matched=" << s.matched << " missing=" << s.missing
        << " unused=" << s.unused << '\n';
  }
  return c;
}

inline std::string diagnostics_line(const ShiftDiagnostics& d) {
  std::ostringstream s;
  s << "ess=" << d.effective_sample_size << " extreme_value_ratio=" << d.extreme_value_ratio
    << " weight_variance=" << d.weight_variance << " max_weight_share=" << d.max_weight_share;
  return s.str();
}

// ---------------------------------------------------------------------------
// predict

inline int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  ensure_out_dir(cfg.out);
  const Corpus source = load_corpus_with_embeddings(cfg.source, cfg.source_embeddings, log);
  const Corpus target = load_corpus_with_embeddings(cfg.target, cfg.target_embeddings, log);
  const CrossPrediction cp = cross_predict(source, target, cfg.metric, cfg.effective_pipeline(), cfg.normalizer);

  save_model(cp.source_model, cfg.out / "source_model.json");
  save_model(cp.target_model, cfg.out / "target_model.json");
  write_json(cfg.out / "embedding_space.json", to_json(cp.space));

  const std::vector<double> src = cp.normalizer.apply(source.scores(cfg.metric));
  nlohmann::json report = {{"command", "predict"},
                           {"config", to_json(cfg)},
                           {"source", {{"name", source.name}, {"n", source.size()}}},
                           {"target", {{"name", target.name}, {"n", target.size()}, {"has_scores", cp.error.has_value()}}},
                           {"normalizer",
                            {{"metric", cp.normalizer.metric},
                             {"min", cp.normalizer.min},
                             {"max", cp.normalizer.max},
                             {"scope", to_string(cp.normalizer.scope)}}},
                           {"source_mean", std::accumulate(src.begin(), src.end(), 0.0) / static_cast<double>(src.size())},
                           {"estimate", to_json(cp.estimate, cp.error)},
                           {"models", {{"source", "source_model.json"}, {"target", "target_model.json"},
                                       {"embedding_space", "embedding_space.json"}}}};
  write_json(cfg.out / "estimate.json", report);

  out << "prediction=" << cp.estimate.prediction;
  if (cp.error) {
    out << " error=" << *cp.error;
  }
  out << ' ' << diagnostics_line(cp.estimate.diagnostics) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train-density

/// Fits the embedding space and one density model on a single corpus.
inline int cmd_train_density(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  ensure_out_dir(cfg.out);
  const Corpus corpus = load_corpus_with_embeddings(cfg.source, cfg.source_embeddings, log);
  if (corpus.size() < 2) {
    throw DataError("train-density needs at least two records");
  }
  const PipelineConfig p = cfg.effective_pipeline();
  const Eigen::MatrixXd raw = corpus.embedding_matrix();
  const EmbeddingSpace space = fit_embedding_space(raw, p.pca_dim);
  const Eigen::MatrixXd rows = space.apply_rows(raw);
  const DensityModel model = fit_density(rows, p, p.source_seed());
  const Eigen::VectorXd lp = log_density_rows(model, rows, p.train.k_eval, p.eval_seed());

  save_model(model, cfg.out / "model.json");
  write_json(cfg.out / "embedding_space.json", to_json(space));
  const nlohmann::json report = {{"command", "train-density"},
                                 {"config", to_json(cfg)},
                                 {"corpus", {{"name", corpus.name}, {"n", corpus.size()}}},
                                 {"density", to_string(p.density)},
                                 {"input_dim", space.d_in()},
                                 {"model_dim", space.d_out()},
                                 {"mean_log_density", lp.mean()}};
  write_json(cfg.out / "train_density.json", report);
  out << "density=" << to_string(p.density) << " n=" << corpus.size() << " dim=" << space.d_out()
      << " mean_log_density=" << lp.mean() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct CodeSample {
  std::string id;
  std::string code;
};

/// A directory of *.py files (id = file stem, sorted) or a JSONL file of {"id", "code"}.
inline std::vector<CodeSample> load_code_samples(const fs::path& input) {
  std::vector<CodeSample> out;
  if (input.empty()) {
    throw ConfigError("metrics needs an input directory or JSONL file");
  }
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".py") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      if (!in) {
        throw DataError("cannot read " + f.string());
      }
      std::ostringstream ss;
      ss << in.rdbuf();
      out.push_back({f.stem().string(), ss.str()});
    }
    return out;
  }
  std::ifstream in(input);
  if (!in) {
    throw DataError("cannot read metrics input " + input.string());
  }
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("code").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(input.string() + ":" + std::to_string(n) + ": expected {\"id\", \"code\"} (" + e.what() + ")");
    }
  }
  return out;
}

struct MetricsSummary {
  std::size_t total = 0;
  std::size_t ok = 0;
  std::size_t skipped = 0;
  double mean_cc = 0.0;
  double mean_volume = 0.0;
  std::optional<double> mean_ss;
};

inline nlohmann::json to_json(const MetricsSummary& s) {
  return {{"total", s.total},
          {"ok", s.ok},
          {"skipped", s.skipped},
          {"mean_cc", s.ok ? nlohmann::json(s.mean_cc) : nlohmann::json(nullptr)},
          {"mean_volume", s.ok ? nlohmann::json(s.mean_volume) : nlohmann::json(nullptr)},
          {"mean_ss", s.mean_ss ? nlohmann::json(*s.mean_ss) : nlohmann::json(nullptr)}};
}

/// One JSONL line per sample to \p out; the summary line (with skip count) to \p log.
inline MetricsSummary run_metrics(const fs::path& input, const fs::path& findings_dir, std::ostream& out,
                                  std::ostream& log) {
  if (!findings_dir.empty() && !fs::is_directory(findings_dir)) {
    throw DataError("findings directory does not exist: " + findings_dir.string());
  }
  MetricsSummary s;
  double ss_sum = 0.0;
  std::size_t ss_n = 0;
  for (const auto& sample : load_code_samples(input)) {
    std::optional<std::vector<code::Finding>> findings;
    if (!findings_dir.empty()) {
      const fs::path f = findings_dir / (sample.id + ".json");
      if (fs::exists(f)) {
        findings = code::load_findings(f);
      }
    }
    const code::MetricReport r = code::compute_metrics(sample.id, sample.code, findings);
    out << code::to_json(r).dump() << '\n';
    ++s.total;
    if (r.ok) {
      ++s.ok;
      s.mean_cc += static_cast<double>(r.cc);
      s.mean_volume += r.halstead.volume;
      if (r.ss) {
        ss_sum += *r.ss;
        ++ss_n;
      }
    } else {
      ++s.skipped;
    }
  }
  if (s.ok) {
    s.mean_cc /= static_cast<double>(s.ok);
    s.mean_volume /= static_cast<double>(s.ok);
  }
  if (ss_n) {
    s.mean_ss = ss_sum / static_cast<double>(ss_n);
  }
  log << nlohmann::json{{"summary", to_json(s)}}.dump() << '\n';
  return s;
}

inline int cmd_metrics(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  if (cfg.out.empty()) {
    run_metrics(cfg.code, cfg.findings, out, log);
    return 0;
  }
  if (cfg.out.has_parent_path()) {
    ensure_out_dir(cfg.out.parent_path());
  }
  std::ofstream file(cfg.out);
  if (!file) {
    throw DataError("cannot write " + cfg.out.string());
  }
  run_metrics(cfg.code, cfg.findings, file, log);
  return 0;
}

// ---------------------------------------------------------------------------
// synthetic

inline SyntheticSpec synthetic_spec(const RunConfig& cfg, std::uint64_t trial_seed) {
  SyntheticSpec s = make_shift_spec(cfg.synthetic.separation, trial_seed, cfg.synthetic.dim);
  s.n_source = cfg.synthetic.n_source;
  s.n_target = cfg.synthetic.n_target;
  s.oracle_draws = cfg.synthetic.oracle_draws;
  if (cfg.synthetic.lift) {
    s.lift = cfg.synthetic.lift;
    s.lift->seed = rng::derive(cfg.seed, 0x11F7);
  }
  return s;
}

/// Per-trial data and training seeds, all derived from the run seed.
inline std::uint64_t trial_data_seed(std::uint64_t seed, int i) { return rng::derive(seed, 2 * static_cast<std::uint64_t>(i) + 100); }
inline std::uint64_t trial_train_seed(std::uint64_t seed, int i) { return rng::derive(seed, 2 * static_cast<std::uint64_t>(i) + 101); }

inline int cmd_synthetic(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  ensure_out_dir(cfg.out);
  std::ofstream trials(cfg.out / "trials.jsonl");
  if (!trials) {
    throw DataError("cannot write " + (cfg.out / "trials.jsonl").string());
  }
  std::vector<double> errors;
  std::vector<double> ess;
  int within = 0;
  for (int i = 0; i < cfg.synthetic.trials; ++i) {
    PipelineConfig p = cfg.effective_pipeline();
    p.train.seed = trial_train_seed(cfg.seed, i);
    const TrialResult t = run_synthetic_trial(synthetic_spec(cfg, trial_data_seed(cfg.seed, i)), p);
    nlohmann::json j = bis::to_json(t);
    j["trial"] = i;
    trials << j.dump() << '\n';
    errors.push_back(t.abs_error);
    ess.push_back(t.diagnostics.effective_sample_size);
    within += t.abs_error <= cfg.synthetic.tolerance ? 1 : 0;
    log << "trial " << i << ": estimate=" << t.estimate << " truth=" << t.oracle_truth << " abs_error=" << t.abs_error
        << '\n';
  }
  const double mean_err = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  const nlohmann::json summary = {{"command", "synthetic"},
                                  {"config", to_json(cfg)},
                                  {"trials", cfg.synthetic.trials},
                                  {"within_tolerance", within},
                                  {"tolerance", cfg.synthetic.tolerance},
                                  {"mean_abs_error", mean_err},
                                  {"max_abs_error", *std::max_element(errors.begin(), errors.end())},
                                  {"median_ess", median(ess)}};
  write_json(cfg.out / "summary.json", summary);
  out << "trials=" << cfg.synthetic.trials << " within_tolerance=" << within << " mean_abs_error=" << mean_err << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// ablate

inline std::vector<SweepRow> run_ablation(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const SweepKind kind = parse_sweep_kind(cfg.sweep.kind);
  const std::vector<double> values = cfg.sweep.values.empty() ? default_sweep_values(kind) : cfg.sweep.values;
  const PipelineConfig base = cfg.effective_pipeline();
  if (cfg.sweep.data == "corpus") {
    const Corpus source = load_corpus_with_embeddings(cfg.source, cfg.source_embeddings, log);
    const Corpus target = load_corpus_with_embeddings(cfg.target, cfg.target_embeddings, log);
    return run_corpus_sweep(source, target, cfg.metric, base, cfg.normalizer, kind, values, cfg.seed);
  }
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.sweep.trials; ++i) {
    seeds.push_back(trial_data_seed(cfg.seed, i));
  }
  SyntheticSpec spec = synthetic_spec(cfg, seeds.front());
  if (kind == SweepKind::kPcaDim) {
    const Eigen::Index ambient = spec.lift ? spec.lift->ambient_dim : spec.source.dim();
    const double top = *std::max_element(values.begin(), values.end());
    if (top > static_cast<double>(ambient)) {
      throw ConfigError("pca_dim sweep value " + nlohmann::json(top).dump() + " exceeds the embedding dimension " +
                        std::to_string(ambient) + " (set synthetic.lift.ambient_dim)");
    }
  }
  return run_synthetic_sweep(spec, base, kind, values, seeds);
}

inline int cmd_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto rows = run_ablation(cfg, log);
  if (cfg.out.empty()) {
    write_sweep_csv(out, rows);
    return 0;
  }
  ensure_out_dir(cfg.out);
  const fs::path csv = cfg.out / ("ablate_" + cfg.sweep.kind + ".csv");
  std::ofstream file(csv);
  if (!file) {
    throw DataError("cannot write " + csv.string());
  }
  write_sweep_csv(file, rows);
  write_json(cfg.out / ("ablate_" + cfg.sweep.kind + ".json"),
             {{"command", "ablate"}, {"config", to_json(cfg)}, {"rows", rows.size()}, {"csv", csv.filename().string()}});
  out << "sweep=" << cfg.sweep.kind << " rows=" << rows.size() << " csv=" << csv.generic_string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// report

/// Human-readable rendering of a report JSON written by another subcommand.
inline void render_report(const nlohmann::json& j, std::ostream& out) {
  const std::string cmd = j.value("command", "");
  if (cmd == "predict") {
    const auto& e = j.at("estimate");
    const auto& d = e.at("diagnostics");
    out << "predict " << j.at("source").at("name").get<std::string>() << " -> "
        << j.at("target").at("name").get<std::string>() << " [" << j.at("normalizer").at("metric").get<std::string>()
        << "]\n";
    out << "  prediction          " << e.at("prediction").get<double>() << '\n';
    out << "  source mean         " << j.at("source_mean").get<double>() << '\n';
    if (e.contains("error")) {
      out << "  error               " << e.at("error").get<double>() << '\n';
    }
    out << "  percentile          " << e.at("percentile").get<double>() << '\n';
    out << "  ess                 " << d.at("effective_sample_size").get<double>() << " of "
        << e.at("n_source").get<std::size_t>() << '\n';
    out << "  extreme_value_ratio " << d.at("extreme_value_ratio").get<double>() << '\n';
    out << "  weight_variance     " << d.at("weight_variance").get<double>() << '\n';
    out << "  max_weight_share    " << d.at("max_weight_share").get<double>() << '\n';
  } else if (cmd == "synthetic") {
    out << "synthetic trials=" << j.at("trials").get<int>() << '\n';
    out << "  within tolerance " << j.at("within_tolerance").get<int>() << " (<= " << j.at("tolerance").get<double>()
        << ")\n";
    out << "  mean abs error   " << j.at("mean_abs_error").get<double>() << '\n';
    out << "  max abs error    " << j.at("max_abs_error").get<double>() << '\n';
    out << "  median ess       " << j.at("median_ess").get<double>() << '\n';
  } else if (cmd == "train-density") {
    out << "train-density " << j.at("corpus").at("name").get<std::string>() << " (" << j.at("density").get<std::string>()
        << ")\n";
    out << "  n                " << j.at("corpus").at("n").get<std::size_t>() << '\n';
    out << "  dim              " << j.at("input_dim").get<long>() << " -> " << j.at("model_dim").get<long>() << '\n';
    out << "  mean log density " << j.at("mean_log_density").get<double>() << '\n';
  } else if (cmd == "ablate") {
    out << "ablate " << j.at("config").at("sweep").at("kind").get<std::string>() << " rows=" << j.at("rows").get<std::size_t>()
        << " csv=" << j.at("csv").get<std::string>() << '\n';
  } else {
    throw DataError("not a recognized report (command='" + cmd + "')");
  }
}

/// Renders each report file; a directory means every *.json report in it.
inline int cmd_report(const std::vector<fs::path>& inputs, std::ostream& out) {
  if (inputs.empty()) {
    throw ConfigError("report needs at least one report file or directory");
  }
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto name = e.path().filename().string();
        if (name == "estimate.json" || name == "summary.json" || name == "train_density.json" ||
            (name.rfind("ablate_", 0) == 0 && e.path().extension() == ".json")) {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  if (files.empty()) {
    throw DataError("no report files found");
  }
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) {
      throw DataError("cannot read report " + f.string());
    }
    try {
      render_report(nlohmann::json::parse(in), out);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("report " + f.string() + ": " + e.what());
    }
  }
  return 0;
}

}  // namespace bis::cli

#endif  // BIS_CLI_HPP
