#ifndef BIS_HARNESS_HPP
#define BIS_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bis/corpus.hpp"
#include "bis/error.hpp"
#include "bis/gmm.hpp"
#include "bis/pipeline.hpp"
#include "bis/rng.hpp"

/**
 * \file
 * \brief End-to-end validation: synthetic mixtures with known truth, reciprocal
 * cross-prediction over corpora, ablation sweeps and a ridge baseline.
 */

namespace bis {

// ---------------------------------------------------------------------------
// Score functions with known range [0, 1]

/// f(x) = 1 / (1 + exp(-(a.x + b)))
struct SigmoidLinear {
  Eigen::VectorXd a;
  double b = 0.0;
};

/// f(x) = exp(-|x - center|^2 / (2 width^2))
struct RbfBump {
  Eigen::VectorXd center;
  double width = 1.0;
};

/// f(x) = 1 if x_axis > threshold else 0
struct Indicator {
  Eigen::Index axis = 0;
  double threshold = 0.0;
};

/// f(x) = value
struct ConstantScore {
  double value = 0.5;
};

using ScoreFunction = std::variant<SigmoidLinear, RbfBump, Indicator, ConstantScore>;

inline double evaluate(const ScoreFunction& f, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::visit(
      [&](const auto& g) -> double {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, SigmoidLinear>) {
          return 1.0 / (1.0 + std::exp(-(g.a.dot(x) + g.b)));
        } else if constexpr (std::is_same_v<G, RbfBump>) {
          return std::exp(-(x - g.center).squaredNorm() / (2.0 * g.width * g.width));
        } else if constexpr (std::is_same_v<G, Indicator>) {
          return x(g.axis) > g.threshold ? 1.0 : 0.0;
        } else {
          return g.value;
        }
      },
      f);
}

inline std::vector<double> evaluate_rows(const ScoreFunction& f, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = evaluate(f, rows.row(i).transpose());
  }
  return out;
}

inline nlohmann::json to_json(const ScoreFunction& f) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return std::visit(
      [&](const auto& g) -> nlohmann::json {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, SigmoidLinear>) {
          return {{"kind", "sigmoid_linear"}, {"a", vec(g.a)}, {"b", g.b}};
        } else if constexpr (std::is_same_v<G, RbfBump>) {
          return {{"kind", "rbf_bump"}, {"center", vec(g.center)}, {"width", g.width}};
        } else if constexpr (std::is_same_v<G, Indicator>) {
          return {{"kind", "indicator"}, {"axis", g.axis}, {"threshold", g.threshold}};
        } else {
          return {{"kind", "constant"}, {"value", g.value}};
        }
      },
      f);
}

// ---------------------------------------------------------------------------
// Sampling and oracle

/// n i.i.d. rows from a diagonal mixture; row i depends only on (seed, i).
inline Eigen::MatrixXd sample_mixture(const GmmModel& mixture, Eigen::Index n, std::uint64_t seed) {
  mixture.validate();
  if (n < 1) {
    throw ConfigError("sample count must be positive");
  }
  const Eigen::Index d = mixture.dim();
  const Eigen::Index k = mixture.n_components();
  Eigen::VectorXd cdf(k);
  std::partial_sum(mixture.weights.begin(), mixture.weights.end(), cdf.begin());
  const Eigen::MatrixXd sd = mixture.variances.cwiseSqrt();
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    rng::Stream s(seed, static_cast<std::uint64_t>(i));
    const double u = s.uniform() * cdf(k - 1);
    Eigen::Index c = 0;
    while (c < k - 1 && (u > cdf(c) || mixture.weights(c) == 0.0)) {
      ++c;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      out(i, j) = mixture.means(c, j) + sd(c, j) * s.normal();
    }
  }
  return out;
}

struct OracleValue {
  double mean = 0.0;
  double std_error = 0.0;
  Eigen::Index n = 0;
};

inline constexpr Eigen::Index kMinOracleDraws = 10000;

/// Monte-Carlo E_target[f] with its standard error, streamed in blocks.
inline OracleValue oracle_expectation(const GmmModel& target, const ScoreFunction& f, Eigen::Index n_mc,
                                      std::uint64_t seed) {
  if (n_mc < kMinOracleDraws) {
    throw ConfigError("oracle needs at least " + std::to_string(kMinOracleDraws) + " draws");
  }
  constexpr Eigen::Index kBlock = 65536;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (Eigen::Index start = 0; start < n_mc; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, n_mc - start);
    const Eigen::MatrixXd x = sample_mixture(target, len, rng::derive(seed, static_cast<std::uint64_t>(start / kBlock)));
    for (Eigen::Index i = 0; i < len; ++i) {
      const double v = evaluate(f, x.row(i).transpose());
      sum += v;
      sum_sq += v * v;
    }
  }
  const double n = static_cast<double>(n_mc);
  OracleValue o;
  o.n = n_mc;
  o.mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * o.mean * o.mean) / (n - 1.0));
  o.std_error = std::sqrt(var / n);
  return o;
}

// ---------------------------------------------------------------------------
// Ridge baseline

struct RidgeModel {
  Eigen::VectorXd coefficients;  ///< intercept first, then one per input dimension
  double lambda = 0.0;
};

/// Solves (Xc'Xc + lambda I) beta = Xc'yc on centered data; the intercept is unpenalized.
inline RidgeModel fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const double> y, double lambda) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 1 || static_cast<std::size_t>(n) != y.size()) {
    throw DataError("ridge: need at least one row and one score per row");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("ridge: lambda must be finite and >= 0");
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = yv.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = xc.transpose() * (yv.array() - y_mean).matrix();
  Eigen::VectorXd beta;
  if (lambda > 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw NumericError("ridge: normal equations are not positive definite");
    }
    beta = llt.solve(rhs);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
      throw NumericError("ridge: singular system at lambda = 0; use lambda > 0");
    }
    beta = lu.solve(rhs);
  }
  RidgeModel m;
  m.lambda = lambda;
  m.coefficients.resize(d + 1);
  m.coefficients(0) = y_mean - x_mean.dot(beta);
  m.coefficients.tail(d) = beta;
  if (!m.coefficients.allFinite()) {
    throw NumericError("ridge: non-finite coefficients");
  }
  return m;
}

inline Eigen::VectorXd ridge_predict(const RidgeModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() + 1 != m.coefficients.size()) {
    throw DataError("ridge: input dimension mismatch");
  }
  return (x * m.coefficients.tail(x.cols())).array() + m.coefficients(0);
}

/// Mean of per-point predictions, clamped to [0, 1].
inline double ridge_predict_mean(const RidgeModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  return std::clamp(ridge_predict(m, x).mean(), 0.0, 1.0);
}

inline constexpr double kDefaultRidgeLambda = 1.0;

// ---------------------------------------------------------------------------
// Synthetic trials

/// Embeds d-dimensional draws into a larger ambient space: x A' + noise, A with orthonormal columns.
struct Lift {
  Eigen::Index ambient_dim = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  Eigen::MatrixXd basis(Eigen::Index d) const {
    if (ambient_dim < d) {
      throw ConfigError("lift: ambient dimension must be >= mixture dimension");
    }
    rng::Stream s(rng::derive(seed, 0xA11), 0);
    Eigen::MatrixXd g(ambient_dim, d);
    for (Eigen::Index c = 0; c < d; ++c) {
      for (Eigen::Index r = 0; r < ambient_dim; ++r) {
        g(r, c) = s.normal();
      }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(ambient_dim, d);
  }

  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x, std::uint64_t noise_seed) const {
    Eigen::MatrixXd out = x * basis(x.cols()).transpose();
    if (noise_std > 0.0) {
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        rng::Stream s(noise_seed, static_cast<std::uint64_t>(i));
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
          out(i, j) += noise_std * s.normal();
        }
      }
    }
    return out;
  }
};

struct SyntheticSpec {
  GmmModel source;
  GmmModel target;
  ScoreFunction score = ConstantScore{};
  Eigen::Index n_source = 1000;
  Eigen::Index n_target = 1000;
  std::uint64_t seed = 0;
  std::optional<Lift> lift;
  Eigen::Index oracle_draws = 1000000;

  void validate() const {
    source.validate();
    target.validate();
    if (source.dim() != target.dim()) {
      throw ConfigError("synthetic spec: source and target mixtures differ in dimension");
    }
    if (n_source < 2 || n_target < 2) {
      throw ConfigError("synthetic spec: need at least 2 source and 2 target samples");
    }
  }
};

inline nlohmann::json mixture_to_json(const GmmModel& m) {
  nlohmann::json j = nlohmann::json::object();
  j["weights"] = std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size());
  nlohmann::json means = nlohmann::json::array();
  nlohmann::json vars = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.n_components(); ++r) {
    const Eigen::VectorXd mr = m.means.row(r).transpose();
    const Eigen::VectorXd vr = m.variances.row(r).transpose();
    means.push_back(std::vector<double>(mr.data(), mr.data() + mr.size()));
    vars.push_back(std::vector<double>(vr.data(), vr.data() + vr.size()));
  }
  j["means"] = std::move(means);
  j["variances"] = std::move(vars);
  return j;
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
  nlohmann::json j = {{"dim", s.source.dim()},
                      {"source", mixture_to_json(s.source)},
                      {"target", mixture_to_json(s.target)},
                      {"score", to_json(s.score)},
                      {"n_source", s.n_source},
                      {"n_target", s.n_target},
                      {"seed", s.seed},
                      {"oracle_draws", s.oracle_draws}};
  if (s.lift) {
    j["lift"] = {{"ambient_dim", s.lift->ambient_dim}, {"noise_std", s.lift->noise_std}, {"seed", s.lift->seed}};
  }
  return j;
}

/**
 * Two-component, unit-variance mixtures in \p dim dimensions. The source has
 * means at -1 and +1 on every axis; the target is the source shifted by
 * \p separation (in component standard deviations) along the first axis.
 * Score: sigmoid(x_0 + 0.5 x_1).
 */
inline SyntheticSpec make_shift_spec(double separation, std::uint64_t seed, Eigen::Index dim = 2,
                                     Eigen::Index n = 1000) {
  if (dim < 2) {
    throw ConfigError("shift spec needs at least 2 dimensions");
  }
  SyntheticSpec s;
  s.source.weights = Eigen::Vector2d(0.5, 0.5);
  s.source.means.resize(2, dim);
  s.source.means.row(0).setConstant(-1.0);
  s.source.means.row(1).setConstant(1.0);
  s.source.variances = Eigen::MatrixXd::Ones(2, dim);
  s.target = s.source;
  s.target.means.col(0).array() += separation;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
  a(0) = 1.0;
  a(1) = 0.5;
  s.score = SigmoidLinear{a, 0.0};
  s.n_source = n;
  s.n_target = n;
  s.seed = seed;
  return s;
}

struct TrialResult {
  double estimate = 0.0;
  double oracle_truth = 0.0;
  double oracle_std_error = 0.0;
  double abs_error = 0.0;
  double source_mean = 0.0;  ///< unweighted source mean, the no-correction baseline
  double ridge_estimate = 0.0;
  ShiftDiagnostics diagnostics;
  nlohmann::json config;
};

inline nlohmann::json to_json(const TrialResult& t) {
  return {{"estimate", t.estimate},
          {"oracle_truth", t.oracle_truth},
          {"oracle_std_error", t.oracle_std_error},
          {"abs_error", t.abs_error},
          {"source_mean", t.source_mean},
          {"ridge_estimate", t.ridge_estimate},
          {"diagnostics", to_json(t.diagnostics)},
          {"config", t.config}};
}

/// Draws for one trial. Sources use stream seeds derived from spec.seed.
struct SyntheticDraws {
  Eigen::MatrixXd source_latent;
  Eigen::MatrixXd target_latent;
  Eigen::MatrixXd source_embeddings;
  Eigen::MatrixXd target_embeddings;
  std::vector<double> source_scores;
};

inline SyntheticDraws draw_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticDraws d;
  d.source_latent = sample_mixture(spec.source, spec.n_source, rng::derive(spec.seed, 11));
  d.target_latent = sample_mixture(spec.target, spec.n_target, rng::derive(spec.seed, 12));
  if (spec.lift) {
    d.source_embeddings = spec.lift->apply(d.source_latent, rng::derive(spec.seed, 13));
    d.target_embeddings = spec.lift->apply(d.target_latent, rng::derive(spec.seed, 14));
  } else {
    d.source_embeddings = d.source_latent;
    d.target_embeddings = d.target_latent;
  }
  d.source_scores = evaluate_rows(spec.score, d.source_latent);
  return d;
}

/// Oracle truth first, then the pipeline on fresh draws, then the comparison.
inline TrialResult run_synthetic_trial(const SyntheticSpec& spec, const PipelineConfig& cfg) {
  spec.validate();
  cfg.validate();
  const OracleValue truth = oracle_expectation(spec.target, spec.score, spec.oracle_draws, rng::derive(spec.seed, 10));
  const SyntheticDraws d = draw_synthetic(spec);
  const PipelineResult r = run_pipeline(d.source_embeddings, d.target_embeddings, d.source_scores, cfg);

  TrialResult t;
  t.estimate = r.estimate.prediction;
  t.oracle_truth = truth.mean;
  t.oracle_std_error = truth.std_error;
  t.abs_error = std::abs(t.estimate - t.oracle_truth);
  t.source_mean = std::accumulate(d.source_scores.begin(), d.source_scores.end(), 0.0) /
                  static_cast<double>(d.source_scores.size());
  const RidgeModel ridge =
      fit_ridge(r.space.apply_rows(d.source_embeddings), d.source_scores, kDefaultRidgeLambda);
  t.ridge_estimate = ridge_predict_mean(ridge, r.space.apply_rows(d.target_embeddings));
  t.diagnostics = r.estimate.diagnostics;
  t.config = {{"spec", to_json(spec)}, {"pipeline", to_json(cfg)}};
  return t;
}

// ---------------------------------------------------------------------------
// Corpus cross-prediction

struct CrossPrediction {
  WeightedEstimate estimate;
  std::optional<double> error;  ///< prediction - target mean, when the target carries the metric
  ScoreNormalizer normalizer;
  EmbeddingSpace space;
  DensityModel source_model;
  DensityModel target_model;
};

/**
 * Predicts the target corpus mean of \p metric from source scores. Scores are
 * min-max normalized; with the pooled scope and target scores present, the
 * range covers both corpora.
 */
inline CrossPrediction cross_predict(const Corpus& source, const Corpus& target, const std::string& metric,
                                     const PipelineConfig& cfg,
                                     NormalizerScope scope = NormalizerScope::kPooled) {
  if (source.empty() || target.empty()) {
    throw DataError("cross-prediction needs non-empty source and target corpora");
  }
  if (!source.has_all_embeddings() || !target.has_all_embeddings()) {
    throw DataError("cross-prediction needs embeddings for every source and target record");
  }
  if (source.dim != target.dim) {
    throw DataError("source and target embeddings differ in dimension");
  }
  const std::vector<double> raw_source = source.scores(metric);
  const bool evaluation = target.has_metric(metric);
  std::vector<double> raw_target;
  if (evaluation) {
    raw_target = target.scores(metric);
  }
  std::vector<double> fit_values = raw_source;
  if (scope == NormalizerScope::kPooled && evaluation) {
    fit_values.insert(fit_values.end(), raw_target.begin(), raw_target.end());
  }
  CrossPrediction out;
  out.normalizer = fit_normalizer(fit_values, scope, metric);
  const std::vector<double> source_scores = out.normalizer.apply(raw_source);

  PipelineResult r = run_pipeline(source.embedding_matrix(), target.embedding_matrix(), source_scores, cfg);
  out.estimate = std::move(r.estimate);
  out.space = std::move(r.space);
  out.source_model = std::move(r.source_model);
  out.target_model = std::move(r.target_model);
  if (evaluation) {
    out.error = evaluate_error(out.estimate.prediction, out.normalizer.apply(raw_target));
  }
  return out;
}

/// Seeded subset of \p size records (the whole corpus when size is 0 or >= n), in original order.
inline Corpus subsample(const Corpus& c, std::size_t size, std::uint64_t seed) {
  if (size == 0 || size >= c.size()) {
    return c;
  }
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng::Stream s(seed, 0);
  for (std::size_t i = 0; i < size; ++i) {
    std::swap(idx[i], idx[i + s.below(idx.size() - i)]);
  }
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  Corpus out;
  out.name = c.name;
  out.dim = c.dim;
  for (std::size_t i : idx) {
    out.records.push_back(c.records[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ablation sweeps

enum class SweepKind { kPcaDim, kKSamples, kPercentile, kSetSize };

inline SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "pca_dim") {
    return SweepKind::kPcaDim;
  }
  if (s == "k_samples") {
    return SweepKind::kKSamples;
  }
  if (s == "percentile") {
    return SweepKind::kPercentile;
  }
  if (s == "set_size") {
    return SweepKind::kSetSize;
  }
  throw ConfigError("unknown sweep '" + s + "' (expected pca_dim|k_samples|percentile|set_size)");
}

inline std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::kPcaDim:
      return "pca_dim";
    case SweepKind::kKSamples:
      return "k_samples";
    case SweepKind::kPercentile:
      return "percentile";
    case SweepKind::kSetSize:
      return "set_size";
  }
  return "";
}

/// Default grids: truncation percentiles, IWAE sample counts, PCA dimensions, prompt-set sizes (0 = full).
inline std::vector<double> default_sweep_values(SweepKind k) {
  switch (k) {
    case SweepKind::kPercentile:
      return {1.0, 0.95, 0.9, 0.85, 0.8};
    case SweepKind::kKSamples:
      return {1, 5, 10, 25, 50, 100};
    case SweepKind::kPcaDim:
      return {576, 384, 192};
    case SweepKind::kSetSize:
      return {0, 700, 500, 300, 100};
  }
  return {};
}

struct SweepRow {
  std::string sweep;
  double value = 0.0;
  std::size_t source_size = 0;
  std::size_t target_size = 0;
  std::uint64_t seed = 0;
  double prediction = 0.0;
  std::optional<double> truth;
  std::optional<double> error;
  ShiftDiagnostics diagnostics;
};

/// The pipeline config for one sweep point.
inline PipelineConfig apply_sweep_value(PipelineConfig cfg, SweepKind kind, double value) {
  switch (kind) {
    case SweepKind::kPercentile:
      cfg.percentile = value;
      break;
    case SweepKind::kKSamples:
      cfg.train.k_train = static_cast<int>(value);
      cfg.train.k_eval = std::max(cfg.train.k_eval, cfg.train.k_train);
      break;
    case SweepKind::kPcaDim:
      cfg.pca_dim = static_cast<Eigen::Index>(value);
      break;
    case SweepKind::kSetSize:
      break;
  }
  return cfg;
}

namespace detail {

inline std::vector<std::pair<double, double>> sweep_points(SweepKind kind, const std::vector<double>& values) {
  std::vector<std::pair<double, double>> out;
  if (values.empty()) {
    throw ConfigError("sweep needs at least one value");
  }
  if (kind == SweepKind::kSetSize) {
    for (double s : values) {
      for (double t : values) {
        out.emplace_back(s, t);
      }
    }
  } else {
    for (double v : values) {
      out.emplace_back(v, 0.0);
    }
  }
  return out;
}

inline std::size_t clamp_size(double requested, Eigen::Index available) {
  if (requested < 0.0) {
    throw ConfigError("set size must be >= 0");
  }
  const auto req = static_cast<std::size_t>(requested);
  return req == 0 ? static_cast<std::size_t>(available) : std::min(req, static_cast<std::size_t>(available));
}

}  // namespace detail

/**
 * One row per sweep point and seed on synthetic data. For set_size the grid
 * is source size x target size; each size takes a prefix of the i.i.d. draws.
 */
inline std::vector<SweepRow> run_synthetic_sweep(const SyntheticSpec& spec, const PipelineConfig& base, SweepKind kind,
                                                 const std::vector<double>& values,
                                                 const std::vector<std::uint64_t>& seeds) {
  std::vector<SweepRow> rows;
  for (std::uint64_t seed : seeds) {
    SyntheticSpec s = spec;
    s.seed = seed;
    const OracleValue truth = oracle_expectation(s.target, s.score, s.oracle_draws, rng::derive(seed, 10));
    const SyntheticDraws d = draw_synthetic(s);
    for (const auto& [v, v2] : detail::sweep_points(kind, values)) {
      PipelineConfig cfg = apply_sweep_value(base, kind, v);
      cfg.train.seed = rng::derive(base.train.seed, seed);
      std::size_t ns = static_cast<std::size_t>(d.source_embeddings.rows());
      std::size_t nt = static_cast<std::size_t>(d.target_embeddings.rows());
      if (kind == SweepKind::kSetSize) {
        ns = detail::clamp_size(v, d.source_embeddings.rows());
        nt = detail::clamp_size(v2, d.target_embeddings.rows());
      }
      const auto n_s = static_cast<Eigen::Index>(ns);
      const auto n_t = static_cast<Eigen::Index>(nt);
      const std::vector<double> scores(d.source_scores.begin(), d.source_scores.begin() + n_s);
      const PipelineResult r =
          run_pipeline(d.source_embeddings.topRows(n_s), d.target_embeddings.topRows(n_t), scores, cfg);
      SweepRow row;
      row.sweep = to_string(kind);
      row.value = v;
      row.source_size = ns;
      row.target_size = nt;
      row.seed = seed;
      row.prediction = r.estimate.prediction;
      row.truth = truth.mean;
      row.error = r.estimate.prediction - truth.mean;
      row.diagnostics = r.estimate.diagnostics;
      rows.push_back(row);
    }
  }
  return rows;
}

/// Sweep over a source/target corpus pair; errors are reported when the target carries the metric.
inline std::vector<SweepRow> run_corpus_sweep(const Corpus& source, const Corpus& target, const std::string& metric,
                                              const PipelineConfig& base, NormalizerScope scope, SweepKind kind,
                                              const std::vector<double>& values, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (const auto& [v, v2] : detail::sweep_points(kind, values)) {
    PipelineConfig cfg = apply_sweep_value(base, kind, v);
    Corpus s = source;
    Corpus t = target;
    if (kind == SweepKind::kSetSize) {
      s = subsample(source, detail::clamp_size(v, static_cast<Eigen::Index>(source.size())), rng::derive(seed, 21));
      t = subsample(target, detail::clamp_size(v2, static_cast<Eigen::Index>(target.size())), rng::derive(seed, 22));
    }
    const CrossPrediction cp = cross_predict(s, t, metric, cfg, scope);
    SweepRow row;
    row.sweep = to_string(kind);
    row.value = v;
    row.source_size = s.size();
    row.target_size = t.size();
    row.seed = seed;
    row.prediction = cp.estimate.prediction;
    row.error = cp.error;
    if (cp.error) {
      row.truth = cp.estimate.prediction - *cp.error;
    }
    row.diagnostics = cp.estimate.diagnostics;
    rows.push_back(row);
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "sweep,value,source_size,target_size,seed,prediction,truth,error,effective_sample_size,"
         "extreme_value_ratio,weight_variance,max_weight_share\n";
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v).dump() : std::string(); };
  for (const auto& r : rows) {
    out << r.sweep << ',' << nlohmann::json(r.value).dump() << ',' << r.source_size << ',' << r.target_size << ','
        << r.seed << ',' << nlohmann::json(r.prediction).dump() << ',' << opt(r.truth) << ',' << opt(r.error) << ','
        << nlohmann::json(r.diagnostics.effective_sample_size).dump() << ','
        << nlohmann::json(r.diagnostics.extreme_value_ratio).dump() << ','
        << nlohmann::json(r.diagnostics.weight_variance).dump() << ','
        << nlohmann::json(r.diagnostics.max_weight_share).dump() << '\n';
  }
}

}  // namespace bis

#endif  // BIS_HARNESS_HPP
