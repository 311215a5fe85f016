#ifndef BIS_ESTIMATOR_HPP
#define BIS_ESTIMATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bis/error.hpp"

/**
 * \file
 * \brief Importance-weighted prediction of a target-set mean score.
 *
 * Raw weights are target/source density ratios at each source point. They
 * are clamped at a nearest-rank percentile, self-normalized, and used to
 * average the source scores.
 */

namespace bis {

inline constexpr double kDefaultPercentile = 0.9;
inline constexpr double kDefaultExtremeFactor = 10.0;

/**
 * w_i = exp(log_p_target_i - log_p_source_i).
 *
 * Ratios are returned unshifted whenever that is representable. If the
 * largest log-ratio would overflow, every log-ratio is shifted by the
 * maximum first; the common factor cancels in normalization. Results that
 * would underflow are floored at the smallest normal double so all weights
 * stay positive.
 */
inline std::vector<double> compute_raw_weights(std::span<const double> log_p_target,
                                               std::span<const double> log_p_source) {
  if (log_p_target.size() != log_p_source.size()) {
    throw DataError("log-density vectors differ in length (" + std::to_string(log_p_target.size()) + " vs " +
                    std::to_string(log_p_source.size()) + ")");
  }
  if (log_p_target.empty()) {
    throw DataError("no source points to weight");
  }
  std::vector<double> log_ratio(log_p_target.size());
  for (std::size_t i = 0; i < log_ratio.size(); ++i) {
    if (!std::isfinite(log_p_target[i]) || !std::isfinite(log_p_source[i])) {
      throw DataError("non-finite log density at source point " + std::to_string(i));
    }
    log_ratio[i] = log_p_target[i] - log_p_source[i];
  }
  const double max_lr = *std::max_element(log_ratio.begin(), log_ratio.end());
  constexpr double kMaxExp = 700.0;
  const double shift = max_lr > kMaxExp ? max_lr : 0.0;
  std::vector<double> w(log_ratio.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::max(std::exp(log_ratio[i] - shift), std::numeric_limits<double>::min());
  }
  return w;
}

/// 1-based nearest rank ceil(p * n), with p * n values within 1e-9 of an integer snapped to it.
inline std::size_t nearest_rank(double percentile, std::size_t n) {
  const double x = percentile * static_cast<double>(n);
  double k = std::ceil(x);
  if (k - x > 1.0 - 1e-9) {
    k -= 1.0;
  }
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

inline void check_percentile(double percentile) {
  if (!(percentile > 0.0 && percentile <= 1.0)) {
    throw ConfigError("percentile must lie in (0, 1], got " + std::to_string(percentile));
  }
}

/// The nearest-rank percentile value of \p raw (ascending order statistic ceil(p n)).
inline double truncation_threshold(std::span<const double> raw, double percentile) {
  check_percentile(percentile);
  if (raw.empty()) {
    throw DataError("cannot truncate an empty weight vector");
  }
  std::vector<double> sorted(raw.begin(), raw.end());
  const std::size_t k = nearest_rank(percentile, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

/// min(w_i, threshold) in input order.
inline std::vector<double> truncate_weights(std::span<const double> raw, double percentile) {
  const double threshold = truncation_threshold(raw, percentile);
  std::vector<double> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), [threshold](double w) { return std::min(w, threshold); });
  return out;
}

inline std::vector<double> normalize_weights(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw DataError("weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) {
    throw NumericError("weights sum to zero");
  }
  std::vector<double> out(weights.size());
  std::transform(weights.begin(), weights.end(), out.begin(), [sum](double w) { return w / sum; });
  return out;
}

struct WeightVector {
  std::vector<double> raw;
  std::vector<double> truncated;
  std::vector<double> normalized;
  double percentile = kDefaultPercentile;
};

/// Truncates at \p percentile and normalizes.
inline WeightVector make_weights(std::vector<double> raw, double percentile = kDefaultPercentile) {
  WeightVector w;
  w.truncated = truncate_weights(raw, percentile);
  w.normalized = normalize_weights(w.truncated);
  w.raw = std::move(raw);
  w.percentile = percentile;
  return w;
}

struct ShiftDiagnostics {
  double weight_variance = 0.0;      ///< variance of n * raw_i / sum(raw): 0 when weights are uniform
  double extreme_value_ratio = 0.0;  ///< fraction of raw weights above extreme_factor * median
  double effective_sample_size = 0.0;
  double max_weight_share = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) {
    throw DataError("median of an empty vector");
  }
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline ShiftDiagnostics diagnostics(const WeightVector& w, double extreme_factor = kDefaultExtremeFactor) {
  const std::size_t n = w.normalized.size();
  if (n == 0 || w.raw.size() != n) {
    throw DataError("diagnostics need matching, non-empty raw and normalized weights");
  }
  ShiftDiagnostics d;
  double sum_sq = 0.0;
  for (double x : w.normalized) {
    sum_sq += x * x;
  }
  d.effective_sample_size = 1.0 / sum_sq;
  d.max_weight_share = *std::max_element(w.normalized.begin(), w.normalized.end());

  const double raw_sum = std::accumulate(w.raw.begin(), w.raw.end(), 0.0);
  const double nd = static_cast<double>(n);
  double var = 0.0;
  for (double x : w.raw) {
    const double r = nd * x / raw_sum - 1.0;
    var += r * r;
  }
  d.weight_variance = var / nd;

  const double cutoff = extreme_factor * median(w.raw);
  const auto extreme = std::count_if(w.raw.begin(), w.raw.end(), [cutoff](double x) { return x > cutoff; });
  d.extreme_value_ratio = static_cast<double>(extreme) / nd;
  return d;
}

struct WeightedEstimate {
  double prediction = 0.0;
  WeightVector weights;
  ShiftDiagnostics diagnostics;
  std::size_t n_source = 0;
};

/// sum_i normalized_i * score_i.
inline double weighted_mean(std::span<const double> normalized, std::span<const double> scores) {
  if (normalized.size() != scores.size()) {
    throw DataError("weights and scores differ in length (" + std::to_string(normalized.size()) + " vs " +
                    std::to_string(scores.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    acc += normalized[i] * scores[i];
  }
  return acc;
}

/// sum_i w_i * score_i / sum_i w_i; equals weighted_mean of the normalized weights, exactly the plain mean when all w_i = 1.
inline double ratio_mean(std::span<const double> weights, std::span<const double> scores) {
  if (weights.size() != scores.size()) {
    throw DataError("weights and scores differ in length (" + std::to_string(weights.size()) + " vs " +
                    std::to_string(scores.size()) + ")");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    num += weights[i] * scores[i];
    den += weights[i];
  }
  if (!(den > 0.0)) {
    throw NumericError("weights sum to zero");
  }
  return num / den;
}

inline void check_unit_scores(std::span<const double> scores) {
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw DataError("normalized scores must lie in [0, 1]");
    }
  }
}

inline WeightedEstimate predict(WeightVector weights, std::span<const double> scores,
                                double extreme_factor = kDefaultExtremeFactor) {
  check_unit_scores(scores);
  WeightedEstimate e;
  e.prediction = std::clamp(ratio_mean(weights.truncated, scores), 0.0, 1.0);
  e.diagnostics = diagnostics(weights, extreme_factor);
  e.n_source = scores.size();
  e.weights = std::move(weights);
  return e;
}

/// Prediction from already-normalized weights; the weights double as raw weights for diagnostics.
inline WeightedEstimate predict(std::span<const double> normalized, std::span<const double> scores) {
  WeightVector w;
  w.raw.assign(normalized.begin(), normalized.end());
  w.truncated = w.raw;
  w.normalized = w.raw;
  w.percentile = 1.0;
  return predict(std::move(w), scores);
}

/// Full path: log densities -> raw -> truncated -> normalized -> prediction.
inline WeightedEstimate estimate(std::span<const double> log_p_target, std::span<const double> log_p_source,
                                 std::span<const double> scores, double percentile = kDefaultPercentile,
                                 double extreme_factor = kDefaultExtremeFactor) {
  return predict(make_weights(compute_raw_weights(log_p_target, log_p_source), percentile), scores, extreme_factor);
}

/// (1/n) sum_i w_i f_i with raw, unnormalized weights: the unbiased form, for oracle checks.
inline double unnormalized_mean(std::span<const double> raw, std::span<const double> scores) {
  if (raw.size() != scores.size() || raw.empty()) {
    throw DataError("unnormalized estimator needs equal-length, non-empty inputs");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    acc += raw[i] * scores[i];
  }
  return acc / static_cast<double>(raw.size());
}

/// prediction - mean(target scores). Positive means over-prediction.
inline double evaluate_error(double prediction, std::span<const double> target_scores) {
  if (target_scores.empty()) {
    throw DataError("cannot evaluate error against an empty target score vector");
  }
  check_unit_scores(target_scores);
  const double mean = std::accumulate(target_scores.begin(), target_scores.end(), 0.0) /
                      static_cast<double>(target_scores.size());
  return prediction - mean;
}

inline nlohmann::json to_json(const ShiftDiagnostics& d) {
  return {{"weight_variance", d.weight_variance},
          {"extreme_value_ratio", d.extreme_value_ratio},
          {"effective_sample_size", d.effective_sample_size},
          {"max_weight_share", d.max_weight_share}};
}

/// Estimate report. "error" is present only in evaluation mode.
inline nlohmann::json to_json(const WeightedEstimate& e, std::optional<double> error = std::nullopt) {
  nlohmann::json j = {{"prediction", e.prediction},
                      {"n_source", e.n_source},
                      {"percentile", e.weights.percentile},
                      {"diagnostics", to_json(e.diagnostics)}};
  if (error) {
    j["error"] = *error;
  }
  return j;
}

}  // namespace bis

#endif  // BIS_ESTIMATOR_HPP
