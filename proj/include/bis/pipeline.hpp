#ifndef BIS_PIPELINE_HPP
#define BIS_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bis/corpus.hpp"
#include "bis/density.hpp"
#include "bis/estimator.hpp"
#include "bis/rng.hpp"

/**
 * \file
 * \brief Embeddings in, predicted target mean out.
 *
 * 1. Fit one EmbeddingSpace on source and target embeddings together.
 * 2. Fit a density model per set in that space (same hyperparameters,
 *    independent seeds).
 * 3. Score every source point under both models with common noise.
 * 4. Raw weights -> truncation -> normalization -> weighted mean.
 */

namespace bis {

struct PipelineConfig {
  DensityKind density = DensityKind::kIwae;
  TrainConfig train;
  Eigen::Index gmm_components = 8;
  double percentile = kDefaultPercentile;
  std::optional<Eigen::Index> pca_dim;
  double extreme_factor = kDefaultExtremeFactor;

  void validate() const {
    train.validate();
    check_percentile(percentile);
    if (gmm_components < 1) {
      throw ConfigError("gmm_components must be positive");
    }
    if (!(extreme_factor > 0.0)) {
      throw ConfigError("extreme_factor must be positive");
    }
  }

  std::uint64_t source_seed() const noexcept { return rng::derive(train.seed, 1); }
  std::uint64_t target_seed() const noexcept { return rng::derive(train.seed, 2); }
  std::uint64_t eval_seed() const noexcept { return rng::derive(train.seed, 3); }
};

inline nlohmann::json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},       {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
          {"k_train", t.k_train},     {"k_eval", t.k_eval},         {"seed", t.seed},
          {"patience", t.patience},   {"hidden", t.hidden},         {"latent", t.latent}};
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"density", to_string(c.density)},
          {"train", to_json(c.train)},
          {"gmm_components", c.gmm_components},
          {"percentile", c.percentile},
          {"pca_dim", c.pca_dim ? nlohmann::json(*c.pca_dim) : nlohmann::json(nullptr)},
          {"extreme_factor", c.extreme_factor}};
}

/// Trains one density model on already-projected rows.
inline DensityModel fit_density(const Eigen::Ref<const Eigen::MatrixXd>& rows, const PipelineConfig& cfg,
                                std::uint64_t seed) {
  if (cfg.density == DensityKind::kGmm) {
    return train_gmm(rows, cfg.gmm_components, seed);
  }
  TrainConfig t = cfg.train;
  t.seed = seed;
  return train_iwae(rows, t);
}

struct PipelineResult {
  EmbeddingSpace space;
  DensityModel source_model;
  DensityModel target_model;
  std::vector<double> log_p_source;
  std::vector<double> log_p_target;
  WeightedEstimate estimate;
};

/// Weights and prediction for given models; \p source_rows must already be projected.
inline WeightedEstimate estimate_with_models(const DensityModel& source_model, const DensityModel& target_model,
                                             const Eigen::Ref<const Eigen::MatrixXd>& source_rows,
                                             std::span<const double> source_scores, const PipelineConfig& cfg,
                                             std::vector<double>* log_p_source = nullptr,
                                             std::vector<double>* log_p_target = nullptr) {
  const Eigen::VectorXd ls = log_density_rows(source_model, source_rows, cfg.train.k_eval, cfg.eval_seed());
  const Eigen::VectorXd lt = log_density_rows(target_model, source_rows, cfg.train.k_eval, cfg.eval_seed());
  std::vector<double> vs(ls.data(), ls.data() + ls.size());
  std::vector<double> vt(lt.data(), lt.data() + lt.size());
  auto est = estimate(vt, vs, source_scores, cfg.percentile, cfg.extreme_factor);
  if (log_p_source) {
    *log_p_source = std::move(vs);
  }
  if (log_p_target) {
    *log_p_target = std::move(vt);
  }
  return est;
}

/**
 * Runs the full pipeline on raw embeddings (rows are points). \p source_scores
 * must already be normalized to [0, 1].
 */
inline PipelineResult run_pipeline(const Eigen::Ref<const Eigen::MatrixXd>& source_embeddings,
                                   const Eigen::Ref<const Eigen::MatrixXd>& target_embeddings,
                                   std::span<const double> source_scores, const PipelineConfig& cfg) {
  cfg.validate();
  if (source_embeddings.cols() != target_embeddings.cols()) {
    throw DataError("source and target embeddings differ in dimension");
  }
  if (static_cast<std::size_t>(source_embeddings.rows()) != source_scores.size()) {
    throw DataError("source embeddings and scores differ in count");
  }
  Eigen::MatrixXd pooled(source_embeddings.rows() + target_embeddings.rows(), source_embeddings.cols());
  pooled << source_embeddings, target_embeddings;
  PipelineResult r{fit_embedding_space(pooled, cfg.pca_dim), {}, {}, {}, {}, {}};
  const Eigen::MatrixXd src = r.space.apply_rows(source_embeddings);
  const Eigen::MatrixXd tgt = r.space.apply_rows(target_embeddings);
  r.source_model = fit_density(src, cfg, cfg.source_seed());
  r.target_model = fit_density(tgt, cfg, cfg.target_seed());
  r.estimate = estimate_with_models(r.source_model, r.target_model, src, source_scores, cfg, &r.log_p_source,
                                    &r.log_p_target);
  return r;
}

}  // namespace bis

#endif  // BIS_PIPELINE_HPP
