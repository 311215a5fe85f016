#ifndef BIS_GMM_HPP
#define BIS_GMM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bis/error.hpp"
#include "bis/iwae.hpp"
#include "bis/rng.hpp"

/**
 * \file
 * \brief Diagonal-covariance Gaussian mixtures fit by EM.
 */

namespace bis {

inline constexpr double kVarianceFloor = 1e-6;

/// Mixture of diagonal Gaussians. Also used to describe synthetic source/target distributions.
struct GmmModel {
  Eigen::VectorXd weights;    ///< n_components, on the simplex
  Eigen::MatrixXd means;      ///< n_components x d
  Eigen::MatrixXd variances;  ///< n_components x d

  Eigen::Index n_components() const noexcept { return weights.size(); }
  Eigen::Index dim() const noexcept { return means.cols(); }

  void validate() const {
    if (weights.size() < 1 || means.rows() != weights.size() || variances.rows() != weights.size() ||
        variances.cols() != means.cols() || means.cols() < 1) {
      throw ConfigError("mixture: inconsistent shapes");
    }
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
      throw ConfigError("mixture: weights must lie on the simplex");
    }
    if (!means.allFinite() || !variances.allFinite() || (variances.array() <= 0.0).any()) {
      throw ConfigError("mixture: means must be finite and variances positive");
    }
  }
};

namespace detail {

/// log w_k + log N(x; mu_k, diag var_k) for every component (n x K).
inline Eigen::MatrixXd component_log_joint(const GmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index k = model.n_components();
  const double d = static_cast<double>(model.dim());
  Eigen::MatrixXd out(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::RowVectorXd inv = model.variances.row(c).cwiseInverse();
    const double log_norm = std::log(model.weights(c)) - d * kHalfLog2Pi - 0.5 * model.variances.row(c).array().log().sum();
    const Eigen::MatrixXd diff = rows.rowwise() - model.means.row(c);
    out.col(c) = (log_norm - 0.5 * (diff.array().square().rowwise() * inv.array()).rowwise().sum()).matrix();
  }
  return out;
}

inline Eigen::VectorXd row_log_sum_exp(const Eigen::MatrixXd& a) {
  Eigen::VectorXd out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double mx = a.row(i).maxCoeff();
    out(i) = std::isfinite(mx) ? mx + std::log((a.row(i).array() - mx).exp().sum()) : mx;
  }
  return out;
}

}  // namespace detail

/// log sum_k w_k N(x; mu_k, diag var_k) for each row.
inline Eigen::VectorXd gmm_log_density_rows(const GmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.cols() != model.dim()) {
    throw DataError("GMM input dimension mismatch: got " + std::to_string(rows.cols()) + ", expected " +
                    std::to_string(model.dim()));
  }
  return detail::row_log_sum_exp(detail::component_log_joint(model, rows));
}

inline double gmm_log_density(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return gmm_log_density_rows(model, x.transpose())(0);
}

struct GmmTrace {
  std::vector<double> log_likelihood;  ///< total log-likelihood after each E step
  int reseeds = 0;
  bool converged = false;
};

inline constexpr int kGmmMaxIterations = 500;
inline constexpr double kGmmTolerance = 1e-6;

/**
 * EM for a diagonal GMM with k-means++ seeding. Stops when the mean per-point
 * log-likelihood improves by less than 1e-6 or after 500 iterations. A
 * component that loses all responsibility is re-seeded once at the point
 * with the lowest current density; a second collapse is an error.
 */
inline GmmModel train_gmm(const Eigen::Ref<const Eigen::MatrixXd>& data, Eigen::Index n_components, std::uint64_t seed,
                          GmmTrace* trace = nullptr) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n_components < 1) {
    throw ConfigError("GMM needs at least one component");
  }
  if (n < n_components) {
    throw DataError("GMM with " + std::to_string(n_components) + " components needs at least that many points, got " +
                    std::to_string(n));
  }
  if (d < 1 || !data.allFinite()) {
    throw DataError("GMM training data must be finite with at least one dimension");
  }

  const Eigen::RowVectorXd global_mean = data.colwise().mean();
  const Eigen::RowVectorXd global_var =
      ((data.rowwise() - global_mean).array().square().colwise().sum() / static_cast<double>(n)).cwiseMax(kVarianceFloor);

  // k-means++ seeding.
  rng::Stream stream(rng::derive(seed, 0x6a11), 0);
  GmmModel model;
  model.means.resize(n_components, d);
  model.means.row(0) = data.row(static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd dist2 = (data.rowwise() - model.means.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < n_components; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = stream.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        u -= dist2(pick);
        if (u <= 0.0) {
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(n)));
    }
    model.means.row(c) = data.row(pick);
    dist2 = dist2.cwiseMin((data.rowwise() - model.means.row(c)).rowwise().squaredNorm());
  }
  model.variances = global_var.replicate(n_components, 1);
  model.weights = Eigen::VectorXd::Constant(n_components, 1.0 / static_cast<double>(n_components));

  int reseeds = 0;
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kGmmMaxIterations; ++iter) {
    // E step
    Eigen::MatrixXd log_joint = detail::component_log_joint(model, data);
    const Eigen::VectorXd log_px = detail::row_log_sum_exp(log_joint);
    const double total = log_px.sum();
    if (!std::isfinite(total)) {
      throw NumericError("GMM EM: non-finite log-likelihood at iteration " + std::to_string(iter));
    }
    if (trace) {
      trace->log_likelihood.push_back(total);
    }
    if (iter > 0 && (total - previous) / static_cast<double>(n) < kGmmTolerance) {
      if (trace) {
        trace->converged = true;
      }
      break;
    }
    previous = total;
    const Eigen::MatrixXd resp = (log_joint.colwise() - log_px).array().exp().matrix();

    // M step
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    for (Eigen::Index c = 0; c < n_components; ++c) {
      if (nk(c) < 1e-10) {
        if (++reseeds > 1) {
          throw NumericError("GMM EM: component " + std::to_string(c) + " emptied again after re-seeding");
        }
        Eigen::Index worst = 0;
        log_px.minCoeff(&worst);
        model.means.row(c) = data.row(worst);
        model.variances.row(c) = global_var;
        model.weights(c) = 1.0 / static_cast<double>(n);
        continue;
      }
      const Eigen::RowVectorXd mu = (resp.col(c).transpose() * data) / nk(c);
      const Eigen::MatrixXd diff = data.rowwise() - mu;
      const Eigen::RowVectorXd var = (resp.col(c).transpose() * diff.array().square().matrix()) / nk(c);
      model.means.row(c) = mu;
      model.variances.row(c) = var.cwiseMax(kVarianceFloor);
      model.weights(c) = nk(c) / static_cast<double>(n);
    }
    model.weights /= model.weights.sum();
  }
  if (trace) {
    trace->reseeds = reseeds;
  }
  return model;
}

/// Posterior component probabilities for each row (n x K).
inline Eigen::MatrixXd gmm_responsibilities(const GmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  const Eigen::MatrixXd log_joint = detail::component_log_joint(model, rows);
  return (log_joint.colwise() - detail::row_log_sum_exp(log_joint)).array().exp().matrix();
}

}  // namespace bis

#endif  // BIS_GMM_HPP
