#ifndef BIS_IWAE_HPP
#define BIS_IWAE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bis/error.hpp"
#include "bis/rng.hpp"

/**
 * \file
 * \brief Importance-weighted autoencoder over real-valued embeddings.
 *
 * Encoder q(z|x) and decoder p(x|z) are one-hidden-layer tanh networks that
 * emit a diagonal Gaussian (mean and log-variance). The prior on z is N(0, I).
 * For K latent draws z_k ~ q(z|x) the bound is
 *
 *   log (1/K) sum_k p(x|z_k) p(z_k) / q(z_k|x),
 *
 * which for K = 1 is the ordinary VAE single-sample bound and which tightens
 * toward log p(x) as K grows. The same quantity with a large K serves as the
 * log-marginal estimate used for density ratios.
 */

namespace bis {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int k_train = 10;
  int k_eval = 128;
  std::uint64_t seed = 0;
  int patience = 50;  ///< epochs without a new best training bound before stopping
  int hidden = 64;
  int latent = 16;

  void validate() const {
    if (epochs <= 0 || batch_size <= 0 || k_train <= 0 || k_eval <= 0 || patience <= 0 || hidden <= 0 ||
        latent <= 0) {
      throw ConfigError("train config: epochs, batch_size, k_train, k_eval, patience, hidden, latent must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("train config: learning_rate must be positive");
    }
    if (k_eval < k_train) {
      throw ConfigError("train config: k_eval must be >= k_train");
    }
  }
};

/// Offsets of each parameter block inside the flat parameter vector.
struct IwaeLayout {
  Eigen::Index d = 0;
  Eigen::Index m = 0;
  Eigen::Index h = 0;

  Eigen::Index enc_w1() const { return 0; }
  Eigen::Index enc_b1() const { return enc_w1() + h * d; }
  Eigen::Index enc_w2() const { return enc_b1() + h; }
  Eigen::Index enc_b2() const { return enc_w2() + 2 * m * h; }
  Eigen::Index dec_w1() const { return enc_b2() + 2 * m; }
  Eigen::Index dec_b1() const { return dec_w1() + h * m; }
  Eigen::Index dec_w2() const { return dec_b1() + h; }
  Eigen::Index dec_b2() const { return dec_w2() + 2 * d * h; }
  Eigen::Index size() const { return dec_b2() + 2 * d; }
};

namespace detail {

template <class Vec>
struct IwaeViews {
  using Mat = std::conditional_t<std::is_const_v<Vec>, Eigen::Map<const Eigen::MatrixXd>, Eigen::Map<Eigen::MatrixXd>>;
  using Col = std::conditional_t<std::is_const_v<Vec>, Eigen::Map<const Eigen::VectorXd>, Eigen::Map<Eigen::VectorXd>>;

  IwaeViews(const IwaeLayout& l, Vec& p)
      : enc_w1(p.data() + l.enc_w1(), l.h, l.d),
        enc_b1(p.data() + l.enc_b1(), l.h),
        enc_w2(p.data() + l.enc_w2(), 2 * l.m, l.h),
        enc_b2(p.data() + l.enc_b2(), 2 * l.m),
        dec_w1(p.data() + l.dec_w1(), l.h, l.m),
        dec_b1(p.data() + l.dec_b1(), l.h),
        dec_w2(p.data() + l.dec_w2(), 2 * l.d, l.h),
        dec_b2(p.data() + l.dec_b2(), 2 * l.d) {}

  Mat enc_w1;
  Col enc_b1;
  Mat enc_w2;
  Col enc_b2;
  Mat dec_w1;
  Col dec_b1;
  Mat dec_w2;
  Col dec_b2;
};

}  // namespace detail

struct IwaeModel {
  IwaeLayout layout;
  Eigen::VectorXd params;
  int k_train = 10;
  std::uint64_t seed = 0;

  Eigen::Index dim() const noexcept { return layout.d; }
  Eigen::Index latent_dim() const noexcept { return layout.m; }
  Eigen::Index hidden_dim() const noexcept { return layout.h; }

  detail::IwaeViews<const Eigen::VectorXd> views() const { return {layout, params}; }
  detail::IwaeViews<Eigen::VectorXd> views() { return {layout, params}; }
};

namespace detail {

/// Forward pass plus the intermediates needed for the gradient.
struct IwaePass {
  Eigen::MatrixXd h1;      // h x B
  Eigen::MatrixXd z_mean;  // m x B
  Eigen::MatrixXd z_logvar;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> z_clamped;
  Eigen::MatrixXd eps;  // m x (B K), column b*K + k
  Eigen::MatrixXd z;    // m x (B K)
  Eigen::MatrixXd g;    // h x (B K)
  Eigen::MatrixXd x_mean;  // d x (B K)
  Eigen::MatrixXd x_logvar;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> x_clamped;
  Eigen::MatrixXd resid;  // x - x_mean
  Eigen::MatrixXd log_w;  // K x B
};

inline Eigen::MatrixXd clamp_logvar(const Eigen::MatrixXd& raw, Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& clamped) {
  clamped = (raw.array() < kLogVarMin) || (raw.array() > kLogVarMax);
  return raw.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
}

/// Runs the model on the columns of \p x (d x B) with the given noise (m x B K).
inline void iwae_forward(const IwaeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::MatrixXd eps, int k,
                         IwaePass& pass) {
  const auto v = model.views();
  const Eigen::Index m = model.layout.m;
  const Eigen::Index d = model.layout.d;
  const Eigen::Index b = x.cols();

  pass.h1 = ((v.enc_w1 * x).colwise() + v.enc_b1).array().tanh().matrix();
  Eigen::MatrixXd enc_out = (v.enc_w2 * pass.h1).colwise() + v.enc_b2;
  pass.z_mean = enc_out.topRows(m);
  pass.z_logvar = clamp_logvar(enc_out.bottomRows(m), pass.z_clamped);

  pass.eps = std::move(eps);
  pass.z.resize(m, b * k);
  Eigen::MatrixXd x_rep(d, b * k);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::VectorXd sd = (0.5 * pass.z_logvar.col(i)).array().exp();
    for (int s = 0; s < k; ++s) {
      const Eigen::Index c = i * k + s;
      pass.z.col(c) = pass.z_mean.col(i) + sd.cwiseProduct(pass.eps.col(c));
      x_rep.col(c) = x.col(i);
    }
  }

  pass.g = ((v.dec_w1 * pass.z).colwise() + v.dec_b1).array().tanh().matrix();
  Eigen::MatrixXd dec_out = (v.dec_w2 * pass.g).colwise() + v.dec_b2;
  pass.x_mean = dec_out.topRows(d);
  pass.x_logvar = clamp_logvar(dec_out.bottomRows(d), pass.x_clamped);
  pass.resid = x_rep - pass.x_mean;

  const Eigen::RowVectorXd log_px =
      (-kHalfLog2Pi - 0.5 * pass.x_logvar.array() -
       0.5 * pass.resid.array().square() * (-pass.x_logvar.array()).exp())
          .colwise()
          .sum();
  const Eigen::RowVectorXd log_pz = (-kHalfLog2Pi - 0.5 * pass.z.array().square()).colwise().sum();

  pass.log_w.resize(k, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    // -log q(z|x) written in terms of eps: z - mean = sd * eps.
    for (int s = 0; s < k; ++s) {
      const Eigen::Index c = i * k + s;
      const double log_q =
          (-kHalfLog2Pi - 0.5 * pass.z_logvar.col(i).array() - 0.5 * pass.eps.col(c).array().square()).sum();
      pass.log_w(s, i) = log_px(c) + log_pz(c) - log_q;
    }
  }
}

inline double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) {
    return mx;
  }
  return mx + std::log((v.array() - mx).exp().sum()) - std::log(static_cast<double>(v.size()));
}

/// Noise for one point: K draws of an m-vector from stream (seed, point_index).
inline Eigen::MatrixXd point_noise(std::uint64_t seed, std::uint64_t point_index, Eigen::Index m, int k) {
  rng::Stream stream(seed, point_index);
  Eigen::MatrixXd eps(m, k);
  for (int s = 0; s < k; ++s) {
    for (Eigen::Index j = 0; j < m; ++j) {
      eps(j, s) = stream.normal();
    }
  }
  return eps;
}

/**
 * Gradient of sum_b c * ELBO_K(x_b) with respect to the flat parameters,
 * using the reparameterized estimator and self-normalized sample weights.
 */
inline void iwae_backward(const IwaeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x, const IwaePass& pass,
                          int k, double scale, Eigen::VectorXd& grad) {
  const auto v = model.views();
  const IwaeLayout& l = model.layout;
  const Eigen::Index b = x.cols();
  grad.setZero(l.size());
  detail::IwaeViews<Eigen::VectorXd> gv(l, grad);

  // c_{bk} = scale * softmax_k(log_w)
  Eigen::RowVectorXd coef(b * k);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::VectorXd lw = pass.log_w.col(i);
    const Eigen::ArrayXd w = (lw.array() - lw.maxCoeff()).exp();
    const Eigen::ArrayXd wn = w / w.sum();
    for (int s = 0; s < k; ++s) {
      coef(i * k + s) = scale * wn(s);
    }
  }

  const Eigen::ArrayXXd inv_var = (-pass.x_logvar.array()).exp();
  Eigen::MatrixXd d_dec(2 * l.d, b * k);
  d_dec.topRows(l.d) = (pass.resid.array() * inv_var).rowwise() * coef.array();
  d_dec.bottomRows(l.d) =
      ((-0.5 + 0.5 * pass.resid.array().square() * inv_var).rowwise() * coef.array()) * (!pass.x_clamped).cast<double>();

  gv.dec_w2 = d_dec * pass.g.transpose();
  gv.dec_b2 = d_dec.rowwise().sum();
  const Eigen::MatrixXd d_ga = (v.dec_w2.transpose() * d_dec).array() * (1.0 - pass.g.array().square());
  gv.dec_w1 = d_ga * pass.z.transpose();
  gv.dec_b1 = d_ga.rowwise().sum();
  Eigen::MatrixXd d_z = v.dec_w1.transpose() * d_ga;
  d_z -= (pass.z.array().rowwise() * coef.array()).matrix();  // prior term

  Eigen::MatrixXd d_enc(2 * l.m, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::ArrayXd half_sd = 0.5 * (0.5 * pass.z_logvar.col(i).array()).exp();
    Eigen::ArrayXd d_mean = Eigen::ArrayXd::Zero(l.m);
    Eigen::ArrayXd d_lv = Eigen::ArrayXd::Zero(l.m);
    for (int s = 0; s < k; ++s) {
      const Eigen::Index c = i * k + s;
      d_mean += d_z.col(c).array();
      d_lv += d_z.col(c).array() * half_sd * pass.eps.col(c).array() + 0.5 * coef(c);
    }
    d_enc.col(i).head(l.m) = d_mean.matrix();
    d_enc.col(i).tail(l.m) = (d_lv * (!pass.z_clamped.col(i)).cast<double>()).matrix();
  }
  gv.enc_w2 = d_enc * pass.h1.transpose();
  gv.enc_b2 = d_enc.rowwise().sum();
  const Eigen::MatrixXd d_ha = (v.enc_w2.transpose() * d_enc).array() * (1.0 - pass.h1.array().square());
  gv.enc_w1 = d_ha * x.transpose();
  gv.enc_b1 = d_ha.rowwise().sum();
}

inline void init_params(IwaeModel& model, std::uint64_t seed) {
  rng::Stream stream(rng::derive(seed, 0x1417), 0);
  model.params.setZero(model.layout.size());
  auto v = model.views();
  auto glorot = [&](auto& w) {
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        w(r, c) = a * (2.0 * stream.uniform() - 1.0);
      }
    }
  };
  glorot(v.enc_w1);
  glorot(v.enc_w2);
  glorot(v.dec_w1);
  glorot(v.dec_w2);
}

}  // namespace detail

/// Per-epoch mean training bound, recorded by train_iwae.
struct IwaeTrace {
  std::vector<double> epoch_elbo;
  bool stopped_early = false;
};

/**
 * Fits an IWAE to the rows of \p data with Adam on the K_train-sample bound.
 * Deterministic given cfg.seed.
 */
inline IwaeModel train_iwae(const Eigen::Ref<const Eigen::MatrixXd>& data, const TrainConfig& cfg,
                            IwaeTrace* trace = nullptr) {
  cfg.validate();
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) {
    throw DataError("IWAE training needs at least 2 points, got " + std::to_string(n));
  }
  if (d < 1) {
    throw DataError("IWAE training needs at least one input dimension");
  }
  if (!data.allFinite()) {
    throw DataError("IWAE training data contains non-finite values");
  }

  IwaeModel model;
  model.layout = {d, cfg.latent, cfg.hidden};
  model.k_train = cfg.k_train;
  model.seed = cfg.seed;
  detail::init_params(model, cfg.seed);

  const Eigen::MatrixXd xt = data.transpose();  // d x n, columns are points
  const Eigen::Index p = model.layout.size();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad(p);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  const int k = cfg.k_train;
  const std::uint64_t noise_seed = rng::derive(cfg.seed, 0x7a1);
  const std::uint64_t shuffle_seed = rng::derive(cfg.seed, 0x5f1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  double best = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::uint64_t step = 0;
  detail::IwaePass pass;
  Eigen::MatrixXd batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng::Stream shuffle(shuffle_seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.below(i)]);
    }
    double epoch_sum = 0.0;
    int batch_index = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size, ++batch_index, ++step) {
      const Eigen::Index bsz = std::min<Eigen::Index>(cfg.batch_size, n - start);
      batch.resize(d, bsz);
      for (Eigen::Index j = 0; j < bsz; ++j) {
        batch.col(j) = xt.col(order[static_cast<std::size_t>(start + j)]);
      }
      rng::Stream noise(noise_seed, step);
      Eigen::MatrixXd eps(model.layout.m, bsz * k);
      for (Eigen::Index c = 0; c < eps.cols(); ++c) {
        for (Eigen::Index r = 0; r < eps.rows(); ++r) {
          eps(r, c) = noise.normal();
        }
      }
      detail::iwae_forward(model, batch, std::move(eps), k, pass);
      double batch_sum = 0.0;
      for (Eigen::Index j = 0; j < bsz; ++j) {
        batch_sum += detail::log_mean_exp(pass.log_w.col(j));
      }
      if (!std::isfinite(batch_sum)) {
        throw NumericError("IWAE training: non-finite bound at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batch_index));
      }
      epoch_sum += batch_sum;

      detail::iwae_backward(model, batch, pass, k, 1.0 / static_cast<double>(bsz), grad);
      if (!grad.allFinite()) {
        throw NumericError("IWAE training: non-finite gradient at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batch_index));
      }
      // Adam ascent on the bound.
      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      m1 = kBeta1 * m1 + (1.0 - kBeta1) * grad;
      m2 = kBeta2 * m2 + (1.0 - kBeta2) * grad.cwiseAbs2();
      const double lr = cfg.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
      model.params.array() += lr * m1.array() / (m2.array().sqrt() + kEps);
    }
    const double mean_bound = epoch_sum / static_cast<double>(n);
    if (trace) {
      trace->epoch_elbo.push_back(mean_bound);
    }
    if (mean_bound > best) {
      best = mean_bound;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      if (trace) {
        trace->stopped_early = true;
      }
      break;
    }
  }
  return model;
}

/**
 * K-sample importance-weighted bound at one point. \p point_index selects the
 * noise stream, so a point scored inside a batch gets the same draws as when
 * scored alone with the same index.
 */
inline double iwae_elbo(const IwaeModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int k, std::uint64_t seed,
                        std::uint64_t point_index = 0) {
  if (x.size() != model.dim()) {
    throw DataError("IWAE input dimension mismatch: got " + std::to_string(x.size()) + ", expected " +
                    std::to_string(model.dim()));
  }
  if (k < 1) {
    throw ConfigError("IWAE sample count must be >= 1");
  }
  detail::IwaePass pass;
  detail::iwae_forward(model, x, detail::point_noise(seed, point_index, model.latent_dim(), k), k, pass);
  return detail::log_mean_exp(pass.log_w.col(0));
}

/// Importance-weighted estimate of log p(x) with K_eval samples.
inline double log_marginal(const IwaeModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int k_eval,
                           std::uint64_t seed, std::uint64_t point_index = 0) {
  return iwae_elbo(model, x, k_eval, seed, point_index);
}

/// Log-marginal estimates for every row of \p rows; row i uses noise stream i.
inline Eigen::VectorXd log_marginal_rows(const IwaeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows, int k_eval,
                                    std::uint64_t seed) {
  if (rows.cols() != model.dim()) {
    throw DataError("IWAE input dimension mismatch: got " + std::to_string(rows.cols()) + ", expected " +
                    std::to_string(model.dim()));
  }
  if (k_eval < 1) {
    throw ConfigError("IWAE sample count must be >= 1");
  }
  constexpr Eigen::Index kChunk = 32;
  const Eigen::Index n = rows.rows();
  const Eigen::Index m = model.latent_dim();
  Eigen::VectorXd out(n);
  detail::IwaePass pass;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index bsz = std::min(kChunk, n - start);
    Eigen::MatrixXd eps(m, bsz * k_eval);
    for (Eigen::Index j = 0; j < bsz; ++j) {
      eps.middleCols(j * k_eval, k_eval) = detail::point_noise(seed, static_cast<std::uint64_t>(start + j), m, k_eval);
    }
    const Eigen::MatrixXd x = rows.middleRows(start, bsz).transpose();
    detail::iwae_forward(model, x, std::move(eps), k_eval, pass);
    for (Eigen::Index j = 0; j < bsz; ++j) {
      out(start + j) = detail::log_mean_exp(pass.log_w.col(j));
    }
  }
  if (!out.allFinite()) {
    throw NumericError("IWAE log-marginal evaluation produced a non-finite value");
  }
  return out;
}

}  // namespace bis

#endif  // BIS_IWAE_HPP
