#ifndef BIS_DENSITY_HPP
#define BIS_DENSITY_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bis/error.hpp"
#include "bis/gmm.hpp"
#include "bis/iwae.hpp"

/**
 * \file
 * \brief Density-model sum type and its versioned JSON persistence.
 */

namespace bis {

using DensityModel = std::variant<IwaeModel, GmmModel>;

enum class DensityKind { kIwae, kGmm };

inline DensityKind parse_density_kind(const std::string& s) {
  if (s == "iwae") {
    return DensityKind::kIwae;
  }
  if (s == "gmm") {
    return DensityKind::kGmm;
  }
  throw ConfigError("unknown density kind '" + s + "' (expected iwae|gmm)");
}

inline std::string to_string(DensityKind k) { return k == DensityKind::kIwae ? "iwae" : "gmm"; }

/// Log density of each row. IWAE models use \p k_eval samples and \p seed; GMMs ignore both.
inline Eigen::VectorXd log_density_rows(const DensityModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                        int k_eval, std::uint64_t seed) {
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, IwaeModel>) {
          return log_marginal_rows(m, rows, k_eval, seed);
        } else {
          return gmm_log_density_rows(m, rows);
        }
      },
      model);
}

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline std::vector<double> to_vec(const Eigen::Ref<const Eigen::VectorXd>& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json matrix_rows(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(to_vec(m.row(r).transpose()));
  }
  return rows;
}

inline Eigen::VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd matrix_from(const nlohmann::json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Eigen::VectorXd row = vec_from(j.at(static_cast<std::size_t>(r)));
    if (row.size() != cols) {
      throw DataError("model file: ragged matrix");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const IwaeModel& m) {
  return {{"format_version", kModelFormatVersion},
          {"kind", "iwae"},
          {"input_dim", m.layout.d},
          {"latent_dim", m.layout.m},
          {"hidden_dim", m.layout.h},
          {"nonlinearity", "tanh"},
          {"k_train", m.k_train},
          {"seed", m.seed},
          {"params", detail::to_vec(m.params)}};
}

inline nlohmann::json to_json(const GmmModel& m) {
  return {{"format_version", kModelFormatVersion},
          {"kind", "gmm"},
          {"n_components", m.n_components()},
          {"dim", m.dim()},
          {"weights", detail::to_vec(m.weights)},
          {"means", detail::matrix_rows(m.means)},
          {"variances", detail::matrix_rows(m.variances)}};
}

inline nlohmann::json to_json(const DensityModel& m) {
  return std::visit([](const auto& v) { return to_json(v); }, m);
}

inline DensityModel density_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) {
      throw DataError("model file: missing format_version");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("model file: unsupported format_version " + std::to_string(version) + " (expected " +
                      std::to_string(kModelFormatVersion) + ")");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "iwae") {
      IwaeModel m;
      m.layout = {j.at("input_dim").get<Eigen::Index>(), j.at("latent_dim").get<Eigen::Index>(),
                  j.at("hidden_dim").get<Eigen::Index>()};
      m.k_train = j.at("k_train").get<int>();
      m.seed = j.at("seed").get<std::uint64_t>();
      m.params = detail::vec_from(j.at("params"));
      if (m.params.size() != m.layout.size() || !m.params.allFinite()) {
        throw DataError("model file: IWAE parameter vector has wrong size or non-finite entries");
      }
      return m;
    }
    if (kind == "gmm") {
      GmmModel m;
      const auto d = j.at("dim").get<Eigen::Index>();
      m.weights = detail::vec_from(j.at("weights"));
      m.means = detail::matrix_from(j.at("means"), d);
      m.variances = detail::matrix_from(j.at("variances"), d);
      try {
        m.validate();
      } catch (const ConfigError& e) {
        throw DataError(std::string("model file: ") + e.what());
      }
      return m;
    }
    throw DataError("model file: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: corrupt (") + e.what() + ")");
  }
}

inline void save_model(const DensityModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write model file " + path.string());
  }
  out << to_json(model).dump() << '\n';
}

inline DensityModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open model file " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("model file " + path.string() + ": corrupt (" + e.what() + ")");
  }
  return density_from_json(j);
}

}  // namespace bis

#endif  // BIS_DENSITY_HPP
