#ifndef BIS_CORPUS_HPP
#define BIS_CORPUS_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bis/error.hpp"

/**
 * \file
 * \brief Prompt corpora, score normalization, and the shared embedding projection.
 */

namespace bis {

struct PromptRecord {
  std::string id;
  std::string prompt;
  std::optional<std::vector<double>> embedding;
  std::map<std::string, double> scores;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

struct Corpus {
  std::string name;
  std::size_t dim = 0;
  std::vector<PromptRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  bool has_all_embeddings() const noexcept {
    return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.embedding.has_value(); });
  }

  /// Row-per-record embedding matrix. Throws DataError if any record lacks an embedding.
  Eigen::MatrixXd embedding_matrix() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (!r.embedding) {
        throw DataError("corpus '" + name + "': record '" + r.id + "' has no embedding");
      }
      out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(r.embedding->data(), r.embedding->size());
    }
    return out;
  }

  bool has_metric(const std::string& metric) const noexcept {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(), [&](const auto& r) { return r.scores.contains(metric); });
  }

  /// Raw scores for one metric in record order. Throws DataError naming the metric if any are missing.
  std::vector<double> scores(const std::string& metric) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
      auto it = r.scores.find(metric);
      if (it == r.scores.end()) {
        throw DataError("corpus '" + name + "': record '" + r.id + "' has no score for metric '" + metric + "'");
      }
      out.push_back(it->second);
    }
    return out;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

namespace detail {

inline std::vector<double> parse_vector(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) {
    throw DataError(where + ": expected an array of numbers");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw DataError(where + ": non-numeric vector entry");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      throw DataError(where + ": non-finite vector entry");
    }
    out.push_back(x);
  }
  return out;
}

inline std::string line_ref(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

inline bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace detail

/**
 * Loads a JSON-lines corpus. Each non-blank line is
 * {"id": str, "prompt": str, "embedding": [f64...]?, "scores": {metric: f64}?}.
 *
 * The embedding dimension is \p dim_hint when given, otherwise the length of
 * the first embedding seen. Errors name the offending line.
 */
inline Corpus load_corpus(const std::filesystem::path& path, std::optional<std::size_t> dim_hint = std::nullopt) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open corpus file " + path.string());
  }
  Corpus corpus;
  corpus.name = path.stem().string();
  std::optional<std::size_t> dim = dim_hint;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) {
      continue;
    }
    const auto where = detail::line_ref(path, line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw DataError(where + ": record must be an object with a string \"id\"");
    }
    PromptRecord r;
    r.id = j["id"].get<std::string>();
    if (r.id.empty()) {
      throw DataError(where + ": empty id");
    }
    if (!seen.insert(r.id).second) {
      throw DataError(where + ": duplicate id '" + r.id + "'");
    }
    if (auto it = j.find("prompt"); it != j.end()) {
      if (!it->is_string()) {
        throw DataError(where + ": \"prompt\" must be a string");
      }
      r.prompt = it->get<std::string>();
    }
    if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
      auto v = detail::parse_vector(*it, where);
      if (!dim) {
        dim = v.size();
      }
      if (v.size() != *dim) {
        throw DataError(where + ": embedding dimension mismatch (got " + std::to_string(v.size()) + ", expected " +
                        std::to_string(*dim) + ")");
      }
      r.embedding = std::move(v);
    }
    if (auto it = j.find("scores"); it != j.end() && !it->is_null()) {
      if (!it->is_object()) {
        throw DataError(where + ": \"scores\" must be an object");
      }
      for (const auto& [metric, value] : it->items()) {
        if (!value.is_number() || !std::isfinite(value.get<double>())) {
          throw DataError(where + ": score '" + metric + "' is not a finite number");
        }
        r.scores.emplace(metric, value.get<double>());
      }
    }
    corpus.records.push_back(std::move(r));
  }
  if (!dim) {
    if (corpus.empty()) {
      throw DataError("corpus " + path.string() + " is empty and no dimension hint was given");
    }
    dim = 0;  // prompts without embeddings; join an embedding file later
  }
  corpus.dim = *dim;
  return corpus;
}

inline nlohmann::json to_json(const PromptRecord& r) {
  nlohmann::json j = {{"id", r.id}, {"prompt", r.prompt}};
  if (r.embedding) {
    j["embedding"] = *r.embedding;
  }
  if (!r.scores.empty()) {
    j["scores"] = r.scores;
  }
  return j;
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write corpus file " + path.string());
  }
  for (const auto& r : corpus.records) {
    out << to_json(r).dump() << '\n';
  }
}

struct EmbeddingEntry {
  std::string id;
  std::vector<double> vector;
};

/// Loads the extractor's embedding file: JSON-lines {"id": str, "vector": [f64...]}.
inline std::vector<EmbeddingEntry> load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open embedding file " + path.string());
  }
  std::vector<EmbeddingEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) {
      continue;
    }
    const auto where = detail::line_ref(path, line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("vector")) {
      throw DataError(where + ": embedding line must carry \"id\" and \"vector\"");
    }
    auto v = detail::parse_vector(j["vector"], where);
    if (!out.empty() && v.size() != out.front().vector.size()) {
      throw DataError(where + ": embedding dimension mismatch");
    }
    out.push_back({j["id"].get<std::string>(), std::move(v)});
  }
  return out;
}

struct JoinStats {
  std::size_t matched = 0;
  std::size_t missing = 0;  ///< corpus records left without an embedding
  std::size_t unused = 0;   ///< embedding lines whose id is not in the corpus
};

/// Attaches embeddings to records by id, replacing any embedding already present.
inline JoinStats join_embeddings(Corpus& corpus, const std::vector<EmbeddingEntry>& entries) {
  JoinStats stats;
  if (entries.empty()) {
    stats.missing = corpus.size();
    return stats;
  }
  const std::size_t dim = entries.front().vector.size();
  std::unordered_map<std::string, const EmbeddingEntry*> by_id;
  for (const auto& e : entries) {
    by_id[e.id] = &e;
  }
  std::size_t used = 0;
  for (auto& r : corpus.records) {
    if (auto it = by_id.find(r.id); it != by_id.end()) {
      r.embedding = it->second->vector;
      ++used;
    } else if (!r.embedding || r.embedding->size() != dim) {
      r.embedding.reset();
      ++stats.missing;
    }
  }
  stats.matched = used;
  stats.unused = by_id.size() - used;
  corpus.dim = dim;
  return stats;
}

// ---------------------------------------------------------------------------
// Score normalization

enum class NormalizerScope { kSourceOnly, kPooled };

inline std::string to_string(NormalizerScope s) { return s == NormalizerScope::kPooled ? "pooled" : "source_only"; }

inline NormalizerScope parse_normalizer_scope(const std::string& s) {
  if (s == "pooled") {
    return NormalizerScope::kPooled;
  }
  if (s == "source_only") {
    return NormalizerScope::kSourceOnly;
  }
  throw ConfigError("unknown normalizer scope '" + s + "' (expected pooled|source_only)");
}

/// Min-max map onto [0, 1] with clamping. A degenerate range (max == min) maps everything to 0.
struct ScoreNormalizer {
  std::string metric;
  double min = 0.0;
  double max = 1.0;
  NormalizerScope scope = NormalizerScope::kPooled;

  bool degenerate() const noexcept { return max == min; }

  double operator()(double raw) const noexcept {
    if (degenerate()) {
      return 0.0;
    }
    return std::clamp((raw - min) / (max - min), 0.0, 1.0);
  }

  std::vector<double> apply(std::span<const double> raw) const {
    std::vector<double> out(raw.size());
    std::transform(raw.begin(), raw.end(), out.begin(), *this);
    return out;
  }
};

inline ScoreNormalizer fit_normalizer(std::span<const double> values, NormalizerScope scope = NormalizerScope::kPooled,
                                      std::string metric = {}) {
  if (values.empty()) {
    throw DataError("cannot fit a normalizer on an empty score vector");
  }
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw DataError("cannot fit a normalizer on non-finite scores");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return ScoreNormalizer{std::move(metric), *lo, *hi, scope};
}

// ---------------------------------------------------------------------------
// Embedding projection

/// Standardization followed by an optional PCA projection, fit once on pooled data.
struct EmbeddingSpace {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::optional<Eigen::MatrixXd> basis;  ///< d_out x d_in, orthonormal rows
  Eigen::VectorXd eigenvalues;           ///< covariance spectrum of the standardized data, descending

  Eigen::Index d_in() const noexcept { return mean.size(); }
  Eigen::Index d_out() const noexcept { return basis ? basis->rows() : mean.size(); }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != d_in()) {
      throw DataError("embedding dimension mismatch: got " + std::to_string(x.size()) + ", expected " +
                      std::to_string(d_in()));
    }
    Eigen::VectorXd z = (x - mean).cwiseQuotient(scale);
    if (basis) {
      return *basis * z;
    }
    return z;
  }

  /// Applies the space to each row of \p rows.
  Eigen::MatrixXd apply_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) const {
    if (rows.cols() != d_in()) {
      throw DataError("embedding dimension mismatch: got " + std::to_string(rows.cols()) + ", expected " +
                      std::to_string(d_in()));
    }
    Eigen::MatrixXd z = (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    if (basis) {
      return z * basis->transpose();
    }
    return z;
  }
};

inline constexpr double kScaleFloor = 1e-8;

/**
 * Fits standardization (mean and sample standard deviation, floored at 1e-8)
 * and, when \p target_dim < d_in, the leading principal directions of the
 * standardized data. Each basis row is sign-fixed so that its entry of
 * largest magnitude is positive.
 */
inline EmbeddingSpace fit_embedding_space(const Eigen::Ref<const Eigen::MatrixXd>& pooled,
                                          std::optional<Eigen::Index> target_dim = std::nullopt) {
  const Eigen::Index n = pooled.rows();
  const Eigen::Index d = pooled.cols();
  if (n < 2) {
    throw DataError("embedding space needs at least 2 points, got " + std::to_string(n));
  }
  if (d < 1) {
    throw DataError("embedding space needs at least one dimension");
  }
  if (target_dim && (*target_dim < 1 || *target_dim > d)) {
    throw ConfigError("pca dimension " + std::to_string(*target_dim) + " out of range [1, " + std::to_string(d) + "]");
  }
  EmbeddingSpace space;
  space.mean = pooled.colwise().mean().transpose();
  const Eigen::MatrixXd centered = pooled.rowwise() - space.mean.transpose();
  space.scale = (centered.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt().transpose();
  space.scale = space.scale.cwiseMax(kScaleFloor);

  const Eigen::MatrixXd z = centered.array().rowwise() / space.scale.transpose().array();
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericError("covariance eigendecomposition failed");
  }
  // Eigen sorts ascending; flip to descending.
  space.eigenvalues = solver.eigenvalues().reverse();
  if (target_dim && *target_dim < d) {
    Eigen::MatrixXd basis(*target_dim, d);
    for (Eigen::Index r = 0; r < *target_dim; ++r) {
      Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - r);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0) {
        v = -v;
      }
      basis.row(r) = v.transpose();
    }
    space.basis = std::move(basis);
  }
  return space;
}

inline nlohmann::json to_json(const EmbeddingSpace& s) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j = {{"d_in", s.d_in()}, {"d_out", s.d_out()}, {"mean", vec(s.mean)}, {"scale", vec(s.scale)}};
  if (s.basis) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < s.basis->rows(); ++r) {
      rows.push_back(vec(s.basis->row(r).transpose()));
    }
    j["basis"] = std::move(rows);
  } else {
    j["basis"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// pass@1

struct PassAtOne {
  std::vector<double> per_task;
  double mean = 0.0;
};

/// Success fraction per task over repeated runs, and its mean over tasks.
inline PassAtOne pass_at_1(const std::vector<std::vector<bool>>& run_outcomes) {
  PassAtOne out;
  out.per_task.reserve(run_outcomes.size());
  for (std::size_t t = 0; t < run_outcomes.size(); ++t) {
    const auto& runs = run_outcomes[t];
    if (runs.empty()) {
      throw DataError("task " + std::to_string(t) + " has zero runs");
    }
    const auto passes = std::count(runs.begin(), runs.end(), true);
    out.per_task.push_back(static_cast<double>(passes) / static_cast<double>(runs.size()));
  }
  if (!out.per_task.empty()) {
    double sum = 0.0;
    for (double v : out.per_task) {
      sum += v;
    }
    out.mean = sum / static_cast<double>(out.per_task.size());
  }
  return out;
}

}  // namespace bis

#endif  // BIS_CORPUS_HPP
