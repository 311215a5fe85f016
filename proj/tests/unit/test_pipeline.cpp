#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <vector>

#include "bis/harness.hpp"
#include "bis/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

bis::Corpus fixture(const char* name) { return bis::load_corpus(fs::path(BIS_TEST_DATA) / "corpus" / name); }

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

bis::PipelineConfig small_iwae(std::uint64_t seed) {
  bis::PipelineConfig c;
  c.train.epochs = 30;
  c.train.k_eval = 32;
  c.train.seed = seed;
  return c;
}

TEST(PipelineConfig, SeedsAreDistinctAndValidated) {
  bis::PipelineConfig c;
  c.train.seed = 4;
  EXPECT_NE(c.source_seed(), c.target_seed());
  EXPECT_NE(c.source_seed(), c.eval_seed());
  c.percentile = 1.5;
  EXPECT_THROW(c.validate(), bis::ConfigError);
  c.percentile = 0.9;
  c.gmm_components = 0;
  EXPECT_THROW(c.validate(), bis::ConfigError);
}

TEST(Pipeline, SharedModelGivesUnitWeightsAndSourceMean) {
  const bis::Corpus src = fixture("source.jsonl");
  const std::vector<double> scores = src.scores("pass@1");
  const Eigen::MatrixXd raw = src.embedding_matrix();
  const bis::EmbeddingSpace space = bis::fit_embedding_space(raw, std::nullopt);
  const Eigen::MatrixXd rows = space.apply_rows(raw);
  for (auto kind : {bis::DensityKind::kIwae, bis::DensityKind::kGmm}) {
    bis::PipelineConfig cfg = small_iwae(11);
    cfg.density = kind;
    cfg.percentile = 1.0;
    const bis::DensityModel m = bis::fit_density(rows, cfg, cfg.source_seed());
    const auto est = bis::estimate_with_models(m, m, rows, scores, cfg);
    for (double w : est.weights.raw) {
      ASSERT_EQ(w, 1.0);
    }
    EXPECT_EQ(bis::evaluate_error(est.prediction, scores), 0.0);
    EXPECT_NEAR(est.diagnostics.effective_sample_size, static_cast<double>(scores.size()), 1e-6);
  }
}

TEST(Pipeline, IdenticalSetsRecoverSourceMean) {
  const bis::Corpus src = fixture("source.jsonl");
  const std::vector<double> scores = src.scores("pass@1");
  const Eigen::MatrixXd raw = src.embedding_matrix();
  bis::PipelineConfig cfg;
  cfg.train.seed = 2;
  const auto r = bis::run_pipeline(raw, raw, scores, cfg);
  EXPECT_LE(std::abs(r.estimate.prediction - mean(scores)), 0.02);
  EXPECT_EQ(r.log_p_source.size(), scores.size());
  EXPECT_EQ(r.log_p_target.size(), scores.size());
}

TEST(Pipeline, DeterministicForFixedSeed) {
  const bis::Corpus src = fixture("source.jsonl");
  const bis::Corpus tgt = fixture("target.jsonl");
  const std::vector<double> scores = src.scores("pass@1");
  const auto a = bis::run_pipeline(src.embedding_matrix(), tgt.embedding_matrix(), scores, small_iwae(5));
  const auto b = bis::run_pipeline(src.embedding_matrix(), tgt.embedding_matrix(), scores, small_iwae(5));
  EXPECT_EQ(a.estimate.prediction, b.estimate.prediction);
  EXPECT_EQ(a.log_p_target, b.log_p_target);
  EXPECT_EQ(bis::to_json(a.source_model).dump(), bis::to_json(b.source_model).dump());
  const auto c = bis::run_pipeline(src.embedding_matrix(), tgt.embedding_matrix(), scores, small_iwae(6));
  EXPECT_NE(a.estimate.prediction, c.estimate.prediction);
}

TEST(Pipeline, ProjectionDimensionIsHonoured) {
  const bis::Corpus src = fixture("source.jsonl");
  const bis::Corpus tgt = fixture("target.jsonl");
  bis::PipelineConfig cfg;
  cfg.density = bis::DensityKind::kGmm;
  cfg.gmm_components = 2;
  cfg.pca_dim = 4;
  const auto r = bis::run_pipeline(src.embedding_matrix(), tgt.embedding_matrix(), src.scores("pass@1"), cfg);
  EXPECT_EQ(r.space.d_out(), 4);
  EXPECT_EQ(std::get<bis::GmmModel>(r.target_model).dim(), 4);
}

TEST(Pipeline, InputErrors) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(20, 3);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Random(20, 4);
  const std::vector<double> s(20, 0.5);
  bis::PipelineConfig cfg;
  cfg.density = bis::DensityKind::kGmm;
  cfg.gmm_components = 1;
  EXPECT_THROW(bis::run_pipeline(a, b, s, cfg), bis::DataError);
  EXPECT_THROW(bis::run_pipeline(a, a, std::vector<double>(19, 0.5), cfg), bis::DataError);
}

}  // namespace
