#include "mfmpgm/simgen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace mfmpgm;

namespace {

// Modified chain written out from 1-based (row, col) positions.
Matrix modified_chain_by_positions(int p) {
  Matrix m = Matrix::Identity(p, p);
  for (int c = 1; c <= p; ++c) {
    if (c % 2 != 0) continue;
    m(c - 2, c - 1) = m(c - 1, c - 2) = 0.5;
    if (c >= 3) m(c - 3, c - 1) = m(c - 1, c - 3) = 0.25;
  }
  return m;
}

}  // namespace

TEST(Structures, IndependentAndChain) {
  EXPECT_TRUE(make_structure(StructureKind::Independent, 5).isIdentity());
  const Matrix chain = make_structure(StructureKind::Chain, 4);
  Matrix expected(4, 4);
  expected << 1, 0.5, 0, 0, 0.5, 1, 0.5, 0, 0, 0.5, 1, 0.5, 0, 0, 0.5, 1;
  EXPECT_EQ(chain, expected);
  EXPECT_THROW(make_structure(StructureKind::Chain, 1), std::invalid_argument);
}

TEST(Structures, ModifiedChainGolden) {
  Matrix p4(4, 4);
  p4 << 1, 0.5, 0, 0,  //
      0.5, 1, 0, 0.25,  //
      0, 0, 1, 0.5,     //
      0, 0.25, 0.5, 1;
  EXPECT_EQ(make_structure(StructureKind::ModifiedChain, 4), p4);
  for (int p : {10, 15}) {
    const Matrix m = make_structure(StructureKind::ModifiedChain, p);
    EXPECT_EQ(m, modified_chain_by_positions(p)) << "p=" << p;
    EXPECT_TRUE(is_positive_definite(m));
  }
}

TEST(Structures, CovarianceOfTwoNodeChain) {
  const Matrix cov = to_covariance(make_structure(StructureKind::Chain, 2));
  EXPECT_NEAR(cov(0, 1), -0.5, 1e-15);
  EXPECT_DOUBLE_EQ(cov(0, 0), 1.0);
  const Matrix big = to_covariance(make_structure(StructureKind::ModifiedChain, 10));
  EXPECT_TRUE(big.diagonal().isOnes());
  EXPECT_TRUE(big.isApprox(big.transpose()));
}

TEST(Generators, ThresholdRanges) {
  Rng rng(61);
  const double q16 = normal_quantile(1.0 / 6.0);
  for (int k = 0; k < 1000; ++k) {
    const auto cuts = gen_thresholds(3, rng);
    ASSERT_EQ(cuts.size(), 2u);
    EXPECT_GE(cuts[0], q16);
    EXPECT_LE(cuts[0], 1e-15);
    EXPECT_GE(cuts[1], -1e-15);
    EXPECT_LE(cuts[1], -q16);
  }
  EXPECT_THROW(gen_thresholds(1, rng), std::invalid_argument);
}

TEST(Generators, FirstThreeMeansDistinctPerComponent) {
  Rng rng(62);
  const auto means = gen_cluster_means(5, 20, rng);
  for (int j = 0; j < 20; ++j) {
    std::set<double> first{means[0](j), means[1](j), means[2](j)};
    EXPECT_EQ(first, (std::set<double>{-1.0, 0.0, 1.0}));
    for (int c = 3; c < 5; ++c) EXPECT_TRUE(means[c](j) == -1.0 || means[c](j) == 0.0 || means[c](j) == 1.0);
  }
}

TEST(Simulate, CellFrequenciesMatchModel) {
  SimDesign d;
  d.sizes = {20000, 20000, 20000};
  d.p = 4;
  d.seed = 63;
  const auto sim = simulate_dataset(d);
  const auto& t = sim.truth;
  ASSERT_EQ(sim.data.rows(), 60000);
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < d.p; ++j) {
      // Margins are N(m, 1) because covariances have unit diagonal.
      const double m = t.means[c](j);
      const auto& cuts = t.thresholds.cuts[j];
      const double expected[3] = {normal_cdf(cuts[0] - m), normal_cdf(cuts[1] - m) - normal_cdf(cuts[0] - m),
                                  1.0 - normal_cdf(cuts[1] - m)};
      int counts[3] = {0, 0, 0};
      for (int i = c * 20000; i < (c + 1) * 20000; ++i) ++counts[sim.data.values(i, j) - 1];
      for (int l = 0; l < 3; ++l) EXPECT_NEAR(counts[l] / 20000.0, expected[l], 0.012) << c << " " << j << " " << l;
    }
}

TEST(Simulate, LabelsAndGraphs) {
  SimDesign d;
  d.sizes = {3, 4, 5};
  d.p = 6;
  const auto sim = simulate_dataset(d);
  EXPECT_EQ(sim.truth.labels, (std::vector<int>{1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3}));
  EXPECT_EQ(sim.truth.graphs[0].edge_count(), 0);
  EXPECT_EQ(sim.truth.graphs[1].edge_count(), 5);
  EXPECT_EQ(sim.truth.graphs[2], Graph::from_pattern(modified_chain_by_positions(6)));
  EXPECT_EQ(sim.truth.observation_graphs()[5], sim.truth.graphs[1]);
  EXPECT_TRUE(validate_dataset(sim.data).empty());
}

TEST(Simulate, DeterministicBySeed) {
  SimDesign d;
  d.sizes = {30, 30, 30};
  const auto a = simulate_dataset(d);
  const auto b = simulate_dataset(d);
  EXPECT_EQ(a.data.values, b.data.values);
  d.seed = 2;
  EXPECT_NE(simulate_dataset(d).data.values, a.data.values);
}

TEST(Simulate, DesignValidation) {
  SimDesign d;
  d.sizes = {10, 10};
  EXPECT_THROW(simulate_dataset(d), std::invalid_argument);
  d = SimDesign{};
  d.levels = 1;
  EXPECT_THROW(simulate_dataset(d), std::invalid_argument);
  d = SimDesign{};
  d.structures.pop_back();
  EXPECT_THROW(simulate_dataset(d), std::invalid_argument);
}

TEST(Replicates, IndependentOfThreadCount) {
  SimDesign d;
  d.sizes = {10, 10, 10};
  d.p = 3;
  ChainConfig cfg;
  cfg.iterations = 15;
  cfg.burn_in = 5;
  const auto one = run_replicates(d, cfg, 4, 1);
  const auto many = run_replicates(d, cfg, 4, 3);
  ASSERT_EQ(one.completed(), 4);
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(one.replicates[r].k_hat, many.replicates[r].k_hat);
    EXPECT_EQ(one.replicates[r].ari, many.replicates[r].ari);
    EXPECT_EQ(one.replicates[r].graph_sq_error, many.replicates[r].graph_sq_error);
  }
}

TEST(Replicates, ReportAggregates) {
  BenchmarkReport r;
  r.k_true = 3;
  r.replicates = {{0, true, "", 3, 0.8, 8.0, 2}, {1, true, "", 2, 0.6, 0.0, 2}, {2, false, "boom", 0, 0.0, 0.0, 0}};
  EXPECT_NEAR(r.prob_correct_k(), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.ari_mean(), 0.7, 1e-15);
  EXPECT_NEAR(r.ari_sd(), std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(r.rmse_g(), std::sqrt(8.0 / 4.0), 1e-15);
  EXPECT_NEAR(r.mean_k_hat(), 2.5, 1e-15);
}
