#include "mfmpgm/summary.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mfmpgm;

namespace {

// Hubert-Arabie ARI from the four pair counts.
double ari_by_pairs(const std::vector<int>& x, const std::vector<int>& y) {
  const int n = static_cast<int>(x.size());
  double a = 0, b = 0, c = 0, d = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const bool sx = x[i] == x[j], sy = y[i] == y[j];
      if (sx && sy) ++a;
      else if (sx) ++b;
      else if (sy) ++c;
      else ++d;
    }
  const double den = (a + b) * (b + d) + (a + c) * (c + d);
  if (den == 0.0) return 1.0;
  return 2.0 * (a * d - b * c) / den;
}

std::vector<int> random_labels(int n, int k, Rng& rng) {
  std::vector<int> out(n);
  for (int& c : out) c = 1 + rng.index(k);
  return canonical_labels(out);
}

PosteriorSamples samples_of(const std::vector<std::vector<int>>& partitions, int p = 2) {
  PosteriorSamples s;
  s.p = p;
  for (const auto& labels : partitions) {
    PosteriorDraw d;
    d.labels = canonical_labels(labels);
    d.graphs.assign(distinct_count(labels), Graph::empty(p));
    s.draws.push_back(d);
  }
  s.n = static_cast<int>(partitions.front().size());
  return s;
}

// Betweenness from all-pairs distances and path counts: node v lies on
// sigma(s, v) sigma(v, t) of the sigma(s, t) shortest s-t paths when
// d(s, v) + d(v, t) = d(s, t).
std::vector<double> betweenness_by_counting(const Graph& g) {
  const int p = g.size();
  const int inf = 1 << 20;
  std::vector<std::vector<int>> dist(p, std::vector<int>(p, inf));
  std::vector<std::vector<double>> count(p, std::vector<double>(p, 0.0));
  for (int s = 0; s < p; ++s) {
    dist[s][s] = 0;
    count[s][s] = 1;
    for (int len = 1; len < p; ++len)
      for (int v = 0; v < p; ++v) {
        if (dist[s][v] != len - 1) continue;
        for (int w = 0; w < p; ++w) {
          if (!g.has_edge(v, w) || dist[s][w] < len) continue;
          dist[s][w] = len;
          count[s][w] += count[s][v];
        }
      }
  }
  std::vector<double> out(p, 0.0);
  for (int s = 0; s < p; ++s)
    for (int t = s + 1; t < p; ++t) {
      if (dist[s][t] >= inf) continue;
      for (int v = 0; v < p; ++v)
        if (v != s && v != t && dist[s][v] + dist[v][t] == dist[s][t])
          out[v] += count[s][v] * count[v][t] / count[s][t];
    }
  return out;
}

}  // namespace

TEST(Dahl, Comembership) {
  const IntMatrix b = comembership({1, 2, 1});
  EXPECT_EQ(b(0, 2), 1);
  EXPECT_EQ(b(0, 1), 0);
  EXPECT_EQ(b(1, 1), 1);
}

TEST(Dahl, SelectsLeastSquaresDraw) {
  const auto s = samples_of({{1, 1, 2}, {1, 1, 1}, {1, 1, 2}});
  const Matrix bbar = mean_comembership(s);
  EXPECT_NEAR(bbar(0, 2), 1.0 / 3.0, 1e-15);
  const auto r = dahl_select(s);
  EXPECT_EQ(r.index, 0u);
  // (0,2) and (1,2) off by 1/3 each, both triangles.
  EXPECT_NEAR(r.criterion, 4.0 / 9.0, 1e-14);
  EXPECT_NEAR(dahl_criterion(s.draws[1].labels, bbar), 16.0 / 9.0, 1e-14);
}

TEST(Dahl, MatchesBruteForceArgmin) {
  Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.index(9);
    const int m = 1 + rng.index(15);
    std::vector<std::vector<int>> parts;
    for (int d = 0; d < m; ++d) parts.push_back(random_labels(n, 1 + rng.index(4), rng));
    const auto s = samples_of(parts);
    std::size_t best = 0;
    double best_v = kInf;
    for (int d = 0; d < m; ++d) {
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double mean = 0.0;
          for (const auto& q : parts) mean += q[i] == q[j];
          mean /= m;
          const double diff = (parts[d][i] == parts[d][j]) - mean;
          v += diff * diff;
        }
      if (v < best_v - 1e-12) best = d, best_v = v;
    }
    const auto r = dahl_select(s);
    EXPECT_EQ(r.index, best);
    EXPECT_NEAR(r.criterion, best_v, 1e-10);
  }
}

TEST(Ari, KnownValues) {
  EXPECT_DOUBLE_EQ(ari({1, 1, 2, 2}, {5, 5, 9, 9}), 1.0);
  EXPECT_DOUBLE_EQ(ari({1, 1, 1}, {1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(ari({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_NEAR(ari({1, 1, 2, 2}, {1, 2, 1, 2}), -0.5, 1e-15);
  EXPECT_THROW(ari({1}, {1, 2}), std::invalid_argument);
}

TEST(Ari, MatchesPairCountingOnRandomPartitions) {
  Rng rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.index(11);
    const auto a = random_labels(n, 1 + rng.index(5), rng);
    const auto b = random_labels(n, 1 + rng.index(5), rng);
    EXPECT_NEAR(ari(a, b), ari_by_pairs(a, b), 1e-12);
  }
}

TEST(Labels, CanonicalAndDistinct) {
  EXPECT_EQ(canonical_labels({7, 3, 7, 9}), (std::vector<int>{1, 2, 1, 3}));
  EXPECT_EQ(distinct_count({4, 4, 2}), 2);
}

TEST(GraphMetrics, RmseExample) {
  // Each of two observations misses one edge: squared disagreement 2^2.
  Graph truth = Graph::empty(3);
  truth.set_edge(0, 1, true);
  const std::vector<std::vector<Graph>> est = {{Graph::empty(3), Graph::empty(3)}};
  const std::vector<std::vector<Graph>> tru = {{truth, truth}};
  EXPECT_DOUBLE_EQ(rmse_graph(est, tru), 2.0);
  EXPECT_DOUBLE_EQ(rmse_graph(tru, tru), 0.0);
}

TEST(GraphMetrics, RmseMatchesBruteForce) {
  Rng rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 1 + rng.index(3), n = 1 + rng.index(5), p = 2 + rng.index(4);
    std::vector<std::vector<Graph>> est(r), tru(r);
    double total = 0.0;
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < n; ++i) {
        est[k].push_back(sample_graph_prior(p, 0.5, rng));
        tru[k].push_back(sample_graph_prior(p, 0.5, rng));
        int diff = 0;
        for (int a = 0; a < p; ++a)
          for (int b = 0; b < p; ++b)
            if (a != b) diff += est[k][i].has_edge(a, b) != tru[k][i].has_edge(a, b);
        total += diff * diff;
      }
    EXPECT_NEAR(rmse_graph(est, tru), std::sqrt(total / (r * n)), 1e-12);
  }
}

TEST(GraphMetrics, EdgePosteriorAndThreshold) {
  PosteriorSamples s;
  s.p = 3;
  for (int d = 0; d < 4; ++d) {
    PosteriorDraw dr;
    dr.labels = {1, 1, 2};
    Graph g0 = Graph::empty(3), g1 = Graph::complete(3);
    if (d < 3) g0.set_edge(0, 2, true);
    dr.graphs = {g0, g1};
    s.draws.push_back(dr);
  }
  const Matrix prob = edge_posterior(s, {1, 1, 2}, 1);
  EXPECT_DOUBLE_EQ(prob(0, 2), 0.75);
  EXPECT_DOUBLE_EQ(prob(2, 0), 0.75);
  EXPECT_DOUBLE_EQ(prob(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(edge_posterior(s, {1, 1, 2}, 2)(0, 1), 1.0);
  const Graph g = threshold_graph(prob);
  EXPECT_TRUE(g.has_edge(0, 2));
  EXPECT_EQ(g.edge_count(), 1);
  EXPECT_THROW(edge_posterior(s, {1, 1, 1}, 2), std::invalid_argument);
}

TEST(NetworkStats, PathGraph) {
  Graph g = Graph::empty(4);
  g.set_edge(0, 1, true);
  g.set_edge(1, 2, true);
  g.set_edge(2, 3, true);
  const auto ns = node_stats(g);
  EXPECT_EQ(ns.betweenness, (std::vector<double>{0.0, 2.0, 2.0, 0.0}));
  EXPECT_EQ(ns.degree, (std::vector<int>{1, 2, 2, 1}));
  EXPECT_DOUBLE_EQ(ns.degree_centrality[1], 2.0 / 3.0);
  const auto gs = graph_stats(g);
  EXPECT_EQ(gs.max_degree, 2);
  EXPECT_EQ(gs.total_degree, 6);
  EXPECT_DOUBLE_EQ(gs.avg_betweenness, 1.0);
  EXPECT_DOUBLE_EQ(gs.avg_degree_centrality, 0.5);
}

TEST(NetworkStats, CompleteAndStar) {
  const auto complete = node_stats(Graph::complete(5));
  for (int v = 0; v < 5; ++v) {
    EXPECT_DOUBLE_EQ(complete.betweenness[v], 0.0);
    EXPECT_DOUBLE_EQ(complete.degree_centrality[v], 1.0);
  }
  Graph star = Graph::empty(5);
  for (int v = 1; v < 5; ++v) star.set_edge(0, v, true);
  EXPECT_DOUBLE_EQ(betweenness(star)[0], 6.0);
}

TEST(NetworkStats, BetweennessMatchesPathCounting) {
  Rng rng(54);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = sample_graph_prior(3 + rng.index(6), 0.4, rng);
    const auto fast = betweenness(g);
    const auto slow = betweenness_by_counting(g);
    for (std::size_t v = 0; v < fast.size(); ++v) EXPECT_NEAR(fast[v], slow[v], 1e-10);
  }
}

TEST(FitSummary, SummarizeSelectsAndCountsK) {
  auto s = samples_of({{1, 1, 2, 2}, {1, 1, 2, 2}, {1, 1, 1, 1}}, 3);
  s.draws[0].graphs[1].set_edge(0, 1, true);
  s.draws[1].graphs[1].set_edge(0, 1, true);
  const auto fit = summarize(s);
  EXPECT_EQ(fit.dahl.index, 0u);
  EXPECT_EQ(fit.k(), 2);
  EXPECT_EQ(fit.labels, (std::vector<int>{1, 1, 2, 2}));
  ASSERT_EQ(fit.k_posterior.size(), 3u);
  EXPECT_NEAR(fit.k_posterior[1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(fit.k_posterior[2], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(fit.groups[1].size, 2);
  // The third draw has one cluster, which is the best match for both groups.
  EXPECT_NEAR(fit.groups[1].edge_prob(0, 1), 2.0 / 3.0, 1e-15);
  EXPECT_TRUE(fit.groups[1].graph.has_edge(0, 1));
  EXPECT_EQ(fit.observation_graphs()[3].edge_count(), 1);
  EXPECT_EQ(fit.observation_graphs()[0].edge_count(), 0);
}
