#pragma once

// Post-MCMC summaries: Dahl's least-squares partition, clustering and graph
// metrics, edge posteriors and network statistics.

#include "mfmpgm/gibbs.hpp"
#include "mfmpgm/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

namespace mfmpgm {

// ---------------------------------------------------------------------------
// Co-membership and Dahl's method
// ---------------------------------------------------------------------------

/// N x N 0/1 matrix with entry (i, j) = 1 iff labels[i] == labels[j].
inline IntMatrix comembership(const std::vector<int>& labels) {
  const int n = static_cast<int>(labels.size());
  IntMatrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = labels[i] == labels[j] ? 1 : 0;
  return b;
}

/// Elementwise mean of the per-draw co-membership matrices.
inline Matrix mean_comembership(const PosteriorSamples& samples) {
  if (samples.empty()) throw std::invalid_argument("mean_comembership: no samples");
  const int n = static_cast<int>(samples.draws.front().labels.size());
  Matrix acc = Matrix::Zero(n, n);
  for (const auto& d : samples.draws) {
    const auto& c = d.labels;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (c[i] == c[j]) acc(i, j) += 1.0;
  }
  acc /= static_cast<double>(samples.size());
  acc.triangularView<Eigen::StrictlyLower>() = acc.transpose();
  return acc;
}

/// Squared Frobenius distance between the co-membership matrix of `labels`
/// and `bbar`.
inline double dahl_criterion(const std::vector<int>& labels, const Matrix& bbar) {
  const int n = static_cast<int>(labels.size());
  double off = 0.0;
  double diag = 0.0;
  for (int i = 0; i < n; ++i) {
    diag += (1.0 - bbar(i, i)) * (1.0 - bbar(i, i));
    for (int j = i + 1; j < n; ++j) {
      const double d = (labels[i] == labels[j] ? 1.0 : 0.0) - bbar(i, j);
      off += d * d;
    }
  }
  return diag + 2.0 * off;
}

struct DahlResult {
  std::size_t index = 0;  // position in PosteriorSamples::draws
  double criterion = 0.0;
};

/// Draw minimizing the squared distance to the mean co-membership matrix;
/// ties go to the earliest draw. The criterion is accumulated as the integer
/// sum of (M B_ij - count_ij)^2 over M draws, so tied draws compare exactly.
inline DahlResult dahl_select(const PosteriorSamples& samples) {
  if (samples.empty()) throw std::invalid_argument("dahl_select: no samples");
  const int n = static_cast<int>(samples.draws.front().labels.size());
  const long long m = static_cast<long long>(samples.size());
  std::vector<long long> count(static_cast<std::size_t>(n) * n, 0);
  for (const auto& d : samples.draws)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (d.labels[i] == d.labels[j]) ++count[static_cast<std::size_t>(i) * n + j];
  std::size_t best = 0;
  long long best_v = -1;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& c = samples.draws[k].labels;
    long long v = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const long long d = (c[i] == c[j] ? m : 0) - count[static_cast<std::size_t>(i) * n + j];
        v += d * d;
      }
    if (best_v < 0 || v < best_v) best = k, best_v = v;
  }
  return {best, 2.0 * static_cast<double>(best_v) / static_cast<double>(m * m)};
}

// ---------------------------------------------------------------------------
// Clustering metrics
// ---------------------------------------------------------------------------

/// Adjusted Rand index from the contingency table. Two identical trivial
/// partitions (all together, or all apart) score 1.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ari: label sequences differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  const auto pairs = [](long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, m] : joint) index += pairs(m);
  for (const auto& [k, m] : rows) sa += pairs(m);
  for (const auto& [k, m] : cols) sb += pairs(m);
  const double total = pairs(static_cast<long>(n));
  const double expected = sa * sb / total;
  const double top = 0.5 * (sa + sb);
  if (top == expected) return 1.0;
  return (index - expected) / (top - expected);
}

/// Relabels to 1..K in order of first appearance.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> seen;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int c : labels) {
    auto [it, fresh] = seen.try_emplace(c, static_cast<int>(seen.size()) + 1);
    out.push_back(it->second);
  }
  return out;
}

inline int distinct_count(const std::vector<int>& labels) {
  std::vector<int> s = labels;
  std::sort(s.begin(), s.end());
  return static_cast<int>(std::unique(s.begin(), s.end()) - s.begin());
}

// ---------------------------------------------------------------------------
// Graph metrics
// ---------------------------------------------------------------------------

/// Sum over observations of the squared l0 disagreement between the graph
/// assigned to each observation and its true graph. Both triangles count.
inline double graph_squared_error(const std::vector<Graph>& estimated, const std::vector<Graph>& truth) {
  if (estimated.size() != truth.size()) throw std::invalid_argument("rmse_graph: observation counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = estimated[i].disagreement(truth[i]);
    s += d * d;
  }
  return s;
}

/// RMSE_G over R replicates of n observations each:
///   sqrt( (R n)^{-1} sum_r sum_i ||G_hat_r(i) - G_r(i)||_0^2 ).
inline double rmse_graph(const std::vector<std::vector<Graph>>& estimated,
                         const std::vector<std::vector<Graph>>& truth) {
  if (estimated.size() != truth.size() || truth.empty())
    throw std::invalid_argument("rmse_graph: replicate counts differ or are zero");
  const std::size_t n = truth.front().size();
  double s = 0.0;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (truth[r].size() != n) throw std::invalid_argument("rmse_graph: replicates differ in size");
    s += graph_squared_error(estimated[r], truth[r]);
  }
  return std::sqrt(s / static_cast<double>(truth.size() * n));
}

/// Label of the cluster in `draw_labels` sharing the most members with
/// `members`; ties go to the smallest label.
inline int best_overlap_label(const std::vector<int>& draw_labels, const std::vector<int>& members) {
  std::map<int, int> overlap;
  for (int i : members) ++overlap[draw_labels[i]];
  int best = 0, count = -1;
  for (const auto& [label, m] : overlap)
    if (m > count) best = label, count = m;
  return best;
}

/// Per-pair fraction of draws whose cluster best matching `group` (a label of
/// `selected`) contains the edge.
inline Matrix edge_posterior(const PosteriorSamples& samples, const std::vector<int>& selected, int group) {
  if (samples.empty()) throw std::invalid_argument("edge_posterior: no samples");
  std::vector<int> members;
  for (int i = 0; i < static_cast<int>(selected.size()); ++i)
    if (selected[i] == group) members.push_back(i);
  if (members.empty()) throw std::invalid_argument("edge_posterior: group has no members");
  const int p = samples.p > 0 ? samples.p : samples.draws.front().graphs.front().size();
  Matrix freq = Matrix::Zero(p, p);
  for (const auto& d : samples.draws) {
    const Graph& g = d.graphs[best_overlap_label(d.labels, members) - 1];
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c)
        if (r != c && g.has_edge(r, c)) freq(r, c) += 1.0;
  }
  return freq / static_cast<double>(samples.size());
}

/// Point-estimate graph: edges with posterior probability above 0.5.
inline Graph threshold_graph(const Matrix& edge_prob, double cut = 0.5) {
  const int p = static_cast<int>(edge_prob.rows());
  Graph g(p);
  for (int r = 0; r < p; ++r)
    for (int c = r + 1; c < p; ++c)
      if (edge_prob(r, c) > cut) g.set_edge(r, c, true);
  return g;
}

// ---------------------------------------------------------------------------
// Network statistics
// ---------------------------------------------------------------------------

/// Betweenness of every node on the unweighted graph (Brandes), counting each
/// unordered pair once.
inline std::vector<double> betweenness(const Graph& g) {
  const int p = g.size();
  std::vector<double> cb(p, 0.0);
  std::vector<std::vector<int>> adj(p);
  for (int v = 0; v < p; ++v) adj[v] = g.neighbors(v);
  for (int s = 0; s < p; ++s) {
    std::vector<int> stack;
    std::vector<std::vector<int>> preds(p);
    std::vector<double> sigma(p, 0.0), delta(p, 0.0);
    std::vector<int> dist(p, -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<int> bfs;
    bfs.push(s);
    while (!bfs.empty()) {
      const int v = bfs.front();
      bfs.pop();
      stack.push_back(v);
      for (int w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          bfs.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    while (!stack.empty()) {
      const int w = stack.back();
      stack.pop_back();
      for (int v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  for (double& v : cb) v *= 0.5;
  return cb;
}

struct NodeStats {
  std::vector<int> degree;
  std::vector<double> degree_centrality;  // degree / (p - 1)
  std::vector<double> betweenness;
};

inline NodeStats node_stats(const Graph& g) {
  const int p = g.size();
  NodeStats s;
  s.betweenness = betweenness(g);
  for (int v = 0; v < p; ++v) {
    s.degree.push_back(g.degree(v));
    s.degree_centrality.push_back(p > 1 ? g.degree(v) / static_cast<double>(p - 1) : 0.0);
  }
  return s;
}

struct GraphStats {
  int max_degree = 0;
  int total_degree = 0;
  double avg_degree_centrality = 0.0;
  double avg_betweenness = 0.0;  // raw pair counts, no normalization
};

inline GraphStats graph_stats(const Graph& g) {
  const auto ns = node_stats(g);
  GraphStats out;
  const int p = g.size();
  if (p == 0) return out;
  for (int v = 0; v < p; ++v) {
    out.max_degree = std::max(out.max_degree, ns.degree[v]);
    out.total_degree += ns.degree[v];
    out.avg_degree_centrality += ns.degree_centrality[v];
    out.avg_betweenness += ns.betweenness[v];
  }
  out.avg_degree_centrality /= p;
  out.avg_betweenness /= p;
  return out;
}

// ---------------------------------------------------------------------------
// Fit summary
// ---------------------------------------------------------------------------

struct GroupSummary {
  int label = 0;  // label in the selected partition
  int size = 0;
  Matrix edge_prob;
  Graph graph;  // edge_prob thresholded at 0.5
  GraphStats stats;
  NodeStats nodes;
};

struct FitSummary {
  DahlResult dahl;
  std::vector<int> labels;  // selected partition, relabeled by first appearance
  std::vector<GroupSummary> groups;
  std::vector<double> k_posterior;  // k_posterior[k] = share of draws with k clusters

  int k() const { return static_cast<int>(groups.size()); }

  /// Graph estimated for each observation through its group.
  std::vector<Graph> observation_graphs() const {
    std::vector<Graph> out;
    out.reserve(labels.size());
    for (int c : labels) out.push_back(groups[c - 1].graph);
    return out;
  }
};

inline FitSummary summarize(const PosteriorSamples& samples) {
  FitSummary s;
  s.dahl = dahl_select(samples);
  s.labels = canonical_labels(samples.draws[s.dahl.index].labels);
  const int k = distinct_count(s.labels);
  for (int c = 1; c <= k; ++c) {
    GroupSummary g;
    g.label = c;
    g.size = static_cast<int>(std::count(s.labels.begin(), s.labels.end(), c));
    g.edge_prob = edge_posterior(samples, s.labels, c);
    g.graph = threshold_graph(g.edge_prob);
    g.stats = graph_stats(g.graph);
    g.nodes = node_stats(g.graph);
    s.groups.push_back(std::move(g));
  }
  int k_max = 0;
  for (const auto& d : samples.draws) k_max = std::max(k_max, d.cluster_count());
  s.k_posterior.assign(k_max + 1, 0.0);
  for (const auto& d : samples.draws) s.k_posterior[d.cluster_count()] += 1.0;
  for (double& v : s.k_posterior) v /= static_cast<double>(samples.size());
  return s;
}

}  // namespace mfmpgm
