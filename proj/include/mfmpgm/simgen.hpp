#pragma once

// Synthetic benchmark generator: structured concentration matrices, cluster
// means, random thresholds, ordinal discretization, and the replicate driver.

#include "mfmpgm/gibbs.hpp"
#include "mfmpgm/random.hpp"
#include "mfmpgm/summary.hpp"
#include "mfmpgm/types.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mfmpgm {

enum class StructureKind { Independent, Chain, ModifiedChain };

inline std::string to_string(StructureKind k) {
  switch (k) {
    case StructureKind::Independent: return "independent";
    case StructureKind::Chain: return "chain";
    case StructureKind::ModifiedChain: return "modified_chain";
  }
  return "unknown";
}

inline StructureKind parse_structure(const std::string& s) {
  if (s == "independent") return StructureKind::Independent;
  if (s == "chain") return StructureKind::Chain;
  if (s == "modified_chain") return StructureKind::ModifiedChain;
  throw std::invalid_argument("unknown structure '" + s + "' (expected independent, chain or modified_chain)");
}

struct SimDesign {
  std::string name = "design";
  int k_true = 3;
  std::vector<int> sizes = {100, 100, 100};
  int p = 10;
  int levels = 3;
  std::vector<StructureKind> structures = {StructureKind::Independent, StructureKind::Chain,
                                           StructureKind::ModifiedChain};
  std::uint64_t seed = 1;

  int total() const {
    int n = 0;
    for (int s : sizes) n += s;
    return n;
  }

  void validate() const {
    if (k_true < 1) throw std::invalid_argument("design: k_true must be positive");
    if (static_cast<int>(sizes.size()) != k_true) throw std::invalid_argument("design: sizes length must equal k_true");
    if (static_cast<int>(structures.size()) != k_true)
      throw std::invalid_argument("design: structures length must equal k_true");
    for (int s : sizes)
      if (s < 1) throw std::invalid_argument("design: cluster sizes must be positive");
    if (p < 2) throw std::invalid_argument("design: p must be at least 2");
    if (levels < 2) throw std::invalid_argument("design: levels must be at least 2");
  }
};

/// Concentration matrix of the given kind. For the modified chain, with
/// 1-based column index c, the upper-triangle entries (c-1, c) = 0.5 and
/// (c-2, c) = 0.25 are set for even c only, then mirrored.
inline Matrix make_structure(StructureKind kind, int p) {
  if (p < 2) throw std::invalid_argument("make_structure: p must be at least 2");
  Matrix m = Matrix::Identity(p, p);
  switch (kind) {
    case StructureKind::Independent:
      break;
    case StructureKind::Chain:
      for (int i = 0; i + 1 < p; ++i) m(i, i + 1) = m(i + 1, i) = 0.5;
      break;
    case StructureKind::ModifiedChain:
      for (int c = 2; c <= p; c += 2) {
        const int col = c - 1;
        m(col - 1, col) = m(col, col - 1) = 0.5;
        if (col >= 2) m(col - 2, col) = m(col, col - 2) = 0.25;
      }
      break;
  }
  if (!is_positive_definite(m)) throw std::runtime_error("make_structure: matrix is not positive definite");
  return m;
}

/// Inverse of the concentration matrix rescaled to unit diagonal.
inline Matrix to_covariance(const Matrix& concentration) {
  if (!is_positive_definite(concentration)) throw std::invalid_argument("to_covariance: input not positive definite");
  const Matrix sigma = detail::inverse_spd(concentration);
  const Vector s = sigma.diagonal().cwiseSqrt().cwiseInverse();
  Matrix out = s.asDiagonal() * sigma * s.asDiagonal();
  out.diagonal().setOnes();
  return out;
}

/// For each component, the first three clusters receive distinct values from
/// {0, -1, 1}; further clusters draw from the set with replacement.
inline std::vector<Vector> gen_cluster_means(int k, int p, Rng& rng) {
  std::vector<Vector> means(k, Vector::Zero(p));
  std::array<double, 3> set{0.0, -1.0, 1.0};
  for (int j = 0; j < p; ++j) {
    std::array<double, 3> perm = set;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int c = 0; c < k; ++c) means[c](j) = c < 3 ? perm[c] : set[rng.index(3)];
  }
  return means;
}

/// Cut l (1-based) uniform on [Phi^{-1}((l - 0.5) / K), Phi^{-1}((l + 0.5) / K)].
inline std::vector<double> gen_thresholds(int levels, Rng& rng) {
  if (levels < 2) throw std::invalid_argument("gen_thresholds: need at least 2 levels");
  std::vector<double> cuts;
  for (int l = 1; l < levels; ++l) {
    const double lo = normal_quantile((l - 0.5) / levels);
    const double hi = normal_quantile((l + 0.5) / levels);
    cuts.push_back(rng.uniform(lo, hi));
  }
  return cuts;
}

struct GroundTruth {
  std::vector<int> labels;
  std::vector<Vector> means;
  std::vector<Matrix> concentrations;
  std::vector<Matrix> covariances;
  std::vector<Graph> graphs;
  Thresholds thresholds;

  std::vector<Graph> observation_graphs() const {
    std::vector<Graph> out;
    out.reserve(labels.size());
    for (int c : labels) out.push_back(graphs[c - 1]);
    return out;
  }
};

struct SimulatedData {
  OrdinalDataset data;
  GroundTruth truth;
};

/// Latent rows N(m_k, Sigma_k) per cluster, thresholds shared by all clusters,
/// X_j = 1 + #{l : Z_j >= theta_l}. Rows are ordered by cluster.
inline SimulatedData simulate_dataset(const SimDesign& design) {
  design.validate();
  Rng rng(design.seed);
  const int p = design.p;
  SimulatedData out;
  auto& t = out.truth;
  t.thresholds.cuts.resize(p);
  for (int j = 0; j < p; ++j) t.thresholds.cuts[j] = gen_thresholds(design.levels, rng);
  t.means = gen_cluster_means(design.k_true, p, rng);
  for (int c = 0; c < design.k_true; ++c) {
    t.concentrations.push_back(make_structure(design.structures[c], p));
    t.covariances.push_back(to_covariance(t.concentrations.back()));
    t.graphs.push_back(Graph::from_pattern(t.concentrations.back()));
  }

  const int n = design.total();
  out.data.values.resize(n, p);
  out.data.level_counts.assign(p, design.levels);
  for (int j = 0; j < p; ++j) out.data.variable_names.push_back("X" + std::to_string(j + 1));
  int row = 0;
  Vector e(p);
  for (int c = 0; c < design.k_true; ++c) {
    const Matrix l = Eigen::LLT<Matrix>(t.covariances[c]).matrixL();
    for (int r = 0; r < design.sizes[c]; ++r, ++row) {
      for (int j = 0; j < p; ++j) e(j) = rng.normal();
      const Vector z = t.means[c] + l * e;
      for (int j = 0; j < p; ++j) out.data.values(row, j) = t.thresholds.discretize(j, z(j));
      t.labels.push_back(c + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replicates
// ---------------------------------------------------------------------------

struct ReplicateResult {
  int replicate = 0;
  bool ok = false;
  std::string error;
  int k_hat = 0;
  double ari = 0.0;
  double graph_sq_error = 0.0;  // sum over observations of squared l0 disagreement
  int n = 0;
};

struct BenchmarkReport {
  std::string design;
  LabelMode mode = LabelMode::MFM;
  int k_true = 0;
  std::vector<ReplicateResult> replicates;

  int completed() const {
    int m = 0;
    for (const auto& r : replicates) m += r.ok;
    return m;
  }

  /// Failed replicates count as incorrect.
  double prob_correct_k() const {
    if (replicates.empty()) return 0.0;
    int hits = 0;
    for (const auto& r : replicates) hits += r.ok && r.k_hat == k_true;
    return hits / static_cast<double>(replicates.size());
  }

  double ari_mean() const {
    double s = 0.0;
    for (const auto& r : replicates)
      if (r.ok) s += r.ari;
    return completed() ? s / completed() : 0.0;
  }

  double ari_sd() const {
    const int m = completed();
    if (m < 2) return 0.0;
    const double mu = ari_mean();
    double s = 0.0;
    for (const auto& r : replicates)
      if (r.ok) s += (r.ari - mu) * (r.ari - mu);
    return std::sqrt(s / (m - 1));
  }

  double rmse_g() const {
    double s = 0.0;
    long n = 0;
    for (const auto& r : replicates)
      if (r.ok) s += r.graph_sq_error, n += r.n;
    return n ? std::sqrt(s / static_cast<double>(n)) : 0.0;
  }

  double mean_k_hat() const {
    double s = 0.0;
    for (const auto& r : replicates)
      if (r.ok) s += r.k_hat;
    return completed() ? s / completed() : 0.0;
  }
};

/// Worker count: MFMPGM_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline int worker_threads() {
  if (const char* env = std::getenv("MFMPGM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `count` independent jobs on up to `threads` workers. Results are
/// stored by job index, so output does not depend on scheduling.
template <typename Job>
void parallel_for(int count, int threads, Job&& job) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) job(k);
    });
  for (auto& t : pool) t.join();
}

/// Replicate r simulates with seed derive_seed(design.seed, r) and fits with
/// seed derive_seed(config.seed, r).
inline ReplicateResult run_replicate(const SimDesign& design, const ChainConfig& config, int r) {
  ReplicateResult res;
  res.replicate = r;
  try {
    SimDesign d = design;
    d.seed = derive_seed(design.seed, static_cast<std::uint64_t>(r));
    const auto sim = simulate_dataset(d);
    ChainConfig c = config;
    c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    const auto samples = run_chain(sim.data, c);
    const auto fit = summarize(samples);
    res.k_hat = fit.k();
    res.ari = ari(fit.labels, sim.truth.labels);
    res.graph_sq_error = graph_squared_error(fit.observation_graphs(), sim.truth.observation_graphs());
    res.n = sim.data.rows();
    res.ok = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

inline BenchmarkReport run_replicates(const SimDesign& design, const ChainConfig& config, int replicates,
                                      int threads = worker_threads()) {
  design.validate();
  BenchmarkReport report;
  report.design = design.name;
  report.mode = config.label_mode;
  report.k_true = design.k_true;
  report.replicates.resize(replicates);
  parallel_for(replicates, threads, [&](int r) { report.replicates[r] = run_replicate(design, config, r); });
  return report;
}

}  // namespace mfmpgm
