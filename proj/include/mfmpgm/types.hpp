#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfmpgm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Smallest Cholesky pivot accepted for a positive-definite matrix.
inline constexpr double kPdTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

/// N x p table of ordinal levels. Levels are 1-based: column j takes values in
/// {1, ..., level_counts[j]}.
struct OrdinalDataset {
  IntMatrix values;
  std::vector<int> level_counts;
  std::vector<std::string> variable_names;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  int level(int i, int j) const { return values(i, j); }

  std::string name(int j) const {
    if (j < static_cast<int>(variable_names.size())) return variable_names[j];
    return "X" + std::to_string(j + 1);
  }
};

struct Violation {
  int row = -1;  // -1 when the violation is not tied to a single cell
  int col = -1;
  int value = 0;
  std::string message;
};

inline std::vector<Violation> validate_dataset(const OrdinalDataset& data) {
  std::vector<Violation> out;
  const int n = data.rows();
  const int p = data.cols();
  if (n < 1) out.push_back({-1, -1, n, "dataset has no rows"});
  if (p < 1) out.push_back({-1, -1, p, "dataset has no columns"});
  if (static_cast<int>(data.level_counts.size()) != p) {
    out.push_back({-1, -1, static_cast<int>(data.level_counts.size()),
                   "level_counts length differs from column count"});
    return out;
  }
  if (!data.variable_names.empty() && static_cast<int>(data.variable_names.size()) != p) {
    out.push_back({-1, -1, static_cast<int>(data.variable_names.size()),
                   "variable_names length differs from column count"});
  }
  for (int j = 0; j < p; ++j) {
    if (data.level_counts[j] < 2) {
      out.push_back({-1, j, data.level_counts[j], "level count below 2"});
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      const int v = data.values(i, j);
      if (v < 1 || v > data.level_counts[j]) {
        std::ostringstream msg;
        msg << "level " << v << " at row " << i + 1 << ", column " << j + 1
            << " outside {1.." << data.level_counts[j] << "}";
        out.push_back({i, j, v, msg.str()});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// Per-variable cutpoints. cuts[j] holds theta_1 < ... < theta_{K_j - 1};
/// theta_0 = -inf and theta_{K_j} = +inf are implicit.
struct Thresholds {
  std::vector<std::vector<double>> cuts;

  int variables() const { return static_cast<int>(cuts.size()); }
  int levels(int j) const { return static_cast<int>(cuts[j].size()) + 1; }

  /// theta_k for k in 0..K_j.
  double cut(int j, int k) const {
    if (k <= 0) return -kInf;
    if (k >= levels(j)) return kInf;
    return cuts[j][k - 1];
  }

  /// Half-open interval [lower, upper) that a latent value at `level` must occupy.
  double lower(int j, int level) const { return cut(j, level - 1); }
  double upper(int j, int level) const { return cut(j, level); }

  bool strictly_increasing() const {
    for (const auto& c : cuts) {
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (!std::isfinite(c[k])) return false;
        if (k > 0 && !(c[k - 1] < c[k])) return false;
      }
    }
    return true;
  }

  /// Ordinal level of latent value z for variable j: 1 + #{l : z >= theta_l}.
  int discretize(int j, double z) const {
    int level = 1;
    for (double c : cuts[j]) {
      if (z >= c) ++level;
    }
    return level;
  }
};

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

/// Undirected simple graph on p nodes stored as a dense symmetric 0/1 table.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int p) : p_(p), adj_(static_cast<std::size_t>(p) * p, 0) {}

  static Graph empty(int p) { return Graph(p); }

  static Graph complete(int p) {
    Graph g(p);
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) g.set_edge(i, j, true);
    return g;
  }

  /// Edge wherever the off-diagonal entry of `m` is nonzero.
  static Graph from_pattern(const Matrix& m, double tol = 0.0) {
    const int p = static_cast<int>(m.rows());
    Graph g(p);
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        if (std::abs(m(i, j)) > tol || std::abs(m(j, i)) > tol) g.set_edge(i, j, true);
    return g;
  }

  int size() const { return p_; }

  bool has_edge(int i, int j) const { return adj_[idx(i, j)] != 0; }

  void set_edge(int i, int j, bool present) {
    if (i == j) throw std::invalid_argument("Graph: self-loops are not allowed");
    adj_[idx(i, j)] = present ? 1 : 0;
    adj_[idx(j, i)] = present ? 1 : 0;
  }

  void toggle(int i, int j) { set_edge(i, j, !has_edge(i, j)); }

  int edge_count() const {
    int total = 0;
    for (int i = 0; i < p_; ++i)
      for (int j = i + 1; j < p_; ++j) total += has_edge(i, j);
    return total;
  }

  int degree(int i) const {
    int d = 0;
    for (int j = 0; j < p_; ++j) d += has_edge(i, j);
    return d;
  }

  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (int j = 0; j < p_; ++j)
      if (has_edge(i, j)) out.push_back(j);
    return out;
  }

  bool is_complete() const { return edge_count() == p_ * (p_ - 1) / 2; }

  /// Number of adjacency-table entries (both triangles) that differ.
  int disagreement(const Graph& other) const {
    if (other.p_ != p_) throw std::invalid_argument("Graph: dimension mismatch");
    int diff = 0;
    for (std::size_t k = 0; k < adj_.size(); ++k) diff += adj_[k] != other.adj_[k];
    return diff;
  }

  IntMatrix to_matrix() const {
    IntMatrix m(p_, p_);
    for (int i = 0; i < p_; ++i)
      for (int j = 0; j < p_; ++j) m(i, j) = adj_[idx(i, j)];
    return m;
  }

  bool operator==(const Graph&) const = default;

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * p_ + j; }

  int p_ = 0;
  std::vector<std::uint8_t> adj_;
};

// ---------------------------------------------------------------------------
// Cluster parameters and sampler state
// ---------------------------------------------------------------------------

struct ClusterParams {
  Vector mean;
  Matrix precision;
  Graph graph;
};

/// True when every Cholesky pivot of the symmetric matrix exceeds `tol`.
inline bool is_positive_definite(const Matrix& m, double tol = kPdTolerance) {
  const Eigen::Index p = m.rows();
  if (p != m.cols()) return false;
  Matrix l = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double pivot = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > tol)) return false;
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

/// Probability mass function on the positive integers, given as a log pmf.
struct KPrior {
  std::string name;
  std::function<double(int)> log_pmf;

  /// Poisson(lambda) conditioned on k >= 1.
  static KPrior truncated_poisson(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("truncated Poisson rate must be positive");
    const double log_norm = std::log(-std::expm1(-lambda));
    return KPrior{"truncated_poisson(" + std::to_string(lambda) + ")",
                  [lambda, log_norm](int k) {
                    if (k < 1) return -kInf;
                    return -lambda + k * std::log(lambda) - std::lgamma(k + 1.0) - log_norm;
                  }};
  }
};

struct Hyperparams {
  double gamma = 1.0;   // Dirichlet concentration
  double a = 0.01;      // mean-prior precision scale
  Vector mu0;           // prior mean; empty means zero
  double b = 3.0;       // G-Wishart degrees of freedom
  Matrix D;             // G-Wishart scale; empty means identity
  double q = 0.2;       // edge inclusion probability
  KPrior k_prior = KPrior::truncated_poisson(1.0);

  /// Copy with mu0 and D filled in for dimension p.
  Hyperparams resolved(int p) const {
    Hyperparams h = *this;
    if (h.mu0.size() == 0) h.mu0 = Vector::Zero(p);
    if (h.D.size() == 0) h.D = Matrix::Identity(p, p);
    return h;
  }

  void validate(int p) const {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
    if (!(b > 2.0)) throw std::invalid_argument("b must exceed 2");
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0, 1)");
    if (mu0.size() != 0 && mu0.size() != p) throw std::invalid_argument("mu0 dimension mismatch");
    if (D.size() != 0) {
      if (D.rows() != p || D.cols() != p) throw std::invalid_argument("D dimension mismatch");
      if (!is_positive_definite(D)) throw std::invalid_argument("D is not positive definite");
    }
    if (!k_prior.log_pmf) throw std::invalid_argument("k_prior is unset");
  }
};

/// Full sampler state. Labels are 1-based and contiguous: label k refers to
/// clusters[k - 1].
struct GibbsState {
  std::vector<int> labels;
  std::vector<ClusterParams> clusters;
  Matrix latent;
  Thresholds thresholds;

  int cluster_count() const { return static_cast<int>(clusters.size()); }

  std::vector<int> cluster_sizes() const {
    std::vector<int> sizes(clusters.size(), 0);
    for (int c : labels) ++sizes[c - 1];
    return sizes;
  }

  std::vector<int> members(int label) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
      if (labels[i] == label) out.push_back(i);
    return out;
  }
};

/// Checks every GibbsState invariant against the data. Returns one message per
/// problem; empty when the state is consistent.
inline std::vector<std::string> validate_state(const GibbsState& state, const OrdinalDataset& data) {
  std::vector<std::string> out;
  const int n = data.rows();
  const int p = data.cols();
  const int k = state.cluster_count();
  if (static_cast<int>(state.labels.size()) != n) out.push_back("labels length differs from N");
  if (k < 1) out.push_back("no clusters");
  if (k > n) out.push_back("more clusters than observations");
  std::vector<int> sizes(k, 0);
  for (int i = 0; i < static_cast<int>(state.labels.size()); ++i) {
    const int c = state.labels[i];
    if (c < 1 || c > k) {
      out.push_back("label of row " + std::to_string(i + 1) + " refers to a missing cluster");
    } else {
      ++sizes[c - 1];
    }
  }
  for (int c = 0; c < k; ++c) {
    if (sizes[c] == 0) out.push_back("cluster " + std::to_string(c + 1) + " is empty");
    const auto& cl = state.clusters[c];
    if (cl.mean.size() != p || cl.precision.rows() != p || cl.graph.size() != p) {
      out.push_back("cluster " + std::to_string(c + 1) + " has wrong dimension");
      continue;
    }
    if (!is_positive_definite(cl.precision))
      out.push_back("cluster " + std::to_string(c + 1) + " precision is not positive definite");
    for (int r = 0; r < p; ++r)
      for (int s = 0; s < p; ++s)
        if (r != s && !cl.graph.has_edge(r, s) && cl.precision(r, s) != 0.0)
          out.push_back("cluster " + std::to_string(c + 1) + " precision violates graph zero at (" +
                        std::to_string(r + 1) + "," + std::to_string(s + 1) + ")");
  }
  if (state.thresholds.variables() != p) {
    out.push_back("threshold variable count differs from p");
    return out;
  }
  if (!state.thresholds.strictly_increasing()) out.push_back("thresholds not strictly increasing");
  for (int j = 0; j < p; ++j)
    if (state.thresholds.levels(j) != data.level_counts[j])
      out.push_back("threshold count mismatch for column " + std::to_string(j + 1));
  if (state.latent.rows() != n || state.latent.cols() != p) {
    out.push_back("latent matrix has wrong shape");
    return out;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      const int x = data.values(i, j);
      const double z = state.latent(i, j);
      if (!(z >= state.thresholds.lower(j, x) && z < state.thresholds.upper(j, x))) {
        std::ostringstream msg;
        msg << "latent (" << i + 1 << "," << j + 1 << ") = " << z << " outside its level-" << x
            << " bracket";
        out.push_back(msg.str());
      }
    }
  }
  return out;
}

}  // namespace mfmpgm
