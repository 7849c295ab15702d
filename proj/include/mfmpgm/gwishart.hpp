#pragma once

// G-Wishart machinery. The density is parameterized as
//   p(Omega | G) = I_G(b, D)^{-1} |Omega|^{(b-2)/2} exp(-tr(D Omega) / 2),
// restricted to positive-definite Omega with zeros at the non-edges of G. For
// the complete graph this is the Wishart with b + p - 1 degrees of freedom and
// scale D^{-1}.

#include "mfmpgm/random.hpp"
#include "mfmpgm/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mfmpgm {

struct GWishartParams {
  double b = 3.0;
  Matrix D;

  void validate() const {
    if (!(b > 2.0)) throw std::invalid_argument("G-Wishart: b must exceed 2");
    if (D.rows() != D.cols()) throw std::invalid_argument("G-Wishart: D must be square");
    if (!is_positive_definite(D)) throw std::invalid_argument("G-Wishart: D is not positive definite");
  }
};

/// Running sums over the latent rows of one cluster.
struct SufficientStats {
  int n = 0;
  Vector sum;
  Matrix scatter;

  static SufficientStats empty(int p) { return {0, Vector::Zero(p), Matrix::Zero(p, p)}; }

  void add(const Eigen::Ref<const Vector>& z) {
    ++n;
    sum += z;
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(z);
    scatter.triangularView<Eigen::StrictlyUpper>() = scatter.transpose();
  }
};

// Sweep cap and tolerance of the direct sampler.
inline constexpr int kDirectSamplerMaxSweeps = 1000;
inline constexpr double kDirectSamplerTolerance = 1e-8;

namespace detail {

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline Matrix inverse_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("matrix is not positive definite");
  return symmetrized(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

inline void zero_non_edges(Matrix& omega, const Graph& g) {
  const int p = g.size();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && !g.has_edge(i, j)) omega(i, j) = 0.0;
}


/// Residual accepted when roundoff stalls the Newton completion.
inline constexpr double kCompletionRoundoffLimit = 1e-5;

/// Newton's method for the same completion problem the direct sampler solves:
/// the Omega with the graph's zero pattern minimizing tr(Sigma Omega) -
/// log|Omega|, equivalently Omega^{-1} matching Sigma on the diagonal and the
/// edges. Used when the regression sweeps converge too slowly, which happens
/// for badly conditioned Sigma. Converges when every matched entry agrees to
/// 1e-8 relative to sqrt(Sigma_ii Sigma_jj), or, when roundoff stalls the
/// objective first, to kCompletionRoundoffLimit.

inline Matrix complete_by_newton(const Matrix& sigma, const Graph& graph) {
  const int p = graph.size();
  std::vector<std::pair<int, int>> free;
  for (int i = 0; i < p; ++i) free.emplace_back(i, i);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (graph.has_edge(i, j)) free.emplace_back(i, j);
  const int m = static_cast<int>(free.size());

  const auto objective = [&](const Matrix& omega, double& value) {
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) return false;
    value = (sigma.cwiseProduct(omega)).sum() - 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return true;
  };

  Matrix omega = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) omega(i, i) = 1.0 / sigma(i, i);
  double f = 0.0;
  objective(omega, f);
  for (int iter = 0; iter < 100; ++iter) {
    const Matrix w = inverse_spd(omega);
    Vector grad(m);
    double worst = 0.0;
    for (int a = 0; a < m; ++a) {
      const auto [i, j] = free[a];
      const double diff = sigma(i, j) - w(i, j);
      grad(a) = i == j ? diff : 2.0 * diff;
      worst = std::max(worst, std::abs(diff) / std::sqrt(sigma(i, i) * sigma(j, j)));
    }
    if (worst < kDirectSamplerTolerance) return omega;
    Matrix hess(m, m);
    for (int a = 0; a < m; ++a) {
      const auto [i, j] = free[a];
      for (int b = a; b < m; ++b) {
        const auto [k, l] = free[b];
        double h;
        if (i == j && k == l) h = w(i, k) * w(i, k);
        else if (i == j) h = 2.0 * w(i, k) * w(i, l);
        else if (k == l) h = 2.0 * w(k, i) * w(k, j);
        else h = 2.0 * (w(j, k) * w(i, l) + w(j, l) * w(i, k));
        hess(a, b) = hess(b, a) = h;
      }
    }
    const double f_before = f;
    const Vector step = -hess.ldlt().solve(grad);
    const double slope = grad.dot(step);
    double t = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      Matrix trial = omega;
      for (int a = 0; a < m; ++a) {
        const auto [i, j] = free[a];
        trial(i, j) += t * step(a);
        if (i != j) trial(j, i) += t * step(a);
      }
      double ft;
      if (objective(trial, ft) && ft <= f + 1e-4 * t * slope) {
        omega = trial;
        f = ft;
        moved = true;
        break;
      }
    }
    // For a badly conditioned Omega the residual bottoms out at roundoff level
    // above the tolerance; once the objective stops decreasing that is the
    // best double precision can do.
    if (!moved || f == f_before) {
      if (worst < kCompletionRoundoffLimit) return omega;
      break;
    }
  }
  throw std::runtime_error("sample_gwishart: graph completion did not converge");
}
}  // namespace detail

/// Wishart draw with `df` degrees of freedom and scale D^{-1} (Bartlett).
inline Matrix sample_wishart(double df, const Matrix& D, Rng& rng) {
  const Eigen::Index p = D.rows();
  Eigen::LLT<Matrix> llt(D);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("sample_wishart: D is not positive definite");
  Matrix A = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  // D = C C'  =>  D^{-1} = C'^{-1} C^{-1}; Omega = (C'^{-1} A)(C'^{-1} A)'.
  const Matrix Y = llt.matrixU().solve(A);
  return detail::symmetrized(Y * Y.transpose());
}

/// Draw from W_G(b, D) with the direct sampler: a full Wishart draw whose
/// covariance is completed onto the graph by iterative regression until the
/// largest entry change in a sweep drops below 1e-8.
inline Matrix sample_gwishart(const Graph& graph, const GWishartParams& params, Rng& rng) {
  const int p = graph.size();
  if (params.D.rows() != p || params.D.cols() != p)
    throw std::invalid_argument("sample_gwishart: graph and D dimensions differ");
  if (!(params.b > 2.0)) throw std::invalid_argument("sample_gwishart: b must exceed 2");

  Matrix full = sample_wishart(params.b + p - 1, params.D, rng);
  if (graph.is_complete()) return full;

  const Matrix sigma = detail::inverse_spd(full);
  Matrix w = sigma;
  std::vector<std::vector<int>> nbrs(p);
  for (int j = 0; j < p; ++j) nbrs[j] = graph.neighbors(j);

  Matrix previous(p, p);
  int sweep = 0;
  for (; sweep < kDirectSamplerMaxSweeps; ++sweep) {
    previous = w;
    for (int j = 0; j < p; ++j) {
      const auto& nb = nbrs[j];
      const int m = static_cast<int>(nb.size());
      if (m == 0) {
        for (int k = 0; k < p; ++k)
          if (k != j) w(j, k) = w(k, j) = 0.0;
        continue;
      }
      Matrix w_nn(m, m);
      Vector s_nj(m);
      for (int r = 0; r < m; ++r) {
        s_nj(r) = sigma(nb[r], j);
        for (int c = 0; c < m; ++c) w_nn(r, c) = w(nb[r], nb[c]);
      }
      const Vector beta = w_nn.llt().solve(s_nj);
      for (int k = 0; k < p; ++k) {
        if (k == j) continue;
        double acc = 0.0;
        for (int r = 0; r < m; ++r) acc += w(k, nb[r]) * beta(r);
        w(j, k) = w(k, j) = acc;
      }
    }
    if ((w - previous).cwiseAbs().maxCoeff() < kDirectSamplerTolerance) break;
  }
  if (sweep == kDirectSamplerMaxSweeps) return detail::complete_by_newton(sigma, graph);

  Matrix omega = detail::inverse_spd(w);
  detail::zero_non_edges(omega, graph);
  return omega;
}

/// D + S_post, the posterior G-Wishart scale once the mean is integrated out
/// under mu ~ N(mu0, (a Omega)^{-1}).
inline Matrix posterior_scale(const Matrix& D, const SufficientStats& stats, double a, const Vector& mu0) {
  const Vector shifted = stats.sum + a * mu0;
  Matrix s = stats.scatter + a * mu0 * mu0.transpose() - shifted * shifted.transpose() / (a + stats.n);
  return detail::symmetrized(D + s);
}

/// Omega_c | G_c, Z ~ W_G(b + n_c, D + S_post).
inline Matrix sample_precision_posterior(const Graph& graph, const GWishartParams& params,
                                         const SufficientStats& stats, double a, const Vector& mu0,
                                         Rng& rng) {
  GWishartParams post{params.b + stats.n, posterior_scale(params.D, stats, a, mu0)};
  if (!is_positive_definite(post.D))
    throw std::runtime_error("sample_precision_posterior: posterior scale is not positive definite");
  return sample_gwishart(graph, post, rng);
}

/// mu_c | Omega_c, Z ~ N((a mu0 + sum) / (a + n_c), ((a + n_c) Omega_c)^{-1}).
inline Vector sample_mean_posterior(const Matrix& precision, const SufficientStats& stats, double a,
                                    const Vector& mu0, Rng& rng) {
  const double scale = a + stats.n;
  const Vector center = (a * mu0 + stats.sum) / scale;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_mean_posterior: precision is not positive definite");
  Vector e(precision.rows());
  for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = rng.normal();
  // Omega = L L'; L'^{-1} e has covariance Omega^{-1}.
  return center + llt.matrixU().solve(e) / std::sqrt(scale);
}

// ---------------------------------------------------------------------------
// Graph moves
// ---------------------------------------------------------------------------

namespace detail {

/// Ordering that moves nodes i and j to the last two positions.
inline std::vector<int> edge_last_order(int p, int i, int j) {
  std::vector<int> order;
  order.reserve(p);
  for (int k = 0; k < p; ++k)
    if (k != i && k != j) order.push_back(k);
  order.push_back(i);
  order.push_back(j);
  return order;
}

inline Matrix permuted(const Matrix& m, const std::vector<int>& order) {
  const int p = static_cast<int>(order.size());
  Matrix out(p, p);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) out(r, c) = m(order[r], order[c]);
  return out;
}

/// Upper-triangular Phi with Omega = Phi' Phi.
inline Matrix upper_cholesky(const Matrix& omega) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw std::runtime_error("upper_cholesky: not positive definite");
  return llt.matrixU();
}

/// For the last node pair (a, b) = (p-2, p-1) of an upper Cholesky factor Phi,
/// the log of
///   Phi_aa * sqrt(2 pi / d_bb) * exp(d_bb (phi0 - m)^2 / 2),
/// which is the ratio of the unnormalized G-Wishart density with the (a, b)
/// edge to the density without it, after the free entry Phi_ab is integrated
/// against its Gaussian full conditional. Here phi0 is the value Phi_ab takes
/// when the edge is absent and m = -d_ab Phi_aa / d_bb is the conditional mean.
inline double edge_log_ratio(const Matrix& phi, double d_ab, double d_bb) {
  const int p = static_cast<int>(phi.rows());
  const int a = p - 2;
  const int b = p - 1;
  double cross = 0.0;
  for (int m = 0; m < a; ++m) cross += phi(m, a) * phi(m, b);
  const double phi0 = -cross / phi(a, a);
  const double mean = -d_ab * phi(a, a) / d_bb;
  const double dev = phi0 - mean;
  return std::log(phi(a, a)) + 0.5 * (kLogTwoPi - std::log(d_bb)) + 0.5 * d_bb * dev * dev;
}

}  // namespace detail

struct GraphUpdateResult {
  Graph graph;
  Matrix precision;
  int proposed = 0;
  int accepted = 0;
};

/// One sweep of single-edge toggles over all pairs in random order, targeting
/// (G, Omega) | Z with the mean integrated out. Each toggle is a reversible
/// move on the Cholesky entry of the edge; the prior normalizing-constant
/// ratio I_G'(b, D) / I_G(b, D) is cancelled by an exact auxiliary draw from
/// W_G'(b, D) (exchange / double Metropolis-Hastings step).
inline GraphUpdateResult update_graph(const Graph& graph, const Matrix& precision, const GWishartParams& params,
                                      double q, const SufficientStats& stats, double a, const Vector& mu0,
                                      Rng& rng) {
  const int p = graph.size();
  GraphUpdateResult out{graph, precision, 0, 0};
  if (p < 2) return out;

  const Matrix d_post = posterior_scale(params.D, stats, a, mu0);
  const double log_prior_odds = std::log(q) - std::log1p(-q);

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(p * (p - 1) / 2);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
  std::shuffle(pairs.begin(), pairs.end(), rng);

  for (const auto& [i, j] : pairs) {
    ++out.proposed;
    const bool adding = !out.graph.has_edge(i, j);
    const auto order = detail::edge_last_order(p, i, j);

    Matrix phi = detail::upper_cholesky(detail::permuted(out.precision, order));
    const double log_r_post = detail::edge_log_ratio(phi, d_post(i, j), d_post(j, j));

    Graph proposal = out.graph;
    proposal.toggle(i, j);
    const Matrix aux = sample_gwishart(proposal, params, rng);
    const Matrix phi_aux = detail::upper_cholesky(detail::permuted(aux, order));
    const double log_r_prior = detail::edge_log_ratio(phi_aux, params.D(i, j), params.D(j, j));

    const double log_alpha = adding ? log_prior_odds + log_r_post - log_r_prior
                                    : -log_prior_odds - log_r_post + log_r_prior;
    if (!(std::log(rng.uniform()) < log_alpha)) continue;

    const int ra = p - 2;
    const int rb = p - 1;
    if (adding) {
      const double d_bb = d_post(j, j);
      phi(ra, rb) = -d_post(i, j) * phi(ra, ra) / d_bb + rng.normal() / std::sqrt(d_bb);
    } else {
      double cross = 0.0;
      for (int m = 0; m < ra; ++m) cross += phi(m, ra) * phi(m, rb);
      phi(ra, rb) = -cross / phi(ra, ra);
    }
    const Matrix omega_perm = phi.transpose() * phi;
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) out.precision(order[r], order[c]) = omega_perm(r, c);
    out.precision = detail::symmetrized(out.precision);
    out.graph = proposal;
    detail::zero_non_edges(out.precision, out.graph);
    ++out.accepted;
  }
  return out;
}

/// log |Omega| from a Cholesky factorization.
inline double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("log_det_spd: not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Independent edge draws with inclusion probability q.
inline Graph sample_graph_prior(int p, double q, Rng& rng) {
  Graph g(p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (rng.bernoulli(q)) g.set_edge(i, j, true);
  return g;
}

}  // namespace mfmpgm
