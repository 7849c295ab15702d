#pragma once

// Gibbs sampler for the clustered probit graphical model: collapsed label
// updates through the MFM (or CRP) urn, per-cluster (G, Omega, mu) updates,
// latent truncated-normal sweeps and threshold sweeps.

#include "mfmpgm/gwishart.hpp"
#include "mfmpgm/latent.hpp"
#include "mfmpgm/mfm.hpp"
#include "mfmpgm/random.hpp"
#include "mfmpgm/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfmpgm {

enum class LabelMode { MFM, CRP };

inline std::string to_string(LabelMode mode) { return mode == LabelMode::MFM ? "mfm" : "crp"; }

inline LabelMode parse_label_mode(const std::string& s) {
  if (s == "mfm" || s == "MFM") return LabelMode::MFM;
  if (s == "crp" || s == "CRP") return LabelMode::CRP;
  throw std::invalid_argument("unknown label mode '" + s + "' (expected mfm or crp)");
}

struct ChainConfig {
  int iterations = 2000;
  int burn_in = 1000;
  std::uint64_t seed = 1;
  Hyperparams hyper;
  LabelMode label_mode = LabelMode::MFM;
  int aux_components = 3;
  int t_max = 0;  // 0 selects min(N, 50)
  ThresholdOptions thresholds;
  bool relocation = false;  // joint (label, latent row) moves after each label sweep

  static ChainConfig simulation() { return {}; }

  static ChainConfig case_study() {
    ChainConfig c;
    c.iterations = 6000;
    c.burn_in = 3000;
    return c;
  }

  void validate(int p) const {
    if (iterations < 1) throw std::invalid_argument("iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) throw std::invalid_argument("burn_in must lie in [0, iterations)");
    if (aux_components < 1) throw std::invalid_argument("aux_components must be positive");
    if (t_max < 0) throw std::invalid_argument("t_max must be nonnegative");
    hyper.validate(p);
  }
};

struct PosteriorDraw {
  int iteration = 0;
  std::vector<int> labels;   // 1-based, contiguous
  std::vector<Graph> graphs; // graphs[k - 1] belongs to label k

  int cluster_count() const { return static_cast<int>(graphs.size()); }
};

struct PosteriorSamples {
  int n = 0;
  int p = 0;
  std::uint64_t seed = 0;
  std::vector<PosteriorDraw> draws;
  long edge_proposals = 0;
  long edge_accepts = 0;

  bool empty() const { return draws.empty(); }
  std::size_t size() const { return draws.size(); }
};

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// log N(z; mean, precision^{-1}).
inline double log_mvn_density(const Vector& z, const Vector& mean, const Matrix& precision) {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw std::runtime_error("log_mvn_density: precision not positive definite");
  const Vector d = z - mean;
  // d' Omega d = |L' d|^2 with Omega = L L'.
  const double quad = (llt.matrixU() * d).squaredNorm();
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * log_det - 0.5 * static_cast<double>(z.size()) * kLogTwoPi - 0.5 * quad;
}

/// log of the single-observation likelihood with the cluster mean integrated
/// out under mu ~ N(mu0, (a Omega)^{-1}):
///   N(z; mu0, ((1 + a) / a) Omega^{-1}).
inline double log_new_cluster_density(const Vector& z, const Matrix& precision, double a, const Vector& mu0) {
  return log_mvn_density(z, mu0, precision * (a / (1.0 + a)));
}

/// Monte Carlo estimate of the log marginal m(z) of one observation under a
/// brand-new cluster, averaging over (G, Omega) drawn from their priors. The
/// exact quantity is the graph-averaged ratio I_G(b + 1, D + B - A) / I_G(b, D)
/// times (2 pi)^{-p/2} (a / (a + 1))^{p/2}. Diagnostic only.
inline double estimate_log_new_cluster_marginal(const Vector& z, const Hyperparams& hyper, int draws, Rng& rng) {
  const int p = static_cast<int>(z.size());
  const Hyperparams h = hyper.resolved(p);
  const GWishartParams prior{h.b, h.D};
  double acc = -kInf;
  for (int d = 0; d < draws; ++d) {
    const Graph g = sample_graph_prior(p, h.q, rng);
    const Matrix omega = sample_gwishart(g, prior, rng);
    acc = detail::log_add(acc, log_new_cluster_density(z, omega, h.a, h.mu0));
  }
  return acc - std::log(static_cast<double>(draws));
}

// ---------------------------------------------------------------------------
// Label update
// ---------------------------------------------------------------------------

/// Candidate (graph, precision) for a not-yet-occupied cluster.
struct NewClusterCandidate {
  Graph graph;
  Matrix precision;
};

/// Normalized full-conditional probabilities of one label.
struct LabelProbabilities {
  std::vector<double> existing;  // one per occupied cluster
  std::vector<double> fresh;     // one per new-cluster candidate
};

/// Full conditional of c_i given the rest, over existing clusters and the
/// supplied new-cluster candidates. `sizes` counts the other observations in
/// each cluster. For MFM an existing cluster weighs (N_{-i,k} + gamma) p(z_i |
/// mu_k, Omega_k); for CRP it weighs N_{-i,k} p(z_i | mu_k, Omega_k). Each
/// candidate weighs exp(log_new_factor) / m times the mean-integrated density.
inline LabelProbabilities label_probabilities(const Vector& z, const std::vector<int>& sizes,
                                              const std::vector<ClusterParams>& clusters,
                                              const std::vector<NewClusterCandidate>& candidates,
                                              double log_new_factor, const Hyperparams& hyper, LabelMode mode) {
  const std::size_t k = clusters.size();
  const std::size_t m = candidates.size();
  std::vector<double> logw(k + m, -kInf);
  for (std::size_t c = 0; c < k; ++c) {
    const double prior = mode == LabelMode::MFM ? std::log(sizes[c] + hyper.gamma) : std::log(sizes[c]);
    logw[c] = prior + log_mvn_density(z, clusters[c].mean, clusters[c].precision);
  }
  const double per_candidate = log_new_factor - std::log(static_cast<double>(std::max<std::size_t>(m, 1)));
  for (std::size_t l = 0; l < m; ++l)
    logw[k + l] = per_candidate + log_new_cluster_density(z, candidates[l].precision, hyper.a, hyper.mu0);

  const double top = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(top)) throw std::runtime_error("label_probabilities: no finite weight");
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    total += w;
  }
  LabelProbabilities out;
  out.existing.reserve(k);
  out.fresh.reserve(m);
  for (std::size_t c = 0; c < k; ++c) out.existing.push_back(logw[c] / total);
  for (std::size_t l = 0; l < m; ++l) out.fresh.push_back(logw[k + l] / total);
  return out;
}

namespace detail {

/// Removes cluster `label` (1-based) keeping labels contiguous: the last
/// cluster takes its slot.
inline void drop_cluster(GibbsState& state, std::vector<int>& sizes, int label) {
  const int last = state.cluster_count();
  if (label != last) {
    state.clusters[label - 1] = std::move(state.clusters[last - 1]);
    sizes[label - 1] = sizes[last - 1];
    for (int& c : state.labels)
      if (c == last) c = label;
  }
  state.clusters.pop_back();
  sizes.pop_back();
}

inline int sample_index(const std::vector<double>& probs, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (u < probs[k]) return static_cast<int>(k);
    u -= probs[k];
  }
  // Rounding left a sliver of mass; take the last positive entry.
  for (std::size_t k = probs.size(); k-- > 0;)
    if (probs[k] > 0.0) return static_cast<int>(k);
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace detail

/// Resample the label of observation i. The cluster's (mu, Omega, G) enter
/// through p(z_i | mu_k, Omega_k); a new cluster is represented by
/// `aux_components` candidate (G, Omega) pairs from the prior with the mean
/// integrated out. If i was alone in its cluster, that cluster's (G, Omega)
/// is the first candidate. A chosen candidate gets its mean drawn from
/// N((a mu0 + z_i) / (a + 1), ((a + 1) Omega)^{-1}).
inline void update_label(int i, GibbsState& state, const LogVnTable& table, const ChainConfig& config, Rng& rng) {
  const int n = static_cast<int>(state.labels.size());
  const int p = static_cast<int>(state.latent.cols());
  const Hyperparams h = config.hyper.resolved(p);
  const GWishartParams prior{h.b, h.D};
  const Vector z = state.latent.row(i).transpose();

  std::vector<int> sizes = state.cluster_sizes();
  const int old = state.labels[i];
  --sizes[old - 1];
  std::optional<NewClusterCandidate> own;
  state.labels[i] = 0;
  if (sizes[old - 1] == 0) {
    own = NewClusterCandidate{state.clusters[old - 1].graph, state.clusters[old - 1].precision};
    detail::drop_cluster(state, sizes, old);
  }
  const int t = state.cluster_count();

  bool new_allowed = t < n;
  double log_new_factor = 0.0;
  if (t >= 1) {
    if (config.label_mode == LabelMode::MFM) {
      new_allowed = new_allowed && t + 1 <= table.t_max();
      if (new_allowed) log_new_factor = log_urn_weight_new(table, t, h.gamma);
    } else {
      log_new_factor = std::log(h.gamma);
    }
  }

  std::vector<NewClusterCandidate> candidates;
  if (new_allowed) {
    candidates.reserve(config.aux_components);
    if (own) candidates.push_back(std::move(*own));
    while (static_cast<int>(candidates.size()) < config.aux_components) {
      Graph g = sample_graph_prior(p, h.q, rng);
      Matrix omega = sample_gwishart(g, prior, rng);
      candidates.push_back({std::move(g), std::move(omega)});
    }
  }

  const auto probs = label_probabilities(z, sizes, state.clusters, candidates, log_new_factor, h, config.label_mode);
  std::vector<double> flat = probs.existing;
  flat.insert(flat.end(), probs.fresh.begin(), probs.fresh.end());
  const int pick = detail::sample_index(flat, rng);

  if (pick < t) {
    state.labels[i] = pick + 1;
    return;
  }
  auto& chosen = candidates[pick - t];
  SufficientStats one = SufficientStats::empty(p);
  one.add(z);
  Vector mean = sample_mean_posterior(chosen.precision, one, h.a, h.mu0, rng);
  state.clusters.push_back({std::move(mean), std::move(chosen.precision), std::move(chosen.graph)});
  state.labels[i] = state.cluster_count();
}

inline void label_sweep(GibbsState& state, const LogVnTable& table, const ChainConfig& config, Rng& rng) {
  const int n = static_cast<int>(state.labels.size());
  for (int i = 0; i < n; ++i) update_label(i, state, table, config, rng);
}

// ---------------------------------------------------------------------------
// Joint relocation of a label and its latent row
// ---------------------------------------------------------------------------

/// Metropolis-Hastings move on (c_i, z_i). Proposes another occupied cluster
/// k uniformly and a new latent row from one truncated-normal sweep under
/// cluster k started at its mean clipped into the hypercube of x_i; the
/// reverse move sweeps under the current cluster from its own clipped mean.
/// Observations alone in their cluster are left to update_label. Returns
/// whether the move was accepted; `sizes` is kept in step.
inline bool relocate_observation(int i, GibbsState& state, std::vector<int>& sizes, const OrdinalDataset& data,
                                 const Hyperparams& hyper, LabelMode mode, Rng& rng) {
  const int k = state.cluster_count();
  const int from = state.labels[i];
  if (k < 2 || sizes[from - 1] < 2) return false;
  int to = 1 + rng.index(k - 1);
  if (to >= from) ++to;

  const auto x = data.values.row(i);
  const auto& cf = state.clusters[from - 1];
  const auto& ct = state.clusters[to - 1];
  const Vector z = state.latent.row(i).transpose();
  const auto [z_new, log_fwd] = propose_latent_row(x, clipped_mean(x, ct, state.thresholds), ct, state.thresholds, rng);
  const double log_rev = latent_row_log_density(x, clipped_mean(x, cf, state.thresholds), z, cf, state.thresholds);

  const auto log_prior = [&](int size_without_i) {
    return mode == LabelMode::MFM ? std::log(size_without_i + hyper.gamma) : std::log(size_without_i);
  };
  const double log_ratio = log_prior(sizes[to - 1]) + log_mvn_density(z_new, ct.mean, ct.precision) -
                           log_prior(sizes[from - 1] - 1) - log_mvn_density(z, cf.mean, cf.precision) + log_rev -
                           log_fwd;
  if (!(std::log(rng.uniform()) < log_ratio)) return false;
  state.labels[i] = to;
  state.latent.row(i) = z_new.transpose();
  --sizes[from - 1];
  ++sizes[to - 1];
  return true;
}

inline int relocation_sweep(GibbsState& state, const OrdinalDataset& data, const ChainConfig& config, Rng& rng) {
  const Hyperparams h = config.hyper.resolved(data.cols());
  std::vector<int> sizes = state.cluster_sizes();
  int accepted = 0;
  for (int i = 0; i < data.rows(); ++i)
    accepted += relocate_observation(i, state, sizes, data, h, config.label_mode, rng);
  return accepted;
}

// ---------------------------------------------------------------------------
// Cluster parameters
// ---------------------------------------------------------------------------

struct ClusterUpdateStats {
  long edge_proposals = 0;
  long edge_accepts = 0;
};

/// For every occupied cluster: one edge sweep, then Omega | G, Z, then mu | Omega, Z.
inline ClusterUpdateStats update_cluster_params(GibbsState& state, const Hyperparams& hyper, Rng& rng) {
  const int p = static_cast<int>(state.latent.cols());
  const Hyperparams h = hyper.resolved(p);
  const GWishartParams prior{h.b, h.D};
  ClusterUpdateStats out;

  std::vector<SufficientStats> stats(state.clusters.size(), SufficientStats::empty(p));
  for (int i = 0; i < static_cast<int>(state.labels.size()); ++i)
    stats[state.labels[i] - 1].add(state.latent.row(i).transpose());

  for (std::size_t c = 0; c < state.clusters.size(); ++c) {
    auto& cl = state.clusters[c];
    auto moved = update_graph(cl.graph, cl.precision, prior, h.q, stats[c], h.a, h.mu0, rng);
    out.edge_proposals += moved.proposed;
    out.edge_accepts += moved.accepted;
    cl.graph = std::move(moved.graph);
    cl.precision = sample_precision_posterior(cl.graph, prior, stats[c], h.a, h.mu0, rng);
    cl.mean = sample_mean_posterior(cl.precision, stats[c], h.a, h.mu0, rng);
  }
  return out;
}

inline void latent_sweep(GibbsState& state, const OrdinalDataset& data, Rng& rng) {
  for (int i = 0; i < data.rows(); ++i) {
    const auto& cl = state.clusters[state.labels[i] - 1];
    state.latent.row(i) =
        update_latent_row(data.values.row(i), state.latent.row(i).transpose(), cl, state.thresholds, rng).transpose();
  }
}

// ---------------------------------------------------------------------------
// Chain
// ---------------------------------------------------------------------------

/// Cuts at standard-normal quantiles of the smoothed empirical cumulative
/// level frequencies (half a count added per level keeps every cut finite and
/// strictly increasing even when a level is unobserved).
inline Thresholds initial_thresholds(const OrdinalDataset& data) {
  Thresholds th;
  const int n = data.rows();
  th.cuts.resize(data.cols());
  for (int j = 0; j < data.cols(); ++j) {
    const int levels = data.level_counts[j];
    std::vector<double> counts(levels + 1, 0.0);
    for (int i = 0; i < n; ++i) counts[data.values(i, j)] += 1.0;
    double cum = 0.0;
    for (int k = 1; k < levels; ++k) {
      cum += counts[k] + 0.5;
      th.cuts[j].push_back(normal_quantile(cum / (n + 0.5 * levels)));
    }
  }
  return th;
}

inline GibbsState initialize_state(const OrdinalDataset& data, const ChainConfig& config, Rng& rng) {
  const int n = data.rows();
  const int p = data.cols();
  const Hyperparams h = config.hyper.resolved(p);
  GibbsState s;
  s.thresholds = initial_thresholds(data);
  s.latent.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) {
      const int x = data.values(i, j);
      s.latent(i, j) = sample_truncated_normal(0.0, 1.0, {s.thresholds.lower(j, x), s.thresholds.upper(j, x)}, rng);
    }
  s.labels.assign(n, 1);
  ClusterParams cl;
  cl.graph = sample_graph_prior(p, h.q, rng);
  cl.precision = sample_gwishart(cl.graph, {h.b, h.D}, rng);
  cl.mean = sample_mean_posterior(cl.precision, SufficientStats::empty(p), h.a, h.mu0, rng);
  s.clusters.push_back(std::move(cl));
  return s;
}

/// Context shared by every iteration of one chain.
struct ChainContext {
  const OrdinalDataset& data;
  const ChainConfig& config;
  LogVnTable table;

  ChainContext(const OrdinalDataset& d, const ChainConfig& c)
      : data(d),
        config(c),
        table(compute_log_vn(d.rows(), c.hyper.gamma, c.hyper.k_prior,
                             c.t_max > 0 ? std::min(c.t_max, d.rows()) : default_t_max(d.rows()))) {}
};

/// One full iteration: labels, relocations, cluster parameters, latent rows,
/// thresholds.
inline ClusterUpdateStats gibbs_iteration(GibbsState& state, const ChainContext& ctx, Rng& rng) {
  label_sweep(state, ctx.table, ctx.config, rng);
  if (ctx.config.relocation) relocation_sweep(state, ctx.data, ctx.config, rng);
  auto stats = update_cluster_params(state, ctx.config.hyper, rng);
  latent_sweep(state, ctx.data, rng);
  state.thresholds = update_thresholds(state.latent, ctx.data, state.thresholds, rng, ctx.config.thresholds);
  return stats;
}

inline void check_state_or_throw(const GibbsState& state, const OrdinalDataset& data, int iteration) {
  const auto problems = validate_state(state, data);
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << "chain invariant violated at iteration " << iteration << ": " << problems.front();
  if (problems.size() > 1) msg << " (+" << problems.size() - 1 << " more)";
  throw std::runtime_error(msg.str());
}

inline PosteriorDraw snapshot(const GibbsState& state, int iteration) {
  PosteriorDraw d;
  d.iteration = iteration;
  d.labels = state.labels;
  d.graphs.reserve(state.clusters.size());
  for (const auto& cl : state.clusters) d.graphs.push_back(cl.graph);
  return d;
}

/// Runs the sampler from a single-cluster start. Deterministic given the seed.
inline PosteriorSamples run_chain(const OrdinalDataset& data, const ChainConfig& config) {
  const auto violations = validate_dataset(data);
  if (!violations.empty()) throw std::invalid_argument("run_chain: invalid dataset: " + violations.front().message);
  config.validate(data.cols());

  Rng rng(config.seed);
  ChainContext ctx(data, config);
  GibbsState state = initialize_state(data, config, rng);
  // Refresh the prior-drawn parameters against the initial latent matrix so
  // the first label sweep does not compare data to an arbitrary prior draw.
  update_cluster_params(state, config.hyper, rng);

  PosteriorSamples out;
  out.n = data.rows();
  out.p = data.cols();
  out.seed = config.seed;
  out.draws.reserve(config.iterations - config.burn_in);
  for (int it = 0; it < config.iterations; ++it) {
    const auto st = gibbs_iteration(state, ctx, rng);
    out.edge_proposals += st.edge_proposals;
    out.edge_accepts += st.edge_accepts;
    check_state_or_throw(state, data, it);
    if (it >= config.burn_in) out.draws.push_back(snapshot(state, it));
  }
  return out;
}

}  // namespace mfmpgm
