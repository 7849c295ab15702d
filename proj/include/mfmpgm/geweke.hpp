#pragma once

// Joint-distribution ("getting it right") test for the sampler: compares
// summary statistics of independent forward draws from the hierarchical model
// with those of a successive-conditional chain that alternates the posterior
// kernels with re-simulation of (Z, X).
//
// The thresholds carry a flat prior in the model, which cannot be forward
// simulated. The harness therefore uses the ordered-uniform prior on
// [-bound, bound]; the threshold kernel is run with the same bound.

#include "mfmpgm/gibbs.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace mfmpgm {

using ThresholdKernel =
    std::function<Thresholds(const Matrix& latent, const OrdinalDataset& data, const Thresholds& current, Rng& rng)>;

struct GewekeOptions {
  int rounds = 10000;
  int levels = 3;
  double threshold_bound = 3.0;
  int batches = 50;
  ThresholdKernel threshold_kernel;  // empty: update_thresholds with the bound
};

struct GewekeReport {
  std::vector<std::string> names;
  std::vector<double> forward_mean;
  std::vector<double> chain_mean;
  std::vector<double> z;

  double max_abs_z() const {
    double m = 0.0;
    for (double v : z) m = std::max(m, std::abs(v));
    return m;
  }
};

inline int sample_k_prior(const KPrior& prior, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int k = 1; k < 100000; ++k) {
    cum += std::exp(prior.log_pmf(k));
    if (u < cum) return k;
  }
  return 100000;
}

/// Latent rows from the cluster Gaussians, then X = 1 + #{l : Z_j >= theta_l}.
inline void resimulate_data(GibbsState& state, OrdinalDataset& data, Rng& rng) {
  const int n = static_cast<int>(state.labels.size());
  const int p = static_cast<int>(state.latent.cols());
  std::vector<Matrix> factors;
  factors.reserve(state.clusters.size());
  for (const auto& cl : state.clusters) {
    Eigen::LLT<Matrix> llt(cl.precision);
    factors.push_back(llt.matrixU());
  }
  Vector e(p);
  for (int i = 0; i < n; ++i) {
    const int c = state.labels[i] - 1;
    for (int j = 0; j < p; ++j) e(j) = rng.normal();
    const Vector z = state.clusters[c].mean +
                     factors[c].triangularView<Eigen::Upper>().solve(e);
    state.latent.row(i) = z.transpose();
    for (int j = 0; j < p; ++j) data.values(i, j) = state.thresholds.discretize(j, z(j));
  }
}

struct ForwardDraw {
  GibbsState state;
  OrdinalDataset data;
};

/// Independent draw of (c, mu, Omega, G, Theta, Z, X) from the hierarchical
/// model with ordered-uniform thresholds on [-bound, bound].
inline ForwardDraw forward_simulate(const ChainConfig& config, int p, int n, int levels, double bound, Rng& rng) {
  const Hyperparams h = config.hyper.resolved(p);
  ForwardDraw out;
  auto& s = out.state;
  s.labels.assign(n, 0);

  if (config.label_mode == LabelMode::MFM) {
    const int k = sample_k_prior(h.k_prior, rng);
    std::vector<double> weights(k);
    double total = 0.0;
    for (double& w : weights) total += (w = rng.gamma(h.gamma));
    for (double& w : weights) w /= total;
    std::vector<int> relabel(k, 0);
    int next = 0;
    for (int i = 0; i < n; ++i) {
      const int comp = detail::sample_index(weights, rng);
      if (relabel[comp] == 0) relabel[comp] = ++next;
      s.labels[i] = relabel[comp];
    }
  } else {
    std::vector<int> sizes;
    for (int i = 0; i < n; ++i) {
      std::vector<double> probs(sizes.size() + 1);
      for (std::size_t c = 0; c < sizes.size(); ++c) probs[c] = sizes[c] / (i + h.gamma);
      probs.back() = h.gamma / (i + h.gamma);
      const int c = detail::sample_index(probs, rng);
      if (c == static_cast<int>(sizes.size())) sizes.push_back(0);
      ++sizes[c];
      s.labels[i] = c + 1;
    }
  }

  const int k = *std::max_element(s.labels.begin(), s.labels.end());
  for (int c = 0; c < k; ++c) {
    ClusterParams cl;
    cl.graph = sample_graph_prior(p, h.q, rng);
    cl.precision = sample_gwishart(cl.graph, {h.b, h.D}, rng);
    cl.mean = sample_mean_posterior(cl.precision, SufficientStats::empty(p), h.a, h.mu0, rng);
    s.clusters.push_back(std::move(cl));
  }

  s.thresholds.cuts.resize(p);
  for (int j = 0; j < p; ++j) {
    auto& cuts = s.thresholds.cuts[j];
    for (int l = 0; l + 1 < levels; ++l) cuts.push_back(rng.uniform(-bound, bound));
    std::sort(cuts.begin(), cuts.end());
  }

  s.latent.resize(n, p);
  out.data.values.resize(n, p);
  out.data.level_counts.assign(p, levels);
  resimulate_data(s, out.data, rng);
  return out;
}

inline std::vector<std::string> geweke_statistic_names() {
  return {"cluster_count", "same_cluster_1_2", "mean_z_first", "mean_z_last", "mean_z_first_sq",
          "edges_cluster_1", "log_omega11_cluster_1", "mu1_cluster_1", "theta_first", "theta_last"};
}

inline std::vector<double> geweke_statistics(const GibbsState& s) {
  const int p = static_cast<int>(s.latent.cols());
  const auto& c1 = s.clusters[s.labels[0] - 1];
  const double same = s.labels.size() > 1 && s.labels[0] == s.labels[1] ? 1.0 : 0.0;
  return {static_cast<double>(s.cluster_count()),
          same,
          s.latent.col(0).mean(),
          s.latent.col(p - 1).mean(),
          s.latent.col(0).squaredNorm() / static_cast<double>(s.latent.rows()),
          static_cast<double>(c1.graph.edge_count()),
          std::log(c1.precision(0, 0)),
          c1.mean(0),
          s.thresholds.cuts[0].front(),
          s.thresholds.cuts[p - 1].back()};
}

/// z-score for the difference of means between i.i.d. forward draws and an
/// autocorrelated chain; the chain's standard error uses batch means.
inline double geweke_z(const std::vector<double>& forward, const std::vector<double>& chain, int batches) {
  const auto mean_of = [](const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += v[k];
    return s / static_cast<double>(hi - lo);
  };
  const double mf = mean_of(forward, 0, forward.size());
  const double mc = mean_of(chain, 0, chain.size());
  double vf = 0.0;
  for (double v : forward) vf += (v - mf) * (v - mf);
  vf /= static_cast<double>(forward.size() - 1);

  const std::size_t width = chain.size() / static_cast<std::size_t>(batches);
  double vb = 0.0;
  for (int b = 0; b < batches; ++b) {
    const double m = mean_of(chain, b * width, (b + 1) * width);
    vb += (m - mc) * (m - mc);
  }
  vb /= static_cast<double>(batches - 1);
  const double se = std::sqrt(vf / static_cast<double>(forward.size()) + vb / static_cast<double>(batches));
  if (mf == mc) return 0.0;
  return (mf - mc) / se;
}

inline GewekeReport geweke_joint_test(const ChainConfig& config, int p, int n, Rng& rng,
                                      const GewekeOptions& options = {}) {
  ChainConfig cfg = config;
  cfg.thresholds.bound = options.threshold_bound;
  cfg.validate(p);

  const auto names = geweke_statistic_names();
  const std::size_t ns = names.size();
  std::vector<std::vector<double>> forward(ns), chain(ns);

  for (int r = 0; r < options.rounds; ++r) {
    const auto draw = forward_simulate(cfg, p, n, options.levels, options.threshold_bound, rng);
    const auto stats = geweke_statistics(draw.state);
    for (std::size_t k = 0; k < ns; ++k) forward[k].push_back(stats[k]);
  }

  auto start = forward_simulate(cfg, p, n, options.levels, options.threshold_bound, rng);
  GibbsState state = std::move(start.state);
  OrdinalDataset data = std::move(start.data);
  ChainContext ctx(data, cfg);
  for (int r = 0; r < options.rounds; ++r) {
    label_sweep(state, ctx.table, cfg, rng);
    if (cfg.relocation) relocation_sweep(state, data, cfg, rng);
    update_cluster_params(state, cfg.hyper, rng);
    latent_sweep(state, data, rng);
    state.thresholds = options.threshold_kernel
                           ? options.threshold_kernel(state.latent, data, state.thresholds, rng)
                           : update_thresholds(state.latent, data, state.thresholds, rng, cfg.thresholds);
    resimulate_data(state, data, rng);
    const auto stats = geweke_statistics(state);
    for (std::size_t k = 0; k < ns; ++k) chain[k].push_back(stats[k]);
  }

  GewekeReport report;
  report.names = names;
  for (std::size_t k = 0; k < ns; ++k) {
    const double mf = std::accumulate(forward[k].begin(), forward[k].end(), 0.0) / forward[k].size();
    const double mc = std::accumulate(chain[k].begin(), chain[k].end(), 0.0) / chain[k].size();
    report.forward_mean.push_back(mf);
    report.chain_mean.push_back(mc);
    report.z.push_back(geweke_z(forward[k], chain[k], options.batches));
  }
  return report;
}

}  // namespace mfmpgm
