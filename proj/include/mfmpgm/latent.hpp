#pragma once

// Latent-variable updates: truncated-normal draws for the latent rows and
// uniform full-conditional draws for the thresholds.

#include "mfmpgm/random.hpp"
#include "mfmpgm/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mfmpgm {

/// Open interval (lo, hi); either end may be infinite.
struct TruncationBracket {
  double lo = -kInf;
  double hi = kInf;
};

/// Beyond this many standard deviations into a tail the inverse CDF loses
/// precision and exponential rejection takes over.
inline constexpr double kTailCutoff = 6.0;

namespace detail {

/// Standard normal restricted to [lo, hi] with lo > 0 far in the upper tail.
/// Exponential proposal with the optimal rate, truncated to the bracket.
inline double upper_tail_normal(double lo, double hi, Rng& rng) {
  const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  const double width = hi - lo;
  const double top = std::min(rate, hi);  // argmax of -x^2/2 + rate x on [lo, hi]
  for (;;) {
    double x;
    if (std::isfinite(width)) {
      x = lo - std::log1p(-rng.uniform() * -std::expm1(-rate * width)) / rate;
    } else {
      x = lo + rng.exponential(rate);
    }
    if (x > hi) continue;
    const double log_accept = -0.5 * (x - rate) * (x - rate) + 0.5 * (top - rate) * (top - rate);
    if (std::log(rng.uniform()) <= log_accept) return x;
  }
}

inline double standard_truncated_normal(double lo, double hi, Rng& rng) {
  if (lo >= kTailCutoff) return upper_tail_normal(lo, hi, rng);
  if (hi <= -kTailCutoff) return -upper_tail_normal(-hi, -lo, rng);
  double x;
  if (lo >= 0.0) {
    // Work with upper tails to keep precision right of the mode.
    const double q_hi = normal_upper_tail(hi);
    const double q_lo = normal_upper_tail(lo);
    x = normal_upper_quantile(q_hi + rng.uniform() * (q_lo - q_hi));
  } else if (hi <= 0.0) {
    const double q_lo = normal_upper_tail(-lo);
    const double q_hi = normal_upper_tail(-hi);
    x = -normal_upper_quantile(q_lo + rng.uniform() * (q_hi - q_lo));
  } else {
    const double c_lo = normal_cdf(lo);
    const double c_hi = normal_cdf(hi);
    x = normal_quantile(c_lo + rng.uniform() * (c_hi - c_lo));
  }
  // Guard the ends against rounding in the quantile function.
  if (x < lo) x = lo;
  if (x > hi) x = hi;
  return x;
}

}  // namespace detail

/// Draw from N(mean, sd^2) conditioned on the bracket.
inline double sample_truncated_normal(double mean, double sd, TruncationBracket bracket, Rng& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("sample_truncated_normal: sd must be positive");
  if (!(bracket.lo < bracket.hi)) throw std::invalid_argument("sample_truncated_normal: empty bracket");
  const double lo = (bracket.lo - mean) / sd;
  const double hi = (bracket.hi - mean) / sd;
  if (!(lo < hi)) throw std::invalid_argument("sample_truncated_normal: bracket collapses after scaling");
  double x = mean + sd * detail::standard_truncated_normal(lo, hi, rng);
  // The latent hypercube is half-open; keep draws strictly below the upper cut.
  if (x >= bracket.hi) x = std::nextafter(bracket.hi, -kInf);
  if (x < bracket.lo) x = bracket.lo;
  return x;
}

/// log(1 - Phi(x)); switches to the asymptotic tail series where erfc underflows.
inline double log_normal_upper_tail(double x) {
  if (x < 30.0) return std::log(normal_upper_tail(x));
  const double x2 = x * x;
  return -0.5 * x2 - std::log(x) - 0.5 * kLogTwoPi + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

/// log P(lo < Z < hi) for standard normal Z.
inline double log_normal_interval(double lo, double hi) {
  if (!(lo < hi)) return -kInf;
  if (lo >= 0.0) {
    const double a = log_normal_upper_tail(lo);
    const double b = hi == kInf ? -kInf : log_normal_upper_tail(hi);
    return a + std::log1p(-std::exp(b - a));
  }
  if (hi <= 0.0) return log_normal_interval(-hi, -lo);
  return std::log1p(-normal_upper_tail(hi) - normal_upper_tail(-lo));
}

/// log density at x of N(mean, sd^2) truncated to the bracket.
inline double log_truncated_normal_density(double x, double mean, double sd, TruncationBracket bracket) {
  if (x < bracket.lo || x > bracket.hi) return -kInf;
  const double u = (x - mean) / sd;
  return -0.5 * u * u - 0.5 * kLogTwoPi - std::log(sd) -
         log_normal_interval((bracket.lo - mean) / sd, (bracket.hi - mean) / sd);
}

/// One coordinate-wise Gibbs sweep over the latent row z_i given the cluster's
/// mean and precision, each coordinate confined to its threshold bracket.
inline Vector update_latent_row(const Eigen::Ref<const Eigen::RowVectorXi>& x_i, const Vector& z_i,
                                const ClusterParams& params, const Thresholds& thresholds, Rng& rng) {
  const int p = static_cast<int>(z_i.size());
  Vector z = z_i;
  for (int j = 0; j < p; ++j) {
    const double omega_jj = params.precision(j, j);
    double acc = 0.0;
    for (int k = 0; k < p; ++k) {
      if (k == j) continue;
      const double w = params.precision(j, k);
      if (w != 0.0) acc += w * (z(k) - params.mean(k));
    }
    const double mean = params.mean(j) - acc / omega_jj;
    const double sd = 1.0 / std::sqrt(omega_jj);
    const int level = x_i(j);
    z(j) = sample_truncated_normal(mean, sd, {thresholds.lower(j, level), thresholds.upper(j, level)}, rng);
  }
  return z;
}

/// Cluster mean clipped coordinate-wise into the hypercube of x_i.
inline Vector clipped_mean(const Eigen::Ref<const Eigen::RowVectorXi>& x_i, const ClusterParams& params,
                           const Thresholds& thresholds) {
  Vector u = params.mean;
  for (int j = 0; j < u.size(); ++j)
    u(j) = std::clamp(u(j), thresholds.lower(j, x_i(j)), thresholds.upper(j, x_i(j)));
  return u;
}

namespace detail {

/// Conditional mean and sd of coordinate j given the others in w.
inline std::pair<double, double> coordinate_conditional(const Vector& w, int j, const ClusterParams& params) {
  const double omega_jj = params.precision(j, j);
  double acc = 0.0;
  for (int k = 0; k < w.size(); ++k) {
    if (k == j) continue;
    const double v = params.precision(j, k);
    if (v != 0.0) acc += v * (w(k) - params.mean(k));
  }
  return {params.mean(j) - acc / omega_jj, 1.0 / std::sqrt(omega_jj)};
}

}  // namespace detail

/// Draws one coordinate-wise truncated-normal sweep from `start`, returning
/// the new row and the log density of having produced it.
inline std::pair<Vector, double> propose_latent_row(const Eigen::Ref<const Eigen::RowVectorXi>& x_i,
                                                    const Vector& start, const ClusterParams& params,
                                                    const Thresholds& thresholds, Rng& rng) {
  Vector w = start;
  double log_q = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    const auto [mean, sd] = detail::coordinate_conditional(w, j, params);
    const TruncationBracket br{thresholds.lower(j, x_i(j)), thresholds.upper(j, x_i(j))};
    w(j) = sample_truncated_normal(mean, sd, br, rng);
    log_q += log_truncated_normal_density(w(j), mean, sd, br);
  }
  return {w, log_q};
}

/// Log density of one sweep from `start` producing `target`.
inline double latent_row_log_density(const Eigen::Ref<const Eigen::RowVectorXi>& x_i, const Vector& start,
                                     const Vector& target, const ClusterParams& params,
                                     const Thresholds& thresholds) {
  Vector w = start;
  double log_q = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    const auto [mean, sd] = detail::coordinate_conditional(w, j, params);
    const TruncationBracket br{thresholds.lower(j, x_i(j)), thresholds.upper(j, x_i(j))};
    log_q += log_truncated_normal_density(target(j), mean, sd, br);
    w(j) = target(j);
  }
  return log_q;
}

/// Brackets narrower than this leave the threshold where it is.
inline constexpr double kCollapsedBracket = 1e-12;

struct ThresholdOptions {
  /// Thresholds are confined to [-bound, bound]. Infinite means the flat
  /// prior on the real line; a finite bound gives the proper ordered-uniform
  /// prior used by the joint-distribution test harness.
  double bound = kInf;
};

/// Gibbs sweep over all interior cuts. Cut k of variable j is drawn uniformly
/// between the largest latent value at level k (or theta_{k-1}) and the
/// smallest latent value at level k + 1 (or theta_{k+1}). When a bracket is
/// unbounded (an extreme level is unobserved under the flat prior) or
/// numerically collapsed, the cut is left unchanged.
inline Thresholds update_thresholds(const Matrix& latent, const OrdinalDataset& data, const Thresholds& thresholds,
                                    Rng& rng, const ThresholdOptions& options = {}) {
  const int n = data.rows();
  const int p = data.cols();
  Thresholds out = thresholds;
  for (int j = 0; j < p; ++j) {
    const int levels = data.level_counts[j];
    std::vector<double> max_at(levels + 1, -kInf);
    std::vector<double> min_at(levels + 1, kInf);
    for (int i = 0; i < n; ++i) {
      const int x = data.values(i, j);
      const double z = latent(i, j);
      if (z > max_at[x]) max_at[x] = z;
      if (z < min_at[x]) min_at[x] = z;
    }
    auto& cuts = out.cuts[j];
    for (int k = 1; k < levels; ++k) {
      const double below = k == 1 ? -options.bound : cuts[k - 2];
      const double above = k == levels - 1 ? options.bound : cuts[k];
      const double lo = std::max(max_at[k], below);
      const double hi = std::min(min_at[k + 1], above);
      if (!(lo < hi)) {
        throw std::runtime_error("update_thresholds: empty bracket for variable " + std::to_string(j + 1) +
                                 ", cut " + std::to_string(k) + " (corrupted state)");
      }
      if (!std::isfinite(lo) || !std::isfinite(hi) || hi - lo < kCollapsedBracket) continue;
      double draw = rng.uniform(lo, hi);
      // z at level k must stay strictly below the cut.
      if (draw <= max_at[k]) draw = std::nextafter(max_at[k], kInf);
      cuts[k - 1] = draw;
    }
  }
  return out;
}

}  // namespace mfmpgm
