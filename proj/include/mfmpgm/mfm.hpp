#pragma once

// Partition-prior quantities for the mixture of finite mixtures: the log V_N(t)
// coefficient table and the Polya-urn weights.

#include "mfmpgm/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mfmpgm {

/// log V_N(t) for t = 1..t_max.
struct LogVnTable {
  int n = 0;
  double gamma = 1.0;
  std::vector<double> log_vn;

  int t_max() const { return static_cast<int>(log_vn.size()); }

  double at(int t) const {
    if (t < 1 || t > t_max()) throw std::out_of_range("LogVnTable: t outside table range");
    return log_vn[t - 1];
  }
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace detail

/// Series
///   V_N(t) = sum_{k >= t} k_(t) / (gamma k)^(N) p(k)
/// with k_(t) the falling and (gamma k)^(N) the rising factorial, both taken
/// through lgamma. Summation stops once 10 consecutive terms each fall below
/// exp(-40) times the running sum.
inline double log_vn_series(int n, double gamma, const KPrior& k_prior, int t) {
  constexpr double kCutoff = 40.0;
  constexpr int kQuietRun = 10;
  constexpr int kMaxTerms = 10'000'000;
  double log_sum = -kInf;
  int quiet = 0;
  for (int k = t; k < t + kMaxTerms; ++k) {
    const double log_p = k_prior.log_pmf(k);
    double term = -kInf;
    if (log_p != -kInf) {
      const double gk = gamma * k;
      term = std::lgamma(k + 1.0) - std::lgamma(k - t + 1.0) - (std::lgamma(gk + n) - std::lgamma(gk)) +
             log_p;
    }
    log_sum = detail::log_add(log_sum, term);
    if (log_sum != -kInf && term < log_sum - kCutoff) {
      if (++quiet >= kQuietRun) return log_sum;
    } else {
      quiet = 0;
    }
  }
  return log_sum;
}

inline LogVnTable compute_log_vn(int n, double gamma, const KPrior& k_prior, int t_max) {
  if (!(gamma > 0.0)) throw std::invalid_argument("compute_log_vn: gamma must be positive");
  if (n < 1) throw std::invalid_argument("compute_log_vn: n must be positive");
  if (t_max < 1 || t_max > n) throw std::invalid_argument("compute_log_vn: need 1 <= t_max <= n");
  if (!k_prior.log_pmf) throw std::invalid_argument("compute_log_vn: k_prior is unset");

  double total_mass = -kInf;
  for (int k = 1; k <= 100000; ++k) total_mass = detail::log_add(total_mass, k_prior.log_pmf(k));
  if (total_mass == -kInf) throw std::invalid_argument("compute_log_vn: k_prior has no mass on k >= 1");

  LogVnTable table{n, gamma, {}};
  table.log_vn.reserve(t_max);
  for (int t = 1; t <= t_max; ++t) {
    const double v = log_vn_series(n, gamma, k_prior, t);
    // A prior with bounded support cannot produce more clusters than its
    // largest k; the table simply ends there.
    if (!std::isfinite(v)) break;
    table.log_vn.push_back(v);
  }
  return table;
}

/// Default table size: the sampler never holds more than min(n, 50) clusters.
inline int default_t_max(int n) { return std::min(n, 50); }

/// Unnormalized urn weight for joining an existing cluster of the given size.
inline double urn_weight_existing(int cluster_size, double gamma) {
  if (cluster_size < 1) throw std::invalid_argument("urn_weight_existing: empty cluster");
  return cluster_size + gamma;
}

/// Unnormalized urn weight for opening a new cluster when t clusters exist.
inline double urn_weight_new(const LogVnTable& table, int t, double gamma) {
  if (t < 1 || t + 1 > table.t_max())
    throw std::out_of_range("urn_weight_new: t + 1 outside table range");
  return gamma * std::exp(table.at(t + 1) - table.at(t));
}

inline double log_urn_weight_new(const LogVnTable& table, int t, double gamma) {
  if (t < 1 || t + 1 > table.t_max())
    throw std::out_of_range("log_urn_weight_new: t + 1 outside table range");
  return std::log(gamma) + table.at(t + 1) - table.at(t);
}

}  // namespace mfmpgm
