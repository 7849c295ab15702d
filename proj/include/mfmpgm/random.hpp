#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mfmpgm {

/// Seed mixer used to derive independent per-replicate / per-chain streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Random source owned by one chain. Not thread-safe; give each thread its own.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma with the given shape and unit scale.
  double gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
  }

  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Uniform integer in [0, n).
  int index(int n) {
    std::uniform_int_distribution<int> dist(0, n - 1);
    return dist(engine_);
  }

  bool bernoulli(double prob) { return uniform() < prob; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

inline constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

/// Upper tail 1 - Phi(x), accurate for large positive x.
inline double normal_upper_tail(double x) {
  return 0.5 * std::erfc(x * kInvSqrt2);
}

inline double normal_quantile(double prob) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * prob);
}

/// Inverse of normal_upper_tail.
inline double normal_upper_quantile(double tail) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * tail);
}

}  // namespace mfmpgm
