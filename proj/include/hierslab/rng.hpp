#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

#include <boost/math/distributions/normal.hpp>

namespace hierslab {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for task (i, j, ...) of a run seeded with `seed`. Order-sensitive.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL));
  return h;
}

/// Random stream for one chain or task. Not thread-safe; give each task its own.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  engine_type& engine() { return engine_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  /// Uniform on the open interval (0, 1).
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  double normal() { return std_normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
  }

  /// Inverse-Gamma(shape, rate): density proportional to x^(-shape-1) exp(-rate/x).
  double inv_gamma(double shape, double rate) {
    double g;
    do {
      g = std::gamma_distribution<double>(shape, 1.0)(engine_);
    } while (g <= 0.0);
    return rate / g;
  }

  double beta(double a, double b) {
    // Gamma draws with tiny shapes can underflow to 0; redraw the pair.
    for (;;) {
      const double x = std::gamma_distribution<double>(a, 1.0)(engine_);
      const double y = std::gamma_distribution<double>(b, 1.0)(engine_);
      const double s = x + y;
      if (s > 0.0) return x / s;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

 private:
  engine_type engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

/// Truncation point (in standard deviations) beyond which the exponential
/// rejection sampler replaces inversion.
inline constexpr double kTailSwitch = 5.0;

/// Standard normal restricted to (lower, +inf).
///
/// Inversion of the CDF when lower <= 5, working from the upper tail for
/// positive truncation so no precision is lost to 1 - Phi(a). Beyond 5 sds,
/// rejection from a shifted exponential proposal with the optimal rate.
inline double std_truncated_normal_above(double lower, Rng& rng) {
  if (lower == -std::numeric_limits<double>::infinity()) return rng.normal();
  if (lower <= kTailSwitch) {
    static const boost::math::normal std_normal;
    const double u = rng.uniform_pos();
    if (lower < 0.0) {
      const double p0 = boost::math::cdf(std_normal, lower);
      double p = p0 + u * (1.0 - p0);
      if (p >= 1.0) p = std::nextafter(1.0, 0.0);
      return boost::math::quantile(std_normal, p);
    }
    const double q0 = boost::math::cdf(boost::math::complement(std_normal, lower));
    return boost::math::quantile(boost::math::complement(std_normal, u * q0));
  }
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double z = lower + rng.exponential(rate);
    const double d = z - rate;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

}  // namespace hierslab
