#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace cvxreg {

/// Small deterministic PRNG (splitmix64). All randomized routines in the
/// library take explicit seeds or an Rng; there is no global state, so
/// results are reproducible and independent streams can be derived per
/// (experiment, n, replication).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // burn-in decorrelates trivially related seeds (0, 1, 2, ...)
    next_u64();
    next_u64();
  }

  /// Derive an independent stream from a root seed and a list of tags.
  static Rng stream(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = mix(root ^ 0x9e3779b97f4a7c15ULL);
    for (std::uint64_t t : tags) s = mix(s ^ mix(t + 0xbf58476d1ce4e5b9ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform integer in {0, ..., n-1}.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  /// Standard normal via Box-Muller; stateless (one value per call).
  double normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Eigen::VectorXd normal_vector(int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  /// Uniform on the unit sphere S^{d-1}.
  Eigen::VectorXd unit_vector(int d) {
    while (true) {
      Eigen::VectorXd v = normal_vector(d);
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  double exponential() {
    const double u = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    return -std::log(u);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace cvxreg
