#pragma once

// Seeded RNG with explicit sampling algorithms. All distributions are
// implemented here rather than via std::*_distribution so that a given seed
// produces the same stream on every platform and standard library. Streams
// for parallel work are derived by hashing (master seed, replication id,
// chain id), never by sharing an engine across threads.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "bgre/errors.hpp"

namespace bgre {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  // Independent stream keyed by (master, replication, chain).
  static Rng stream(std::uint64_t master, std::uint64_t replication,
                    std::uint64_t chain) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0x6A09E667F3BCC909ULL + replication;
    splitmix64(s);
    s ^= 0xBB67AE8584CAA73BULL + chain;
    return Rng(splitmix64(s));
  }

  std::uint64_t raw() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform01() {
    double u = (engine_() >> 11) * 0x1.0p-53;
    while (u <= 0.0) u = (engine_() >> 11) * 0x1.0p-53;
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal(double mean = 0.0, double sd = 1.0) {
    // Box-Muller, no caching: one normal consumes two uniforms.
    double u1 = uniform01();
    double u2 = uniform01();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + sd * z;
  }

  // Gamma(shape, scale), mean = shape * scale. Marsaglia-Tsang squeeze for
  // shape >= 1, boosted by u^(1/shape) below 1.
  double gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
      throw ValidationError("gamma: shape and scale must be positive");
    if (shape < 1.0) {
      double u = uniform01();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform01();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
        return d * v * scale;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a, 1.0);
    double y = gamma(b, 1.0);
    double r = x / (x + y);
    // keep strictly inside (0,1); stick-breaking needs open support
    if (r <= 0.0) r = 1e-300;
    if (r >= 1.0) r = 1.0 - 1e-16;
    return r;
  }

  // Inverse-Gamma(shape, scale) with density propto x^{-shape-1} exp(-scale/x).
  double inverse_gamma(double shape, double scale) {
    return scale / gamma(shape, 1.0);
  }

  // Index in [0, w.size()) proportional to nonnegative weights.
  int categorical(const Eigen::VectorXd& w) {
    double total = w.sum();
    if (!(total > 0.0) || !std::isfinite(total))
      throw NumericalError("categorical: weights do not normalize");
    double u = uniform01() * total;
    double acc = 0.0;
    for (int k = 0; k < w.size(); ++k) {
      acc += w[k];
      if (u <= acc) return k;
    }
    return static_cast<int>(w.size()) - 1;
  }

  Eigen::VectorXd dirichlet(const Eigen::VectorXd& concentration) {
    Eigen::VectorXd g(concentration.size());
    for (int k = 0; k < concentration.size(); ++k)
      g[k] = gamma(concentration[k], 1.0);
    double s = g.sum();
    if (!(s > 0.0)) return Eigen::VectorXd::Constant(
        concentration.size(), 1.0 / static_cast<double>(concentration.size()));
    return g / s;
  }

  Eigen::VectorXd mv_normal(const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw NumericalSingularity("mv_normal: covariance not positive definite");
    Eigen::VectorXd z(mean.size());
    for (int i = 0; i < mean.size(); ++i) z[i] = normal();
    return mean + llt.matrixL() * z;
  }

 private:
  static std::uint64_t mix_seed(std::uint64_t seed) {
    std::uint64_t s = seed;
    return splitmix64(s);
  }

  std::mt19937_64 engine_;
};

}  // namespace bgre
