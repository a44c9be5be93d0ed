#pragma once

#include <Eigen/Dense>

#include "bgre/errors.hpp"

namespace bgre {

struct NormalParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Inverse-gamma parameters in the (shape, rate) = (nu/2, delta/2) convention.
struct IgParams {
  double shape = 0.0;
  double rate = 0.0;
};

struct BetaParams {
  double a = 0.0;
  double b = 0.0;
};

// Gaussian posterior from precision form: cov = precision^{-1},
// mean = cov * linear. Positive-definite factorization with one 1e-10
// diagonal jitter retry before giving up.
inline NormalParams gaussian_from_precision(const Eigen::MatrixXd& precision,
                                            const Eigen::VectorXd& linear) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jittered = precision;
    jittered.diagonal().array() += 1e-10;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw NumericalSingularity(
          "posterior precision not positive definite after jitter");
  }
  NormalParams out;
  const auto n = precision.rows();
  out.cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.mean = out.cov * linear;
  return out;
}

inline bool is_spd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace bgre
