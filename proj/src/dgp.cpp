#include "bgre/dgp.hpp"

#include <cmath>

#include "bgre/rng.hpp"

namespace bgre {

namespace {
constexpr double kRho = 0.7;
constexpr double kAlphaNoiseVar = 0.25;  // 0.5^2 spread of drawn effects
}  // namespace

std::vector<int> balanced_membership(int n_units, int k0) {
  if (k0 < 1 || n_units < k0)
    throw ValidationError("need n_units >= k0 >= 1 for balanced blocks");
  std::vector<int> g(n_units);
  const int block = n_units / k0;
  for (int i = 0; i < n_units; ++i) g[i] = std::min(i / block, k0 - 1) + 1;
  return g;
}

Eigen::MatrixXd dgp3_mean_paths(int k0, int n_periods) {
  if (k0 < 1 || k0 > 4)
    throw ValidationError("time-varying designs provide at most 4 path shapes");
  if (n_periods < 1) throw ValidationError("n_periods must be positive");
  Eigen::MatrixXd paths(k0, n_periods);
  for (int t = 1; t <= n_periods; ++t) {
    const double frac =
        n_periods > 1 ? (t - 1) / static_cast<double>(n_periods - 1) : 0.0;
    if (k0 >= 1) paths(0, t - 1) = 1.0;
    if (k0 >= 2) paths(1, t - 1) = t < 5 ? 2.0 : 3.0;
    if (k0 >= 3) paths(2, t - 1) = 2.5 + 2.0 * frac;
    if (k0 >= 4) paths(3, t - 1) = 4.5 - 2.0 * frac;
  }
  return paths;
}

std::pair<PanelData, TrueParams> generate(const DgpSpec& spec) {
  if (spec.dgp_id < 1 || spec.dgp_id > 7)
    throw UnknownDgp("dgp id must be in 1..7, got " +
                     std::to_string(spec.dgp_id));
  if (spec.n_periods < 2)
    throw ValidationError("need n_periods >= 2 to reserve a holdout period");
  if (!(spec.noise_scale > 0.0))
    throw ValidationError("noise_scale must be positive");
  const int n = spec.n_units;
  const int span = spec.n_periods;  // generated periods 1..span
  const int k0 = spec.dgp_id == 4 ? n : spec.k0;
  const bool time_varying = spec.dgp_id == 3 || spec.dgp_id == 7;

  Rng rng(spec.seed);

  TrueParams truth;
  truth.rho = kRho;
  truth.membership = spec.dgp_id == 4 ? [&] {
    std::vector<int> g(n);
    for (int i = 0; i < n; ++i) g[i] = i + 1;
    return g;
  }()
                                      : balanced_membership(n, k0);

  // Innovation variances.
  truth.sigma2.resize(k0);
  switch (spec.dgp_id) {
    case 1:
    case 4:
      truth.sigma2.setConstant(0.8);
      break;
    case 2:
    case 6:
      for (int k = 1; k <= k0; ++k) {
        const double f = 1.0 - (k - 1) / static_cast<double>(spec.k0);
        truth.sigma2[k - 1] = 1.5 * f * f;
      }
      break;
    default:
      truth.sigma2.setConstant(1.0);
      break;
  }
  truth.sigma2 *= spec.noise_scale;

  // Effect paths over the full span, one row per group.
  Eigen::MatrixXd mean_paths;
  if (time_varying) {
    if (spec.mean_paths_override.size() != 0) {
      if (spec.mean_paths_override.rows() != k0 ||
          spec.mean_paths_override.cols() != span)
        throw DimensionMismatch("mean path override must be k0 x n_periods");
      mean_paths = spec.mean_paths_override;
    } else {
      mean_paths = dgp3_mean_paths(k0, span);
    }
  }

  truth.alpha_paths.resize(k0, span);
  switch (spec.dgp_id) {
    case 1:
    case 2:
      for (int k = 0; k < k0; ++k)
        truth.alpha_paths.row(k).setConstant(
            rng.normal(k + 1.0, std::sqrt(kAlphaNoiseVar)));
      break;
    case 3:
    case 7:
      truth.alpha_paths = mean_paths;
      break;
    case 4:
      for (int i = 0; i < n; ++i)
        truth.alpha_paths.row(i).setConstant(
            rng.normal(0.0, std::sqrt(kAlphaNoiseVar)));
      break;
    case 5:
    case 6:
      for (int k = 0; k < k0; ++k)
        truth.alpha_paths.row(k).setConstant(k + 1.0);
      break;
  }

  Eigen::MatrixXd y_full(n, span + 1);
  for (int i = 0; i < n; ++i) {
    const int g = truth.membership[i] - 1;
    const double sigma2 = truth.sigma2[g];
    // Design 3 adds unit-level scatter around the group path each period;
    // that scatter feeds the stationary spread of y_{i0} as well.
    const double extra_var = spec.dgp_id == 3 ? kAlphaNoiseVar : 0.0;
    const double a0 = truth.alpha_paths(g, 0);
    y_full(i, 0) = rng.normal(a0 / (1.0 - kRho),
                              std::sqrt((sigma2 + extra_var) /
                                        (1.0 - kRho * kRho)));
    for (int t = 1; t <= span; ++t) {
      double effect = truth.alpha_paths(g, t - 1);
      if (spec.dgp_id == 3)
        effect = rng.normal(effect, std::sqrt(kAlphaNoiseVar));
      y_full(i, t) =
          effect + kRho * y_full(i, t - 1) + rng.normal(0.0, std::sqrt(sigma2));
    }
  }

  PanelData data;
  data.n_units = n;
  data.n_periods = span - 1;
  data.y = y_full.leftCols(span);
  data.holdout = y_full.col(span);
  validate_panel(data);
  return {std::move(data), std::move(truth)};
}

}  // namespace bgre
