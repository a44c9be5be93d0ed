#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "bgre/panel.hpp"

namespace bgre {

// Monte Carlo designs 1..7. n_periods is the generated span; the last
// period becomes the one-step-ahead holdout, so the returned panel has
// n_periods - 1 estimation periods. noise_scale multiplies every innovation
// variance (the "larger variance" study); mean_paths_override replaces the
// built-in time-varying effect paths of designs 3 and 7.
struct DgpSpec {
  int dgp_id = 1;
  int n_units = 100;
  int n_periods = 11;
  int k0 = 4;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  Eigen::MatrixXd mean_paths_override;  // optional k0 x n_periods
};

std::pair<PanelData, TrueParams> generate(const DgpSpec& spec);

// Group mean paths for the time-varying designs: group 1 constant, group 2
// with a level shift at t = 5, group 3 increasing, group 4 decreasing.
Eigen::MatrixXd dgp3_mean_paths(int k0, int n_periods);

// Balanced block membership: floor(N/K) units per group, the residual
// units joining the last group.
std::vector<int> balanced_membership(int n_units, int k0);

}  // namespace bgre
