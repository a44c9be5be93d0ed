#pragma once

#include <Eigen/Dense>

#include "bgre/gibbs.hpp"

namespace bgre {

// Subjective group probability prior: Dirichlet-distributed membership
// probabilities omega_i whose concentration parameters carry the
// researcher's table of prior group probabilities.
struct SgpState {
  Eigen::MatrixXd omega;    // N x K*, row stochastic
  Eigen::MatrixXd a_table;  // N x K^p, rows sum to 1
  double epsilon = 0.3;     // prior mass reserved for groups beyond K^p
  int k_preset = 0;

  void validate() const;
};

// Effective Dirichlet base weights for the current K*, handling the three
// cases K* = K^p, K* > K^p (epsilon mass split over the new groups, original
// entries scaled by 1 - epsilon) and K* < K^p (keep the K* most frequent
// previously nonempty groups, backfilling from the first K* preset labels,
// renormalized; an all-zero row falls back to uniform). Always recomputed
// from the original table, never compounded across iterations.
Eigen::MatrixXd sgp_effective_weights(const SgpState& sgp,
                                      const std::vector<int>& prev_membership,
                                      int k_star);

// omega_i ~ Dir(weights_i + one-hot(g_i)); resizes omega to N x K*.
void draw_omega(SgpState& sgp, const std::vector<int>& prev_membership,
                int k_star, Rng& rng);

// Membership draw with weights likelihood * omega_ik * slice indicator.
void draw_memberships_sgp(GibbsState& state, const SgpState& sgp,
                          const PanelData& data, const ModelSpec& model,
                          Rng& rng);

// Prior probability tables for the simulation scenarios:
//   1: all mass on the true group (K^p = k0)
//   2: 0.7 on the true group, the rest split evenly (K^p = k0)
//   3: uniform 1/k0 (K^p = k0)
//   4: one-hot balanced blocks over k0 - 1 groups
//   5: one-hot balanced blocks over k0 + 1 groups
Eigen::MatrixXd build_scenario(int scenario_id,
                               const std::vector<int>& true_membership,
                               int k0);

}  // namespace bgre
