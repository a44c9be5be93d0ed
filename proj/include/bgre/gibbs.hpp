#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bgre/linalg.hpp"
#include "bgre/panel.hpp"
#include "bgre/rng.hpp"

namespace bgre {

// Full parameter state of one sweep. Atom arrays hold K* rows: effects for
// every potential component materialized by the slice variables. In the
// fully grouped mode alpha_atoms rows are theta = (alpha, rho, beta...) and
// the rho/beta fields are unused. Fixed-membership fits leave the stick,
// probability and slice vectors empty.
struct GibbsState {
  double rho = 0.0;
  Eigen::MatrixXd beta;           // N x p, 1 x p (homogeneous), or 0 x 0
  Eigen::MatrixXd alpha_atoms;    // K* x A
  Eigen::VectorXd sigma2_atoms;   // K*
  Eigen::VectorXd stick_lengths;  // K*
  Eigen::VectorXd group_probs;    // K*
  Eigen::VectorXd slice_u;        // N
  std::vector<int> membership;    // N, labels in 1..K*
  double concentration = 1.0;
  int k_active = 0;     // max_i g_i
  int k_potential = 0;  // components materialized

  int n_nonempty() const;
  std::vector<int> group_counts() const;  // size k_active, 0-based
};

struct ChainMeta {
  ModelSpec model;
  PriorSpec priors;
  int n_units = 0;
  int n_periods = 0;
  int n_covariates = 0;
  int m_iter = 0;
  int burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;
  std::uint64_t prior_hash = 0;
  // Fully grouped mode: share of retained group draws with |rho_k| >= 1.
  double nonstationary_share = 0.0;
  // Baselines pin the reported group count (pooled/param: 1, flat: N);
  // negative means "count nonempty groups per draw".
  double reported_k = -1.0;
};

struct PosteriorDraws {
  std::vector<GibbsState> states;
  ChainMeta meta;
  int size() const { return static_cast<int>(states.size()); }
};

// ---- conditional posterior parameters (pure, no RNG) ----

// Grouped effects alpha_k (or theta_k in the fully grouped mode is handled
// by grouped_full). Empty groups return the prior exactly.
NormalParams alpha_posterior_params(const GibbsState& state,
                                    const PanelData& data,
                                    const PriorSpec& priors,
                                    const ModelSpec& model, int k);

// Grouped innovation variance; empty groups return the prior (nu/2, delta/2).
IgParams sigma2_posterior_params(const GibbsState& state, const PanelData& data,
                                 const PriorSpec& priors,
                                 const ModelSpec& model, int k);

// Homoskedastic pooled variant: one variance from all units' residuals.
IgParams sigma2_posterior_params_pooled(const GibbsState& state,
                                        const PanelData& data,
                                        const PriorSpec& priors,
                                        const ModelSpec& model);

// Common AR(1) coefficient; an all-zero lag regressor returns the prior.
NormalParams rho_posterior_params(const GibbsState& state,
                                  const PanelData& data,
                                  const PriorSpec& priors,
                                  const ModelSpec& model);

// Unit-specific slope coefficients; zero covariates return the prior.
NormalParams beta_posterior_params(const GibbsState& state,
                                   const PanelData& data,
                                   const PriorSpec& priors,
                                   const ModelSpec& model, int unit);

// Homogeneous-slope variant pooling every unit's covariate rows.
NormalParams beta_posterior_params_pooled(const GibbsState& state,
                                          const PanelData& data,
                                          const PriorSpec& priors,
                                          const ModelSpec& model);

// Stick length xi_k | G, a ~ Beta(|C_k| + 1, a + #{j : g_j > k}).
BetaParams stick_posterior_params(const GibbsState& state, int k);

// pi_k = xi_k * prod_{j<k} (1 - xi_j).
Eigen::VectorXd stick_breaking_probs(const Eigen::VectorXd& sticks);

// ---- sampling steps ----

// Mixture weight of the Escobar-West concentration update with prior
// Gamma(shape, rate): odds (shape + K^a - 1) / (N (rate - log eta)).
double concentration_mixture_weight(double shape, double rate, int k_active,
                                    double eta, int n_units);

// Escobar-West two-step update of the concentration parameter.
double draw_concentration(const GibbsState& state, int n_units,
                          const PriorSpec& priors, Rng& rng);

// u_i ~ U(0, pi_{g_i}); returns u* = min_i u_i.
double draw_slice_variables(GibbsState& state, Rng& rng);

// Appends sticks and prior atoms until sum_{j<=K*} pi_j > 1 - u_star. New
// effect rows come from atom_prior when given (the fully grouped theta
// prior), otherwise from (mu_alpha, sigma_alpha).
void expand_potential_groups(GibbsState& state, const PriorSpec& priors,
                             const ModelSpec& model, double u_star, Rng& rng,
                             const NormalParams* atom_prior = nullptr);

// Membership draw over k = 1..K* with weights proportional to the unit
// likelihood times the slice indicator; extra_log_weights (N x K*) adds
// per-unit log prior mass (the SGP path).
void draw_memberships(GibbsState& state, const PanelData& data,
                      const ModelSpec& model, Rng& rng,
                      const Eigen::MatrixXd* extra_log_weights = nullptr);

// Three Metropolis-Hastings label-switching moves; no-op when fewer than
// two active groups.
void label_switch_moves(GibbsState& state, Rng& rng);

// ---- likelihood pieces ----

double unit_loglik(const GibbsState& state, const PanelData& data,
                   const ModelSpec& model, int unit, int k);
double panel_loglik(const GibbsState& state, const PanelData& data,
                    const ModelSpec& model);

// ---- chain driver ----

GibbsState init_state(const PanelData& data, const ModelSpec& model,
                      const PriorSpec& priors, Rng& rng);

// One full sweep in the stated update order: active count, sticks, effects,
// variances, label moves, slice variables, concentration, expansion,
// rho, beta, memberships.
void one_sweep(GibbsState& state, const PanelData& data,
               const ModelSpec& model, const PriorSpec& priors, Rng& rng);

// Relabels nonempty groups to 1..K (ascending old label), dropping empty
// components; sticks and slice variables are invalidated and redrawn at the
// start of the next sweep.
void compact_labels(GibbsState& state);

// Full estimation run. Empty priors.mu_alpha triggers OLS calibration.
PosteriorDraws run_chain(const PanelData& data, const ModelSpec& model,
                         const PriorSpec& priors, int m_iter, int burn_in,
                         int thin, std::uint64_t seed);

// Shared draw steps reused by fixed-membership fits.
void draw_group_effects(GibbsState& state, const PanelData& data,
                        const ModelSpec& model, const PriorSpec& priors,
                        Rng& rng, const NormalParams* atom_prior = nullptr);
void draw_variances(GibbsState& state, const PanelData& data,
                    const ModelSpec& model, const PriorSpec& priors, Rng& rng);
void draw_common_coefficients(GibbsState& state, const PanelData& data,
                              const ModelSpec& model, const PriorSpec& priors,
                              Rng& rng);

std::uint64_t hash_model_spec(const ModelSpec& model);
std::uint64_t hash_prior_spec(const PriorSpec& priors);

}  // namespace bgre
