#pragma once

#include <Eigen/Dense>

#include "bgre/gibbs.hpp"

namespace bgre {

// Fully grouped coefficient mode: theta_k = (alpha_k, rho_k, beta_k') drawn
// jointly per group from the regression of y_it on (1, y_{it-1}, x_it').

// Independent normal prior: mean from the pooled OLS coefficients, covariance
// diag(Sigma_alpha, sigma2_rho, sigma2_beta * I_p).
NormalParams theta_prior(const PanelData& data, const PriorSpec& priors);

// Conjugate update; empty groups return the prior exactly.
NormalParams theta_posterior_params(const GibbsState& state,
                                    const PanelData& data,
                                    const NormalParams& prior, int k);

// Variance update with residuals y_it - theta_k' (1, y_{it-1}, x_it')'.
IgParams sigma2_posterior_params_full(const GibbsState& state,
                                      const PanelData& data,
                                      const PriorSpec& priors, int k);

IgParams sigma2_posterior_params_full_pooled(const GibbsState& state,
                                             const PanelData& data,
                                             const PriorSpec& priors);

// Share of rows with |rho_k| >= 1 among groups with members, accumulated by
// the chain driver into ChainMeta::nonstationary_share.
double nonstationary_fraction(const GibbsState& state);

}  // namespace bgre
