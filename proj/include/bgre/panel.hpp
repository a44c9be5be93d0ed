#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bgre/errors.hpp"

namespace bgre {

// Balanced outcome panel. y is N x (T+1) with column 0 holding the initial
// values y_{i0}; columns 1..T are the estimation sample. Covariates, when
// present, are one T x p block per unit aligned with periods 1..T. holdout
// carries the realized y_{i,T+1} used only for forecast evaluation, and
// x_next the covariates of period T+1 needed to forecast when p > 0.
struct PanelData {
  int n_units = 0;
  int n_periods = 0;  // T
  Eigen::MatrixXd y;  // N x (T+1)
  std::vector<Eigen::MatrixXd> x;  // N blocks of T x p, empty when p == 0
  int n_covariates = 0;
  Eigen::VectorXd holdout;  // size N or 0
  Eigen::MatrixXd x_next;   // N x p or 0 x 0

  bool has_holdout() const { return holdout.size() == n_units && n_units > 0; }
};

enum class CoefficientMode { kHomogeneous, kHeterogeneous, kFullyGrouped };
enum class MembershipPrior { kStickBreaking, kSgp };
enum class EstimatorKind { kBgre, kPooled, kFlat, kParam, kTwoStepKmeans };

struct ModelSpec {
  bool time_varying_alpha = false;
  bool heteroskedastic = false;
  CoefficientMode coefficient_mode = CoefficientMode::kHomogeneous;
  MembershipPrior membership_prior = MembershipPrior::kStickBreaking;
  EstimatorKind estimator = EstimatorKind::kBgre;
};

// Throws ValidationError when the flag combination is not supported:
// the fully grouped coefficient mode and the SGP membership prior both
// exist only for the BGRE estimator.
void validate_model_spec(const ModelSpec& spec);

struct PriorSpec {
  Eigen::VectorXd mu_alpha;     // length T (time-varying) or 1
  Eigen::MatrixXd sigma_alpha;  // matching covariance, already scaled
  double sigma_alpha_scale = 200.0;
  double nu_sigma = 12.0;
  double delta_sigma = 10.0;
  double sigma2_rho = 100.0;
  double sigma2_beta = 100.0;
  // Hyperprior for the concentration parameter, Gamma(shape, scale).
  double a_shape = 0.4;
  double a_scale = 10.0;
  Eigen::MatrixXd sgp_table;  // N x K^p, rows sum to 1; empty if unused
  double sgp_epsilon = 0.3;

  double a_prior_mean() const { return a_shape * a_scale; }
};

void validate_prior_spec(const PriorSpec& priors);

// Simulation ground truth. alpha_paths spans the full generated horizon
// including the holdout period, so column T (0-based) is the effect that
// drives y_{i,T+1}. For designs without group structure every unit is its
// own group.
struct TrueParams {
  double rho = 0.0;
  Eigen::MatrixXd alpha_paths;  // K0 x (T+1)
  Eigen::VectorXd sigma2;       // K0
  std::vector<int> membership;  // N entries in 1..K0
};

// Checks balance, finiteness and dimension consistency; returns its input.
const PanelData& validate_panel(const PanelData& data);

// Pooled OLS of y_it on [intercept block, y_{it-1}, x_it] across all units,
// the K = 1 regression used for prior calibration and chain initialization.
struct PooledOls {
  Eigen::VectorXd coef;  // [alpha block, rho, beta...]
  Eigen::MatrixXd cov;   // sampling covariance of coef
  double resid_var = 0.0;
  int alpha_dim = 1;

  Eigen::VectorXd alpha() const { return coef.head(alpha_dim); }
  double rho() const { return coef[alpha_dim]; }
  Eigen::VectorXd beta() const {
    return coef.tail(coef.size() - alpha_dim - 1);
  }
  Eigen::MatrixXd alpha_cov() const {
    return cov.topLeftCorner(alpha_dim, alpha_dim);
  }
};

PooledOls pooled_ols(const PanelData& data, bool time_varying_alpha);

// mu_alpha from the pooled OLS intercept, sigma_alpha from its sampling
// covariance scaled by sigma_alpha_scale; everything else at defaults.
// Deterministic: no RNG involved.
PriorSpec calibrate_priors(const PanelData& data, const ModelSpec& spec,
                           const PriorSpec& defaults = PriorSpec{});

// CSV panel format: header `unit,t,y[,x1..xp]`, t in 0..T; covariate cells
// are empty on t = 0 rows.
void write_panel_csv(const PanelData& data, const std::string& path);
PanelData read_panel_csv(const std::string& path);

// SGP table format: header `unit,g1..gKp`, one row per unit, rows sum to 1.
Eigen::MatrixXd read_sgp_table_csv(const std::string& path, int n_units);

}  // namespace bgre
