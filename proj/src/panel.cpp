#include "bgre/panel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bgre/linalg.hpp"

namespace bgre {

void validate_model_spec(const ModelSpec& spec) {
  if (spec.coefficient_mode == CoefficientMode::kFullyGrouped &&
      spec.estimator != EstimatorKind::kBgre)
    throw ValidationError("fully grouped coefficients require the bgre estimator");
  if (spec.membership_prior == MembershipPrior::kSgp &&
      spec.estimator != EstimatorKind::kBgre)
    throw ValidationError("the SGP membership prior requires the bgre estimator");
  if (spec.coefficient_mode == CoefficientMode::kFullyGrouped &&
      spec.time_varying_alpha)
    throw ValidationError("fully grouped coefficients are time-invariant");
}

void validate_prior_spec(const PriorSpec& priors) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(name) + " must be strictly positive");
  };
  positive(priors.sigma_alpha_scale, "sigma_alpha_scale");
  positive(priors.nu_sigma, "nu_sigma");
  positive(priors.delta_sigma, "delta_sigma");
  positive(priors.sigma2_rho, "sigma2_rho");
  positive(priors.sigma2_beta, "sigma2_beta");
  positive(priors.a_shape, "a_shape");
  positive(priors.a_scale, "a_scale");
  if (!(priors.sgp_epsilon > 0.0 && priors.sgp_epsilon < 1.0))
    throw ValidationError("sgp_epsilon must lie in (0,1)");
  for (Eigen::Index i = 0; i < priors.sgp_table.rows(); ++i) {
    double s = priors.sgp_table.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12)
      throw ValidationError("sgp_table row " + std::to_string(i) +
                            " does not sum to 1");
    if ((priors.sgp_table.row(i).array() < 0.0).any())
      throw ValidationError("sgp_table has negative entries");
  }
}

const PanelData& validate_panel(const PanelData& data) {
  if (data.n_units <= 0 || data.n_periods <= 0)
    throw DimensionMismatch("panel must have positive unit and period counts");
  if (data.y.rows() != data.n_units || data.y.cols() != data.n_periods + 1)
    throw DimensionMismatch("y must be N x (T+1) including the initial column");
  if (!data.y.allFinite()) throw NonFinite("panel outcomes contain NaN or Inf");
  if (data.n_covariates > 0) {
    if (static_cast<int>(data.x.size()) != data.n_units)
      throw DimensionMismatch("covariate blocks must match the unit count");
    for (int i = 0; i < data.n_units; ++i) {
      if (data.x[i].rows() != data.n_periods ||
          data.x[i].cols() != data.n_covariates)
        throw DimensionMismatch("covariate block for unit " +
                                std::to_string(i + 1) + " is not T x p");
      if (!data.x[i].allFinite())
        throw NonFinite("covariates contain NaN or Inf");
    }
  } else if (!data.x.empty()) {
    throw DimensionMismatch("covariate blocks present but n_covariates == 0");
  }
  if (data.holdout.size() != 0) {
    if (data.holdout.size() != data.n_units)
      throw DimensionMismatch("holdout vector must have one entry per unit");
    if (!data.holdout.allFinite()) throw NonFinite("holdout contains NaN or Inf");
  }
  if (data.x_next.size() != 0) {
    if (data.x_next.rows() != data.n_units ||
        data.x_next.cols() != data.n_covariates)
      throw DimensionMismatch("x_next must be N x p");
    if (!data.x_next.allFinite()) throw NonFinite("x_next contains NaN or Inf");
  }
  return data;
}

PooledOls pooled_ols(const PanelData& data, bool time_varying_alpha) {
  validate_panel(data);
  const int n = data.n_units;
  const int t_len = data.n_periods;
  const int p = data.n_covariates;
  const int alpha_dim = time_varying_alpha ? t_len : 1;
  const int n_coef = alpha_dim + 1 + p;
  const int n_rows = n * t_len;
  if (n_rows <= n_coef)
    throw SingularDesign("pooled OLS needs more observations than coefficients");

  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n_rows, n_coef);
  Eigen::VectorXd target(n_rows);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    for (int t = 1; t <= t_len; ++t, ++r) {
      if (time_varying_alpha)
        design(r, t - 1) = 1.0;
      else
        design(r, 0) = 1.0;
      design(r, alpha_dim) = data.y(i, t - 1);
      for (int j = 0; j < p; ++j)
        design(r, alpha_dim + 1 + j) = data.x[i](t - 1, j);
      target[r] = data.y(i, t);
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < n_coef)
    throw SingularDesign("pooled regressors are collinear");

  PooledOls out;
  out.alpha_dim = alpha_dim;
  out.coef = qr.solve(target);
  const Eigen::VectorXd resid = target - design * out.coef;
  const double rss = resid.squaredNorm();
  out.resid_var = rss / static_cast<double>(n_rows - n_coef);
  if (!(out.resid_var > 0.0))
    throw SingularDesign("pooled OLS has zero residual variance");
  const Eigen::MatrixXd xtx = design.transpose() * design;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success)
    throw SingularDesign("pooled normal equations are singular");
  out.cov = out.resid_var *
            llt.solve(Eigen::MatrixXd::Identity(n_coef, n_coef));
  return out;
}

PriorSpec calibrate_priors(const PanelData& data, const ModelSpec& spec,
                           const PriorSpec& defaults) {
  validate_model_spec(spec);
  PriorSpec priors = defaults;
  const PooledOls ols = pooled_ols(data, spec.time_varying_alpha);
  priors.mu_alpha = ols.alpha();
  priors.sigma_alpha = priors.sigma_alpha_scale * ols.alpha_cov();
  if (!is_spd(priors.sigma_alpha))
    throw SingularDesign("calibrated alpha prior covariance is not SPD");
  validate_prior_spec(priors);
  return priors;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void write_panel_csv(const PanelData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out.precision(17);
  out << "unit,t,y";
  for (int j = 0; j < data.n_covariates; ++j) out << ",x" << (j + 1);
  out << "\n";
  for (int i = 0; i < data.n_units; ++i) {
    for (int t = 0; t <= data.n_periods; ++t) {
      out << (i + 1) << "," << t << "," << data.y(i, t);
      for (int j = 0; j < data.n_covariates; ++j) {
        out << ",";
        if (t >= 1) out << data.x[i](t - 1, j);
      }
      out << "\n";
    }
  }
}

PanelData read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("empty panel CSV: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "unit" || header[1] != "t" ||
      header[2] != "y")
    throw ValidationError("panel CSV header must be unit,t,y[,x1..xp]");
  const int p = static_cast<int>(header.size()) - 3;

  struct Row {
    int unit, t;
    double y;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  int max_unit = 0, max_t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != 3 + p)
      throw DimensionMismatch("panel CSV row has wrong field count: " + line);
    Row row;
    try {
      row.unit = std::stoi(f[0]);
      row.t = std::stoi(f[1]);
      row.y = std::stod(f[2]);
    } catch (const std::exception&) {
      throw ValidationError("unparseable panel CSV row: " + line);
    }
    for (int j = 0; j < p; ++j) {
      const std::string& cell = f[3 + j];
      if (cell.empty()) {
        if (row.t != 0)
          throw DimensionMismatch("missing covariate at t>0: " + line);
        row.x.push_back(0.0);
      } else {
        row.x.push_back(std::stod(cell));
      }
    }
    max_unit = std::max(max_unit, row.unit);
    max_t = std::max(max_t, row.t);
    rows.push_back(std::move(row));
  }
  if (max_unit <= 0 || max_t <= 0)
    throw DimensionMismatch("panel CSV must cover t = 0..T with T >= 1");

  PanelData data;
  data.n_units = max_unit;
  data.n_periods = max_t;
  data.n_covariates = p;
  data.y.setConstant(max_unit, max_t + 1,
                     std::numeric_limits<double>::quiet_NaN());
  if (p > 0)
    data.x.assign(max_unit, Eigen::MatrixXd::Constant(
                                max_t, p,
                                std::numeric_limits<double>::quiet_NaN()));
  for (const auto& row : rows) {
    if (row.unit < 1 || row.t < 0 || row.t > max_t)
      throw DimensionMismatch("panel CSV row out of range");
    data.y(row.unit - 1, row.t) = row.y;
    if (p > 0 && row.t >= 1)
      for (int j = 0; j < p; ++j) data.x[row.unit - 1](row.t - 1, j) = row.x[j];
  }
  // validate_panel reports any cell a row never covered as NonFinite; a
  // ragged panel is indistinguishable from a missing observation here.
  return validate_panel(data), data;
}

Eigen::MatrixXd read_sgp_table_csv(const std::string& path, int n_units) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty SGP CSV: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "unit")
    throw ValidationError("SGP CSV header must be unit,g1..gKp");
  const int kp = static_cast<int>(header.size()) - 1;
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(n_units, kp);
  std::vector<bool> seen(n_units, false);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != kp + 1)
      throw DimensionMismatch("SGP CSV row has wrong field count: " + line);
    const int unit = std::stoi(f[0]);
    if (unit < 1 || unit > n_units)
      throw DimensionMismatch("SGP CSV unit out of range: " + line);
    for (int j = 0; j < kp; ++j) table(unit - 1, j) = std::stod(f[1 + j]);
    seen[unit - 1] = true;
  }
  for (int i = 0; i < n_units; ++i)
    if (!seen[i])
      throw DimensionMismatch("SGP CSV missing unit " + std::to_string(i + 1));
  for (int i = 0; i < n_units; ++i) {
    const double s = table.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12)
      throw ValidationError("SGP CSV row for unit " + std::to_string(i + 1) +
                            " does not sum to 1");
  }
  return table;
}

}  // namespace bgre
