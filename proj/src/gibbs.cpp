#include "bgre/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "bgre/grouped_full.hpp"
#include "bgre/sgp.hpp"

namespace bgre {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kMaxPotentialGroups = 100000;

bool fully_grouped(const ModelSpec& model) {
  return model.coefficient_mode == CoefficientMode::kFullyGrouped;
}

// Row of slope coefficients that applies to a unit; empty view when p == 0.
Eigen::RowVectorXd beta_row(const GibbsState& state, int unit) {
  if (state.beta.size() == 0) return Eigen::RowVectorXd();
  return state.beta.rows() == 1 ? state.beta.row(0) : state.beta.row(unit);
}

double alpha_at(const GibbsState& state, int k, int t_index) {
  return state.alpha_atoms.cols() == 1 ? state.alpha_atoms(k, 0)
                                       : state.alpha_atoms(k, t_index);
}

// y_it minus every term except the grouped effect.
double partial_residual_no_alpha(const GibbsState& state, const PanelData& data,
                                 int unit, int t) {
  double r = data.y(unit, t) - state.rho * data.y(unit, t - 1);
  if (data.n_covariates > 0)
    r -= beta_row(state, unit).dot(data.x[unit].row(t - 1));
  return r;
}

// y_it minus every term except rho * y_{it-1}.
double partial_residual_no_rho(const GibbsState& state, const PanelData& data,
                               int unit, int k, int t) {
  double r = data.y(unit, t) - alpha_at(state, k, t - 1);
  if (data.n_covariates > 0)
    r -= beta_row(state, unit).dot(data.x[unit].row(t - 1));
  return r;
}

double full_residual(const GibbsState& state, const PanelData& data, int unit,
                     int k, int t) {
  if (state.alpha_atoms.cols() > 1 || state.alpha_atoms.cols() == 1) {
    // fall through; grouped mode handled by caller
  }
  return partial_residual_no_alpha(state, data, unit, t) -
         alpha_at(state, k, t - 1);
}

double theta_residual(const GibbsState& state, const PanelData& data, int unit,
                      int k, int t) {
  const auto theta = state.alpha_atoms.row(k);
  double r = data.y(unit, t) - theta[0] - theta[1] * data.y(unit, t - 1);
  for (int j = 0; j < data.n_covariates; ++j)
    r -= theta[2 + j] * data.x[unit](t - 1, j);
  return r;
}

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_doubles(std::uint64_t h, const double* v, std::size_t n) {
  return fnv1a(h, v, n * sizeof(double));
}

}  // namespace

int GibbsState::n_nonempty() const {
  std::vector<char> seen(k_potential + 1, 0);
  int count = 0;
  for (int g : membership) {
    if (g >= 1 && g <= k_potential && !seen[g]) {
      seen[g] = 1;
      ++count;
    }
  }
  return count;
}

std::vector<int> GibbsState::group_counts() const {
  std::vector<int> counts(k_active, 0);
  for (int g : membership)
    if (g >= 1 && g <= k_active) ++counts[g - 1];
  return counts;
}

NormalParams alpha_posterior_params(const GibbsState& state,
                                    const PanelData& data,
                                    const PriorSpec& priors,
                                    const ModelSpec& model, int k) {
  const int dim = model.time_varying_alpha ? data.n_periods : 1;
  if (priors.mu_alpha.size() != dim)
    throw DimensionMismatch("mu_alpha dimension does not match the model");
  std::vector<int> members;
  for (int i = 0; i < data.n_units; ++i)
    if (state.membership[i] == k + 1) members.push_back(i);
  if (members.empty()) return {priors.mu_alpha, priors.sigma_alpha};

  Eigen::LLT<Eigen::MatrixXd> prior_llt(priors.sigma_alpha);
  if (prior_llt.info() != Eigen::Success)
    throw NumericalSingularity("alpha prior covariance not positive definite");
  Eigen::MatrixXd precision =
      prior_llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  Eigen::VectorXd linear = precision * priors.mu_alpha;
  const double sigma2 = state.sigma2_atoms[k];
  for (int i : members) {
    if (dim == 1) {
      double sum = 0.0;
      for (int t = 1; t <= data.n_periods; ++t)
        sum += partial_residual_no_alpha(state, data, i, t);
      precision(0, 0) += data.n_periods / sigma2;
      linear[0] += sum / sigma2;
    } else {
      for (int t = 1; t <= data.n_periods; ++t) {
        precision(t - 1, t - 1) += 1.0 / sigma2;
        linear[t - 1] += partial_residual_no_alpha(state, data, i, t) / sigma2;
      }
    }
  }
  return gaussian_from_precision(precision, linear);
}

IgParams sigma2_posterior_params(const GibbsState& state, const PanelData& data,
                                 const PriorSpec& priors,
                                 const ModelSpec& model, int k) {
  IgParams out{priors.nu_sigma / 2.0, priors.delta_sigma / 2.0};
  int members = 0;
  double rss = 0.0;
  for (int i = 0; i < data.n_units; ++i) {
    if (state.membership[i] != k + 1) continue;
    ++members;
    for (int t = 1; t <= data.n_periods; ++t) {
      const double r = fully_grouped(model)
                           ? theta_residual(state, data, i, k, t)
                           : full_residual(state, data, i, k, t);
      rss += r * r;
    }
  }
  out.shape += 0.5 * data.n_periods * members;
  out.rate += 0.5 * rss;
  return out;
}

IgParams sigma2_posterior_params_pooled(const GibbsState& state,
                                        const PanelData& data,
                                        const PriorSpec& priors,
                                        const ModelSpec& model) {
  IgParams out{priors.nu_sigma / 2.0, priors.delta_sigma / 2.0};
  double rss = 0.0;
  for (int i = 0; i < data.n_units; ++i) {
    const int k = state.membership[i] - 1;
    for (int t = 1; t <= data.n_periods; ++t) {
      const double r = fully_grouped(model)
                           ? theta_residual(state, data, i, k, t)
                           : full_residual(state, data, i, k, t);
      rss += r * r;
    }
  }
  out.shape += 0.5 * data.n_periods * data.n_units;
  out.rate += 0.5 * rss;
  return out;
}

NormalParams rho_posterior_params(const GibbsState& state,
                                  const PanelData& data,
                                  const PriorSpec& priors,
                                  const ModelSpec& model) {
  NormalParams prior{Eigen::VectorXd::Zero(1),
                     Eigen::MatrixXd::Constant(1, 1, priors.sigma2_rho)};
  double info = 0.0;
  double cross = 0.0;
  for (int i = 0; i < data.n_units; ++i) {
    const int k = state.membership[i] - 1;
    const double sigma2 = state.sigma2_atoms[k];
    for (int t = 1; t <= data.n_periods; ++t) {
      const double lag = data.y(unit_index(i), t - 1);
      info += lag * lag / sigma2;
      cross += lag * partial_residual_no_rho(state, data, i, k, t) / sigma2;
    }
  }
  if (info == 0.0) return prior;
  Eigen::MatrixXd precision(1, 1);
  precision(0, 0) = 1.0 / priors.sigma2_rho + info;
  Eigen::VectorXd linear(1);
  linear[0] = cross;  // prior mean is zero
  return gaussian_from_precision(precision, linear);
}

NormalParams beta_posterior_params(const GibbsState& state,
                                   const PanelData& data,
                                   const PriorSpec& priors,
                                   const ModelSpec& model, int unit) {
  const int p = data.n_covariates;
  if (p < 1) throw MissingCovariates("beta update needs covariates");
  NormalParams prior{Eigen::VectorXd::Zero(p),
                     priors.sigma2_beta * Eigen::MatrixXd::Identity(p, p)};
  const int k = state.membership[unit] - 1;
  const double sigma2 = state.sigma2_atoms[k];
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  for (int t = 1; t <= data.n_periods; ++t) {
    const Eigen::RowVectorXd xr = data.x[unit].row(t - 1);
    double target = data.y(unit, t) - alpha_at(state, k, t - 1) -
                    state.rho * data.y(unit, t - 1);
    xtx += xr.transpose() * xr;
    xty += xr.transpose() * target;
  }
  if (xtx.isZero(0.0)) return prior;
  Eigen::MatrixXd precision =
      Eigen::MatrixXd::Identity(p, p) / priors.sigma2_beta + xtx / sigma2;
  return gaussian_from_precision(precision, xty / sigma2);
}

NormalParams beta_posterior_params_pooled(const GibbsState& state,
                                          const PanelData& data,
                                          const PriorSpec& priors,
                                          const ModelSpec& model) {
  const int p = data.n_covariates;
  if (p < 1) throw MissingCovariates("beta update needs covariates");
  NormalParams prior{Eigen::VectorXd::Zero(p),
                     priors.sigma2_beta * Eigen::MatrixXd::Identity(p, p)};
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < data.n_units; ++i) {
    const int k = state.membership[i] - 1;
    const double sigma2 = state.sigma2_atoms[k];
    for (int t = 1; t <= data.n_periods; ++t) {
      const Eigen::RowVectorXd xr = data.x[i].row(t - 1);
      double target = data.y(i, t) - alpha_at(state, k, t - 1) -
                      state.rho * data.y(i, t - 1);
      xtx += xr.transpose() * xr / sigma2;
      xty += xr.transpose() * target / sigma2;
    }
  }
  if (xtx.isZero(0.0)) return prior;
  Eigen::MatrixXd precision =
      Eigen::MatrixXd::Identity(p, p) / priors.sigma2_beta + xtx;
  return gaussian_from_precision(precision, xty);
}

BetaParams stick_posterior_params(const GibbsState& state, int k) {
  int members = 0;
  int above = 0;
  for (int g : state.membership) {
    if (g == k + 1) ++members;
    if (g > k + 1) ++above;
  }
  return {members + 1.0, state.concentration + above};
}

Eigen::VectorXd stick_breaking_probs(const Eigen::VectorXd& sticks) {
  Eigen::VectorXd probs(sticks.size());
  double remaining = 1.0;
  for (int k = 0; k < sticks.size(); ++k) {
    probs[k] = sticks[k] * remaining;
    remaining *= 1.0 - sticks[k];
  }
  return probs;
}

double concentration_mixture_weight(double shape, double rate, int k_active,
                                    double eta, int n_units) {
  const double odds =
      (shape + k_active - 1.0) / (n_units * (rate - std::log(eta)));
  return odds / (1.0 + odds);
}

double draw_concentration(const GibbsState& state, int n_units,
                          const PriorSpec& priors, Rng& rng) {
  const double eta = rng.beta(state.concentration + 1.0, n_units);
  const double shape = priors.a_shape;
  const double rate = 1.0 / priors.a_scale;
  const double pick = concentration_mixture_weight(shape, rate, state.k_active,
                                                   eta, n_units);
  const double post_rate = rate - std::log(eta);
  const double post_shape =
      rng.uniform01() < pick ? shape + state.k_active
                             : shape + state.k_active - 1.0;
  return rng.gamma(post_shape, 1.0 / post_rate);
}

double draw_slice_variables(GibbsState& state, Rng& rng) {
  const int n = static_cast<int>(state.membership.size());
  state.slice_u.resize(n);
  double u_star = 1.0;
  for (int i = 0; i < n; ++i) {
    const double cap = state.group_probs[state.membership[i] - 1];
    state.slice_u[i] = rng.uniform01() * cap;
    u_star = std::min(u_star, state.slice_u[i]);
  }
  return u_star;
}

void expand_potential_groups(GibbsState& state, const PriorSpec& priors,
                             const ModelSpec& model, double u_star, Rng& rng,
                             const NormalParams* atom_prior) {
  NormalParams fallback{priors.mu_alpha, priors.sigma_alpha};
  const NormalParams& prior = atom_prior ? *atom_prior : fallback;

  int k = static_cast<int>(state.stick_lengths.size());
  double remaining = 1.0 - state.group_probs.sum();
  while (remaining >= u_star) {
    if (k >= kMaxPotentialGroups)
      throw ChainDiverged("slice expansion exceeded the component cap");
    const double xi = rng.beta(1.0, state.concentration);
    state.stick_lengths.conservativeResize(k + 1);
    state.group_probs.conservativeResize(k + 1);
    state.stick_lengths[k] = xi;
    state.group_probs[k] = xi * remaining;
    remaining *= 1.0 - xi;

    state.alpha_atoms.conservativeResize(k + 1, Eigen::NoChange);
    state.alpha_atoms.row(k) = rng.mv_normal(prior.mean, prior.cov).transpose();
    state.sigma2_atoms.conservativeResize(k + 1);
    state.sigma2_atoms[k] =
        model.heteroskedastic
            ? rng.inverse_gamma(priors.nu_sigma / 2.0, priors.delta_sigma / 2.0)
            : state.sigma2_atoms[0];
    ++k;
  }
  state.k_potential = k;
}

double unit_loglik(const GibbsState& state, const PanelData& data,
                   const ModelSpec& model, int unit, int k) {
  const double sigma2 = state.sigma2_atoms[k];
  double ll = -0.5 * data.n_periods * (kLog2Pi + std::log(sigma2));
  double rss = 0.0;
  for (int t = 1; t <= data.n_periods; ++t) {
    const double r = fully_grouped(model)
                         ? theta_residual(state, data, unit, k, t)
                         : full_residual(state, data, unit, k, t);
    rss += r * r;
  }
  return ll - 0.5 * rss / sigma2;
}

double panel_loglik(const GibbsState& state, const PanelData& data,
                    const ModelSpec& model) {
  double ll = 0.0;
  for (int i = 0; i < data.n_units; ++i)
    ll += unit_loglik(state, data, model, i, state.membership[i] - 1);
  return ll;
}

void draw_memberships(GibbsState& state, const PanelData& data,
                      const ModelSpec& model, Rng& rng,
                      const Eigen::MatrixXd* extra_log_weights) {
  const int k_star = state.k_potential;
  Eigen::VectorXd logw(k_star);
  Eigen::VectorXd w(k_star);
  int max_label = 0;
  for (int i = 0; i < data.n_units; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_star; ++k) {
      if (state.slice_u[i] < state.group_probs[k]) {
        double lw = unit_loglik(state, data, model, i, k);
        if (extra_log_weights) lw += (*extra_log_weights)(i, k);
        logw[k] = lw;
        best = std::max(best, lw);
      } else {
        logw[k] = -std::numeric_limits<double>::infinity();
      }
    }
    if (!std::isfinite(best))
      throw NoFeasibleGroup("no component passes the slice for unit " +
                            std::to_string(i + 1));
    for (int k = 0; k < k_star; ++k)
      w[k] = std::isfinite(logw[k]) ? std::exp(logw[k] - best) : 0.0;
    state.membership[i] = rng.categorical(w) + 1;
    max_label = std::max(max_label, state.membership[i]);
  }
  state.k_active = max_label;
}

namespace {

void swap_group_pair(GibbsState& state, int k1, int k2) {
  state.alpha_atoms.row(k1).swap(state.alpha_atoms.row(k2));
  std::swap(state.sigma2_atoms[k1], state.sigma2_atoms[k2]);
  for (int& g : state.membership) {
    if (g == k1 + 1)
      g = k2 + 1;
    else if (g == k2 + 1)
      g = k1 + 1;
  }
}

double prefix_stick_product(const GibbsState& state, int k) {
  double prod = 1.0;
  for (int j = 0; j < k; ++j) prod *= 1.0 - state.stick_lengths[j];
  return prod;
}

}  // namespace

void label_switch_moves(GibbsState& state, Rng& rng) {
  const int ka = state.k_active;
  if (ka < 2) return;

  // (a) swap the labels of two random nonempty groups
  {
    auto counts = state.group_counts();
    std::vector<int> nonempty;
    for (int k = 0; k < ka; ++k)
      if (counts[k] > 0) nonempty.push_back(k);
    if (nonempty.size() >= 2) {
      const int a = static_cast<int>(rng.uniform01() * nonempty.size());
      int b = static_cast<int>(rng.uniform01() * (nonempty.size() - 1));
      if (b >= a) ++b;
      const int ki = nonempty[std::min<int>(a, nonempty.size() - 1)];
      const int kj = nonempty[std::min<int>(b, nonempty.size() - 1)];
      const double log_ratio =
          (counts[kj] - counts[ki]) * (std::log(state.group_probs[ki]) -
                                       std::log(state.group_probs[kj]));
      if (std::log(rng.uniform01()) < std::min(0.0, log_ratio))
        swap_group_pair(state, ki, kj);
    }
  }

  // (b) swap labels and stick lengths of an adjacent pair
  {
    auto counts = state.group_counts();
    const int l = static_cast<int>(rng.uniform01() * (ka - 1));
    const double base = prefix_stick_product(state, l);
    const double xi_l = state.stick_lengths[l];
    const double xi_r = state.stick_lengths[l + 1];
    const double p_new_l = xi_r * base;
    const double p_new_r = xi_l * (1.0 - xi_r) * base;
    const double log_ratio =
        counts[l + 1] * std::log(p_new_l) + counts[l] * std::log(p_new_r) -
        counts[l] * std::log(state.group_probs[l]) -
        counts[l + 1] * std::log(state.group_probs[l + 1]);
    if (std::log(rng.uniform01()) < std::min(0.0, log_ratio)) {
      std::swap(state.stick_lengths[l], state.stick_lengths[l + 1]);
      state.group_probs[l] = p_new_l;
      state.group_probs[l + 1] = p_new_r;
      swap_group_pair(state, l, l + 1);
    }
  }

  // (c) adjacent swap with stick lengths recomputed so that only the two
  // group probabilities involved change
  {
    auto counts = state.group_counts();
    const int k = static_cast<int>(rng.uniform01() * (ka - 1));
    double tail = 0.0;
    for (int l = k + 2; l < ka; ++l) tail += counts[l];
    const double a = state.concentration;
    const double r1 = (1.0 + a + counts[k + 1] + tail) /
                      (a + counts[k + 1] + tail);
    const double r2 =
        (a + counts[k] + tail) / (1.0 + a + counts[k] + tail);
    const double pi_k = state.group_probs[k];
    const double pi_r = state.group_probs[k + 1];
    const double r_bar = (pi_r * r1 + pi_k * r2) / (pi_k + pi_r);
    const double log_ratio = counts[k + 1] * std::log(r1 / r_bar) +
                             counts[k] * std::log(r2 / r_bar);
    if (std::log(rng.uniform01()) < std::min(0.0, log_ratio)) {
      const double p_new_k = pi_r * r1 / r_bar;
      const double p_new_r = pi_k * r2 / r_bar;
      const double base = prefix_stick_product(state, k);
      const double xi_new_k = p_new_k / base;
      const double xi_new_r = p_new_r / ((1.0 - xi_new_k) * base);
      state.stick_lengths[k] = xi_new_k;
      state.stick_lengths[k + 1] = xi_new_r;
      state.group_probs[k] = p_new_k;
      state.group_probs[k + 1] = p_new_r;
      swap_group_pair(state, k, k + 1);
    }
  }
}

void draw_group_effects(GibbsState& state, const PanelData& data,
                        const ModelSpec& model, const PriorSpec& priors,
                        Rng& rng, const NormalParams* atom_prior) {
  for (int k = 0; k < state.k_active; ++k) {
    NormalParams post =
        fully_grouped(model)
            ? theta_posterior_params(state, data, *atom_prior, k)
            : alpha_posterior_params(state, data, priors, model, k);
    state.alpha_atoms.row(k) = rng.mv_normal(post.mean, post.cov).transpose();
  }
}

void draw_variances(GibbsState& state, const PanelData& data,
                    const ModelSpec& model, const PriorSpec& priors, Rng& rng) {
  if (model.heteroskedastic) {
    for (int k = 0; k < state.k_active; ++k) {
      const IgParams ig =
          fully_grouped(model)
              ? sigma2_posterior_params_full(state, data, priors, k)
              : sigma2_posterior_params(state, data, priors, model, k);
      state.sigma2_atoms[k] = rng.inverse_gamma(ig.shape, ig.rate);
    }
  } else {
    const IgParams ig =
        fully_grouped(model)
            ? sigma2_posterior_params_full_pooled(state, data, priors)
            : sigma2_posterior_params_pooled(state, data, priors, model);
    const double sigma2 = rng.inverse_gamma(ig.shape, ig.rate);
    state.sigma2_atoms.head(state.k_active).setConstant(sigma2);
  }
}

void draw_common_coefficients(GibbsState& state, const PanelData& data,
                              const ModelSpec& model, const PriorSpec& priors,
                              Rng& rng) {
  if (fully_grouped(model)) return;
  const NormalParams rho_post = rho_posterior_params(state, data, priors, model);
  state.rho = rng.normal(rho_post.mean[0], std::sqrt(rho_post.cov(0, 0)));
  if (data.n_covariates > 0) {
    if (model.coefficient_mode == CoefficientMode::kHeterogeneous) {
      for (int i = 0; i < data.n_units; ++i) {
        const NormalParams post =
            beta_posterior_params(state, data, priors, model, i);
        state.beta.row(i) = rng.mv_normal(post.mean, post.cov).transpose();
      }
    } else {
      const NormalParams post =
          beta_posterior_params_pooled(state, data, priors, model);
      state.beta.row(0) = rng.mv_normal(post.mean, post.cov).transpose();
    }
  }
}

namespace {

void resize_components(GibbsState& state, int k) {
  state.alpha_atoms.conservativeResize(k, Eigen::NoChange);
  state.sigma2_atoms.conservativeResize(k);
  state.stick_lengths.conservativeResize(k);
  state.group_probs.conservativeResize(k);
  state.k_potential = k;
}

void sweep_impl(GibbsState& state, const PanelData& data,
                const ModelSpec& model, const PriorSpec& priors, Rng& rng,
                const NormalParams* atom_prior, SgpState* sgp) {
  state.k_active = *std::max_element(state.membership.begin(),
                                     state.membership.end());
  resize_components(state, state.k_active);

  for (int k = 0; k < state.k_active; ++k) {
    const BetaParams bp = stick_posterior_params(state, k);
    state.stick_lengths[k] = rng.beta(bp.a, bp.b);
  }
  state.group_probs = stick_breaking_probs(state.stick_lengths);

  draw_group_effects(state, data, model, priors, rng, atom_prior);
  draw_variances(state, data, model, priors, rng);
  label_switch_moves(state, rng);

  const double u_star = draw_slice_variables(state, rng);
  state.concentration = draw_concentration(state, data.n_units, priors, rng);
  expand_potential_groups(state, priors, model, u_star, rng, atom_prior);

  draw_common_coefficients(state, data, model, priors, rng);

  if (sgp) {
    draw_omega(*sgp, state.membership, state.k_potential, rng);
    draw_memberships_sgp(state, *sgp, data, model, rng);
  } else {
    draw_memberships(state, data, model, rng);
  }
}

}  // namespace

void one_sweep(GibbsState& state, const PanelData& data, const ModelSpec& model,
               const PriorSpec& priors, Rng& rng) {
  if (fully_grouped(model)) {
    const NormalParams prior = theta_prior(data, priors);
    sweep_impl(state, data, model, priors, rng, &prior, nullptr);
  } else {
    sweep_impl(state, data, model, priors, rng, nullptr, nullptr);
  }
}

void compact_labels(GibbsState& state) {
  std::vector<int> counts(state.k_potential, 0);
  for (int g : state.membership) ++counts[g - 1];
  std::vector<int> remap(state.k_potential, 0);
  int next = 0;
  for (int k = 0; k < state.k_potential; ++k)
    if (counts[k] > 0) remap[k] = next++;
  GibbsState packed = state;
  packed.alpha_atoms.resize(next, state.alpha_atoms.cols());
  packed.sigma2_atoms.resize(next);
  packed.stick_lengths.resize(next);
  packed.group_probs.resize(next);
  for (int k = 0; k < state.k_potential; ++k) {
    if (counts[k] == 0) continue;
    packed.alpha_atoms.row(remap[k]) = state.alpha_atoms.row(k);
    packed.sigma2_atoms[remap[k]] = state.sigma2_atoms[k];
    packed.stick_lengths[remap[k]] = state.stick_lengths[k];
    packed.group_probs[remap[k]] = state.group_probs[k];
  }
  for (std::size_t i = 0; i < state.membership.size(); ++i)
    packed.membership[i] = remap[state.membership[i] - 1] + 1;
  packed.k_active = next;
  packed.k_potential = next;
  state = std::move(packed);
}

GibbsState init_state(const PanelData& data, const ModelSpec& model,
                      const PriorSpec& priors, Rng& rng) {
  const int n = data.n_units;
  const int p = data.n_covariates;
  const double a_mean = priors.a_prior_mean();
  const int k0 = std::max<int>(
      1, std::lround(a_mean * std::log((a_mean + n) / a_mean)));

  const PooledOls ols = pooled_ols(
      data, fully_grouped(model) ? false : model.time_varying_alpha);

  GibbsState state;
  state.concentration = a_mean;
  state.membership.assign(n, 1);
  state.slice_u = Eigen::VectorXd::Zero(n);
  const int atom_dim = fully_grouped(model) ? 2 + p
                       : model.time_varying_alpha ? data.n_periods
                                                  : 1;
  state.alpha_atoms.resize(k0, atom_dim);
  state.sigma2_atoms = Eigen::VectorXd::Constant(k0, ols.resid_var);
  state.stick_lengths = Eigen::VectorXd::Constant(k0, 1.0 / (1.0 + a_mean));
  state.group_probs = stick_breaking_probs(state.stick_lengths);
  state.k_active = k0;
  state.k_potential = k0;

  if (fully_grouped(model)) {
    for (int k = 0; k < k0; ++k)
      state.alpha_atoms.row(k) = rng.mv_normal(ols.coef, ols.cov).transpose();
  } else {
    state.rho = ols.rho();
    if (p > 0) {
      const int beta_rows =
          model.coefficient_mode == CoefficientMode::kHeterogeneous ? n : 1;
      state.beta = ols.beta().transpose().replicate(beta_rows, 1);
    }
    for (int k = 0; k < k0; ++k)
      state.alpha_atoms.row(k) =
          rng.mv_normal(ols.alpha(), ols.alpha_cov()).transpose();
  }

  // Membership from likelihood weights without slice indicators.
  Eigen::VectorXd logw(k0);
  Eigen::VectorXd w(k0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < k0; ++k)
      logw[k] = unit_loglik(state, data, model, i, k);
    const double best = logw.maxCoeff();
    for (int k = 0; k < k0; ++k) w[k] = std::exp(logw[k] - best);
    state.membership[i] = rng.categorical(w) + 1;
  }
  state.k_active = *std::max_element(state.membership.begin(),
                                     state.membership.end());
  compact_labels(state);
  return state;
}

std::uint64_t hash_model_spec(const ModelSpec& model) {
  const double fields[] = {
      model.time_varying_alpha ? 1.0 : 0.0,
      model.heteroskedastic ? 1.0 : 0.0,
      static_cast<double>(model.coefficient_mode),
      static_cast<double>(model.membership_prior),
      static_cast<double>(model.estimator)};
  return hash_doubles(1469598103934665603ULL, fields, 5);
}

std::uint64_t hash_prior_spec(const PriorSpec& priors) {
  std::uint64_t h = 1469598103934665603ULL;
  h = hash_doubles(h, priors.mu_alpha.data(), priors.mu_alpha.size());
  h = hash_doubles(h, priors.sigma_alpha.data(), priors.sigma_alpha.size());
  const double fields[] = {priors.sigma_alpha_scale, priors.nu_sigma,
                           priors.delta_sigma,       priors.sigma2_rho,
                           priors.sigma2_beta,       priors.a_shape,
                           priors.a_scale,           priors.sgp_epsilon};
  h = hash_doubles(h, fields, 8);
  h = hash_doubles(h, priors.sgp_table.data(), priors.sgp_table.size());
  return h;
}

PosteriorDraws run_chain(const PanelData& data, const ModelSpec& model,
                         const PriorSpec& priors_in, int m_iter, int burn_in,
                         int thin, std::uint64_t seed) {
  validate_panel(data);
  validate_model_spec(model);
  if (m_iter < 1) throw ValidationError("m_iter must be at least 1");
  if (burn_in < 0 || burn_in >= m_iter)
    throw ValidationError("burn_in must satisfy 0 <= burn_in < m_iter");
  if (thin < 1) throw ValidationError("thin must be at least 1");

  PriorSpec priors = priors_in;
  if (priors.mu_alpha.size() == 0)
    priors = calibrate_priors(data, model, priors_in);
  validate_prior_spec(priors);
  const int expected_dim = model.time_varying_alpha ? data.n_periods : 1;
  if (!fully_grouped(model) && priors.mu_alpha.size() != expected_dim)
    throw DimensionMismatch("mu_alpha dimension does not match the model");

  SgpState sgp;
  SgpState* sgp_ptr = nullptr;
  if (model.membership_prior == MembershipPrior::kSgp) {
    if (priors.sgp_table.rows() != data.n_units || priors.sgp_table.cols() < 1)
      throw ValidationError("the SGP prior requires an N x K^p table");
    sgp.a_table = priors.sgp_table;
    sgp.epsilon = priors.sgp_epsilon;
    sgp.k_preset = static_cast<int>(priors.sgp_table.cols());
    sgp.validate();
    sgp_ptr = &sgp;
  }

  NormalParams theta_pr;
  const NormalParams* atom_prior = nullptr;
  if (fully_grouped(model)) {
    theta_pr = theta_prior(data, priors);
    atom_prior = &theta_pr;
  }

  Rng rng(seed);
  GibbsState state = init_state(data, model, priors, rng);

  PosteriorDraws draws;
  draws.meta.model = model;
  draws.meta.priors = priors;
  draws.meta.n_units = data.n_units;
  draws.meta.n_periods = data.n_periods;
  draws.meta.n_covariates = data.n_covariates;
  draws.meta.m_iter = m_iter;
  draws.meta.burn_in = burn_in;
  draws.meta.thin = thin;
  draws.meta.seed = seed;
  draws.meta.model_hash = hash_model_spec(model);
  draws.meta.prior_hash = hash_prior_spec(priors);

  double nonstationary_sum = 0.0;
  for (int s = 1; s <= m_iter; ++s) {
    try {
      sweep_impl(state, data, model, priors, rng, atom_prior, sgp_ptr);
    } catch (const NumericalSingularity& e) {
      throw NumericalSingularity("iteration " + std::to_string(s) + ": " +
                                 e.what());
    }
    if (!std::isfinite(state.rho) || !state.alpha_atoms.allFinite() ||
        !state.sigma2_atoms.allFinite() ||
        (state.sigma2_atoms.array() <= 0.0).any())
      throw ChainDiverged("non-finite state at iteration " + std::to_string(s));
    if (s > burn_in && (s - burn_in - 1) % thin == 0) {
      draws.states.push_back(state);
      if (fully_grouped(model)) nonstationary_sum += nonstationary_fraction(state);
    }
    compact_labels(state);
  }
  if (fully_grouped(model) && !draws.states.empty())
    draws.meta.nonstationary_share = nonstationary_sum / draws.states.size();
  return draws;
}

}  // namespace bgre
