#include "nzprop/cppls.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace nzprop {

void McpConfig::validate() const {
  if (!(a > 1.0)) throw ValidationError("mcp: a must be > 1");
  if (n_lambda < 2) throw ValidationError("mcp: n_lambda must be >= 2");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw ValidationError("mcp: lambda_min_ratio must be in (0, 1)");
  }
  if (!(tol > 0.0)) throw ValidationError("mcp: tol must be > 0");
  if (max_outer_iters < 1) {
    throw ValidationError("mcp: max_outer_iters must be >= 1");
  }
}

double mcp_penalty(double t, double lambda, double a) {
  if (t < 0.0 || !std::isfinite(t)) {
    throw ValidationError("mcp_penalty: t must be finite and >= 0");
  }
  if (lambda < 0.0) throw ValidationError("mcp_penalty: lambda must be >= 0");
  if (!(a > 1.0)) throw ValidationError("mcp_penalty: a must be > 1");
  if (t <= a * lambda) {
    return lambda * t - t * t / (2.0 * a);
  }
  return a * lambda * lambda / 2.0;
}

double mcp_threshold(double r, double lambda, double a) {
  if (!std::isfinite(r)) throw ValidationError("mcp_threshold: r not finite");
  if (lambda < 0.0) throw ValidationError("mcp_threshold: lambda must be >= 0");
  if (!(a > 0.5)) throw ValidationError("mcp_threshold: a must exceed 1/2");
  const double ar = std::abs(r);
  if (ar <= lambda / 2.0) return 0.0;
  if (ar >= a * lambda) return r;
  const double b = (ar - lambda / 2.0) / (1.0 - 1.0 / (2.0 * a));
  return r < 0.0 ? -b : b;
}

std::vector<double> make_lambda_grid(const Eigen::VectorXd& residual,
                                     const McpConfig& cfg, bool* degenerate) {
  cfg.validate();
  if (residual.size() == 0) {
    throw ValidationError("make_lambda_grid: empty residual");
  }
  if (degenerate) *degenerate = false;
  const double lambda_max = 2.0 * residual.cwiseAbs().maxCoeff();
  if (lambda_max == 0.0) {
    if (degenerate) *degenerate = true;
    return {0.0};
  }
  std::vector<double> grid(static_cast<size_t>(cfg.n_lambda));
  for (int i = 0; i < cfg.n_lambda; ++i) {
    grid[static_cast<size_t>(i)] =
        lambda_max * std::pow(cfg.lambda_min_ratio,
                              static_cast<double>(i) /
                                  static_cast<double>(cfg.n_lambda - 1));
  }
  return grid;
}

double cppls_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& g_times_w, double lambda,
                       double a) {
  double obj = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double resid = z(i) - beta(i) - g_times_w(i);
    obj += resid * resid;
  }
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    obj += mcp_penalty(std::abs(beta(i)), lambda, a);
  }
  return obj;
}

BetaStepResult beta_step(const Eigen::VectorXd& z,
                         const Eigen::VectorXd& g_times_w,
                         const std::vector<double>& grid,
                         const McpConfig& cfg) {
  if (z.size() != g_times_w.size()) {
    throw ValidationError("beta_step: z and g_times_w length mismatch");
  }
  if (grid.empty()) throw ValidationError("beta_step: empty lambda grid");

  const Eigen::VectorXd residual = z - g_times_w;
  BetaStepResult best;
  best.objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta(residual.size());
  for (const double lambda : grid) {
    double obj = 0.0;
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
      const double b = mcp_threshold(residual(i), lambda, cfg.a);
      beta(i) = b;
      const double d = residual(i) - b;
      obj += d * d + mcp_penalty(std::abs(b), lambda, cfg.a);
    }
    // Strict improvement only: on ties the earlier (larger) lambda is kept.
    if (obj < best.objective) {
      best.objective = obj;
      best.beta = beta;
      best.lambda_star = lambda;
    }
  }
  return best;
}

Eigen::VectorXd w_step(const Eigen::VectorXd& z, const Eigen::VectorXd& beta,
                       const PfaDecomposition& pfa, bool* dropped) {
  if (z.size() != beta.size() || z.size() != pfa.loadings.rows()) {
    throw ValidationError("w_step: dimension mismatch");
  }
  if (dropped) *dropped = false;
  const Eigen::VectorXd residual = z - beta;
  Eigen::VectorXd w(pfa.k);
  for (int j = 0; j < pfa.k; ++j) {
    const double lam = pfa.factor_variances(j);
    if (lam <= 1e-12) {
      w(j) = 0.0;
      if (dropped) *dropped = true;
      continue;
    }
    // Column j of the loadings is sqrt(lam)*rho_j, so rho_j^T r / sqrt(lam)
    // equals (loading_j . r) / lam.
    w(j) = pfa.loadings.col(j).dot(residual) / lam;
  }
  return w;
}

CpplsFit fit_cppls(const Eigen::VectorXd& z, const PfaDecomposition& pfa,
                   const McpConfig& cfg) {
  cfg.validate();
  if (z.size() != pfa.loadings.rows()) {
    throw ValidationError("fit_cppls: z length does not match decomposition");
  }
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z(i))) {
      std::ostringstream msg;
      msg << "fit_cppls: non-finite entry at index " << i;
      throw ValidationError(msg.str());
    }
  }

  CpplsFit fit;
  std::vector<double> grid = make_lambda_grid(z, cfg, &fit.degenerate_grid);

  // Keep lambdas at or above the noise-separation scale 2*gamma_m: null
  // coordinates satisfy |z_i - eta_i| <= lambda/2 at stationarity and
  // max_i |v_i| is roughly gamma_m, so smaller lambdas absorb the factors
  // into beta and the joint (beta, lambda) objective degenerates.
  if (!fit.degenerate_grid) {
    const double floor = 2.0 * pfa.gamma_m;
    std::vector<double> clipped;
    for (double lam : grid) {
      if (lam >= floor) clipped.push_back(lam);
    }
    if (clipped.empty()) clipped.push_back(grid.front());
    grid = std::move(clipped);
  }

  const Eigen::Index m = z.size();

  if (pfa.k == 0) {
    BetaStepResult bs =
        beta_step(z, Eigen::VectorXd::Zero(m), grid, cfg);
    fit.beta_hat = std::move(bs.beta);
    fit.w_hat = Eigen::VectorXd(0);
    fit.eta_hat = Eigen::VectorXd::Zero(m);
    fit.lambda_star = bs.lambda_star;
    fit.objective_trace.push_back(bs.objective);
    fit.n_iters = 1;
    fit.converged = true;
    return fit;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(pfa.k);
  Eigen::VectorXd g_times_w = Eigen::VectorXd::Zero(m);
  double prev = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
    BetaStepResult bs = beta_step(z, g_times_w, grid, cfg);
    fit.objective_trace.push_back(bs.objective);
    fit.n_iters = iter + 1;
    fit.beta_hat = std::move(bs.beta);
    fit.lambda_star = bs.lambda_star;
    fit.w_hat = w;  // the w this beta-step (and objective) was computed against
    if (std::abs(bs.objective - prev) < cfg.tol) {
      fit.converged = true;
      break;
    }
    prev = bs.objective;
    bool dropped = false;
    w = w_step(z, fit.beta_hat, pfa, &dropped);
    fit.dropped_factors = fit.dropped_factors || dropped;
    g_times_w = pfa.loadings * w;
  }

  fit.eta_hat = pfa.loadings * fit.w_hat;
  return fit;
}

}  // namespace nzprop
