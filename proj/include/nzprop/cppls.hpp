#pragma once

#include <Eigen/Core>
#include <vector>

#include "nzprop/spectral.hpp"

namespace nzprop {

/// Tuning for the concave partially-penalized least-squares fit.
struct McpConfig {
  double a = 3.7;                // MCP concavity, > 1
  int n_lambda = 50;             // grid size, >= 2
  double lambda_min_ratio = 1e-3;
  double tol = 1e-5;             // objective-change stopping threshold
  int max_outer_iters = 100;

  void validate() const;
};

/// Result of the alternating fit. eta_hat is recomputed as loadings * w_hat,
/// never stored independently.
struct CpplsFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd w_hat;      // empty when k = 0
  Eigen::VectorXd eta_hat;
  double lambda_star = 0.0;
  std::vector<double> objective_trace;  // one entry per outer iteration
  int n_iters = 0;
  bool converged = false;
  bool degenerate_grid = false;         // all-zero initial residual
  bool dropped_factors = false;         // factors with variance <= 1e-12 skipped
};

/// MCP value: integral of its derivative a^{-1}(a*lambda - s)_+ over [0, t].
/// Equals lambda*t - t^2/(2a) for t <= a*lambda, a*lambda^2/2 beyond.
/// Requires t >= 0.
double mcp_penalty(double t, double lambda, double a);

/// Global minimizer over b of (r - b)^2 + mcp_penalty(|b|, lambda, a):
///   0                                   if |r| <= lambda/2,
///   sign(r)(|r| - lambda/2)/(1 - 1/(2a)) if lambda/2 < |r| < a*lambda,
///   r                                   if |r| >= a*lambda.
/// The piecewise derivative is strictly increasing for a > 1/2, so the
/// stationary point is the unique minimum; ties at |r| = lambda/2 go to 0.
double mcp_threshold(double r, double lambda, double a);

/// Geometric grid of cfg.n_lambda values from lambda_max = 2*max|residual|
/// (the smallest lambda at which every coordinate thresholds to zero) down to
/// lambda_max * cfg.lambda_min_ratio, strictly decreasing. An all-zero
/// residual yields the single value 0 with *degenerate set.
std::vector<double> make_lambda_grid(const Eigen::VectorXd& residual,
                                     const McpConfig& cfg,
                                     bool* degenerate = nullptr);

struct BetaStepResult {
  Eigen::VectorXd beta;
  double lambda_star = 0.0;
  double objective = 0.0;
};

/// L(beta, w; lambda) = ||z - beta - g_times_w||^2 + sum_i penalty(|beta_i|).
double cppls_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& g_times_w, double lambda,
                       double a);

/// Exact block minimization over (beta, lambda in grid): the design is the
/// identity, so beta is thresholded coordinate-wise at each lambda and the
/// (beta, lambda) pair with the smallest objective is returned, ties broken
/// toward the larger lambda.
BetaStepResult beta_step(const Eigen::VectorXd& z,
                         const Eigen::VectorXd& g_times_w,
                         const std::vector<double>& grid,
                         const McpConfig& cfg);

/// Exact unpenalized least-squares minimizer of ||z - beta - G w||^2:
/// w = D^{-1} T^T (z - beta) with G = T D, T^T T = I. Factor directions with
/// variance <= 1e-12 are dropped (coefficient 0) and flagged via *dropped.
Eigen::VectorXd w_step(const Eigen::VectorXd& z, const Eigen::VectorXd& beta,
                       const PfaDecomposition& pfa, bool* dropped = nullptr);

/// Alternating optimization: w(0) = 0, then exact beta- and w-steps until the
/// objective changes by less than cfg.tol or max_outer_iters is reached.
/// The lambda grid is built once from the initial residual and clipped below
/// at 2*gamma_m, the scale separating minor-vector noise from signal; without
/// the clip the joint (beta, lambda) selection always lands on the grid floor
/// and the factors are never estimated. With k = 0 the fit reduces to a
/// single beta-step.
CpplsFit fit_cppls(const Eigen::VectorXd& z, const PfaDecomposition& pfa,
                   const McpConfig& cfg);

}  // namespace nzprop
