#pragma once

#include <Eigen/Core>

#include "nzprop/errors.hpp"

namespace nzprop {

/// Frequency-domain tuning for the phase-function estimator.
struct PhaseConfig {
  double gamma = 0.3;        // frequency scale in (0, 1)
  int n_quad = 2000;         // composite-Simpson subintervals on [0, 1], even
  double sigma_floor = 1e-12;  // minor sds below this are treated as exactly 0

  void validate() const;
};

/// Triangular smoothing density (1 - |zeta|) on [-1, 1].
double omega_tri(double zeta);

/// Frequency kernel with variance correction:
///   kappa_sigma(t; x) = 2 * int_0^1 (1 - zeta) exp(t^2 zeta^2 sigma^2 / 2)
///                                    cos(t zeta |x|) dzeta,
/// evaluated by composite Simpson with cfg.n_quad subintervals. sigma = 0 is
/// allowed (the exponential factor is 1). For X ~ N(mu, sigma^2),
/// E[kappa_sigma(t; X)] equals the smoothed cosine transform psi(t; mu).
double kappa_sigma(double t, double x, double sigma, const PhaseConfig& cfg);

/// psi(t; mu) = 2 * int_0^1 (1 - zeta) cos(t mu zeta) dzeta, the Fejer-kernel
/// transform of the triangular density; equals 1 at t*mu = 0.
double oracle_psi(double t, double mu, int n_quad = 2000);

/// Phase function under the true means: m^{-1} sum_j (1 - psi(t; mu_j)).
/// Converges to the fraction of nonzero means as t grows.
double oracle_phase(double t, const Eigen::VectorXd& mu, int n_quad = 2000);

/// Empirical phase function m^{-1} sum_j (1 - kappa_{sigma_j}(t; v_j)) with
/// per-coordinate sigmas; entries of minor_sd below cfg.sigma_floor use
/// sigma = 0. Even in each v_j by construction.
double empirical_phase(double t, const Eigen::VectorXd& v_star,
                       const Eigen::VectorXd& minor_sd,
                       const PhaseConfig& cfg);

}  // namespace nzprop
