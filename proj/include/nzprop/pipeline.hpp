#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "nzprop/cppls.hpp"
#include "nzprop/ftm.hpp"
#include "nzprop/spectral.hpp"

namespace nzprop {

/// Output of the end-to-end estimator. pi_tilde is the raw phase-function
/// value and is deliberately not clipped to [0, 1]; pi_tilde_clipped is a
/// convenience field only.
struct EstimateResult {
  double pi_tilde = 0.0;
  double pi0_tilde = 1.0;          // exactly 1 - pi_tilde
  double pi_tilde_clipped = 0.0;
  int k_used = 0;
  double t_star = 0.0;             // sqrt(2 * gamma * log m)
  double gamma_m = 0.0;
  double lambda_star = 0.0;
  bool cppls_converged = false;
  std::vector<std::string> warnings;
};

/// One-sided p-values on |z|: entries lie in [0, 0.5].
struct PvalueVector {
  std::vector<double> values;
};

/// Full pipeline: spectral decomposition, factor-count selection, PFA,
/// alternating fit, then the phase function of the mean-shifted estimated
/// minor vector z - G_k w_hat at frequency sqrt(2 * gamma * log m).
EstimateResult estimate_pi(const Eigen::VectorXd& z,
                           const CorrelationMatrix& sigma, double delta,
                           const McpConfig& mcp_cfg,
                           const PhaseConfig& phase_cfg);

/// Same pipeline with a precomputed decomposition, so a fixed correlation
/// matrix is decomposed once across many draws.
EstimateResult estimate_pi(const Eigen::VectorXd& z, const Spectrum& spectrum,
                           double delta, const McpConfig& mcp_cfg,
                           const PhaseConfig& phase_cfg);

/// p_i = 1 - Phi(|z_i|) via the complementary error function.
PvalueVector z_to_pvalues(const Eigen::VectorXd& z);

/// Median-based null-proportion estimate
/// (m - floor(m/2) + 1) / (m (1 - p_(floor(m/2)))), where p_(r) is the r-th
/// smallest p-value. Returns +inf with *degenerate set when the median
/// p-value is 1.
double benjamini_pi0(const PvalueVector& pvalues, bool* degenerate = nullptr);

}  // namespace nzprop
