#include "nzprop/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nzprop {

EstimateResult estimate_pi(const Eigen::VectorXd& z, const Spectrum& spectrum,
                           double delta, const McpConfig& mcp_cfg,
                           const PhaseConfig& phase_cfg) {
  const Eigen::Index m = z.size();
  if (m < 2) throw ValidationError("estimate_pi: need at least 2 coordinates");
  if (spectrum.dim() != m) {
    std::ostringstream msg;
    msg << "estimate_pi: z has " << m << " entries but the decomposition is "
        << spectrum.dim() << "-dimensional";
    throw ValidationError(msg.str());
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("estimate_pi: delta must be in (0, 1)");
  }
  mcp_cfg.validate();
  phase_cfg.validate();

  EstimateResult result;

  const int k = choose_num_factors(spectrum, delta);
  if (!tail_bound_met(spectrum, k, delta)) {
    std::ostringstream msg;
    msg << "eigenvalue tail bound not met even at k = m-1 for delta = "
        << delta;
    result.warnings.push_back(msg.str());
  }
  const PfaDecomposition pfa = build_pfa(spectrum, k, delta);
  result.k_used = k;
  result.gamma_m = pfa.gamma_m;

  const CpplsFit fit = fit_cppls(z, pfa, mcp_cfg);
  result.lambda_star = fit.lambda_star;
  result.cppls_converged = fit.converged;
  if (fit.degenerate_grid) {
    result.warnings.push_back("degenerate lambda grid (all-zero residual)");
  }
  if (fit.dropped_factors) {
    result.warnings.push_back(
        "factor directions with near-zero variance were dropped");
  }
  if (!fit.converged) {
    result.warnings.push_back("alternating fit hit the outer iteration cap");
  }

  const Eigen::VectorXd v_star = z - fit.eta_hat;
  result.t_star =
      std::sqrt(2.0 * phase_cfg.gamma * std::log(static_cast<double>(m)));

  const double max_sd = pfa.minor_sd.maxCoeff();
  if (result.t_star * max_sd > 3.0) {
    std::ostringstream msg;
    msg << "noise amplification regime: t* * max(minor_sd) = "
        << result.t_star * max_sd << " > 3";
    result.warnings.push_back(msg.str());
  }

  result.pi_tilde =
      empirical_phase(result.t_star, v_star, pfa.minor_sd, phase_cfg);
  result.pi0_tilde = 1.0 - result.pi_tilde;
  result.pi_tilde_clipped = std::clamp(result.pi_tilde, 0.0, 1.0);
  return result;
}

EstimateResult estimate_pi(const Eigen::VectorXd& z,
                           const CorrelationMatrix& sigma, double delta,
                           const McpConfig& mcp_cfg,
                           const PhaseConfig& phase_cfg) {
  if (z.size() != sigma.dim()) {
    std::ostringstream msg;
    msg << "estimate_pi: z has " << z.size()
        << " entries but sigma is " << sigma.dim() << "x" << sigma.dim();
    throw ValidationError(msg.str());
  }
  return estimate_pi(z, eigendecompose(sigma), delta, mcp_cfg, phase_cfg);
}

PvalueVector z_to_pvalues(const Eigen::VectorXd& z) {
  PvalueVector p;
  p.values.resize(static_cast<size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z(i))) {
      std::ostringstream msg;
      msg << "z_to_pvalues: non-finite entry at index " << i;
      throw ValidationError(msg.str());
    }
    // 1 - Phi(|z|) = erfc(|z| / sqrt(2)) / 2
    p.values[static_cast<size_t>(i)] =
        0.5 * std::erfc(std::abs(z(i)) / std::sqrt(2.0));
  }
  return p;
}

double benjamini_pi0(const PvalueVector& pvalues, bool* degenerate) {
  if (degenerate) *degenerate = false;
  const size_t m = pvalues.values.size();
  if (m < 2) throw ValidationError("benjamini_pi0: need at least 2 p-values");
  for (size_t i = 0; i < m; ++i) {
    const double p = pvalues.values[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      std::ostringstream msg;
      msg << "benjamini_pi0: p-value " << p << " at index " << i
          << " outside [0, 1]";
      throw ValidationError(msg.str());
    }
  }
  std::vector<double> sorted = pvalues.values;
  std::sort(sorted.begin(), sorted.end());
  const size_t rank = m / 2;  // floor; p_(rank) is rank-th smallest (1-based)
  const double p_med = sorted[rank - 1];
  if (p_med >= 1.0) {
    if (degenerate) *degenerate = true;
    return std::numeric_limits<double>::infinity();
  }
  const double md = static_cast<double>(m);
  return (md - static_cast<double>(rank) + 1.0) / (md * (1.0 - p_med));
}

}  // namespace nzprop
