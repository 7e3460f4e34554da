#include "nzprop/ftm.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

namespace nzprop {

void PhaseConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ValidationError("phase: gamma must be in (0, 1)");
  }
  if (n_quad < 2 || n_quad % 2 != 0) {
    throw ValidationError("phase: n_quad must be even and >= 2");
  }
  if (!(sigma_floor >= 0.0)) {
    throw ValidationError("phase: sigma_floor must be >= 0");
  }
}

double omega_tri(double zeta) {
  const double a = std::abs(zeta);
  return a <= 1.0 ? 1.0 - a : 0.0;
}

namespace {

// Simpson weights on [0,1] folded with the triangular density and the
// variance-correction factor: w_l = c_l * (1 - zeta_l) * exp((t sigma zeta_l)^2 / 2)
// with the 1,4,2,...,4,1 pattern. The kernel evaluation below multiplies by
// cos(t zeta_l |x|) and scales by 2h/3 at the end, so a single weight vector
// serves every x sharing the same (t, sigma, n).
void fill_kernel_weights(double t, double sigma, int n,
                         std::vector<double>& w) {
  w.resize(static_cast<size_t>(n) + 1);
  const double ts = t * sigma;
  for (int l = 0; l <= n; ++l) {
    const double zeta = static_cast<double>(l) / static_cast<double>(n);
    const double c = (l == 0 || l == n) ? 1.0 : (l % 2 == 1 ? 4.0 : 2.0);
    const double u = ts * zeta;
    w[static_cast<size_t>(l)] = c * (1.0 - zeta) * std::exp(0.5 * u * u);
  }
}

double kernel_from_weights(const std::vector<double>& w, double t, double x,
                           int n) {
  const double ax = std::abs(x);  // cosine is even; |x| keeps that exact
  double acc = 0.0;
  for (int l = 0; l <= n; ++l) {
    const double zeta = static_cast<double>(l) / static_cast<double>(n);
    acc += w[static_cast<size_t>(l)] * std::cos(t * zeta * ax);
  }
  const double h = 1.0 / static_cast<double>(n);
  return 2.0 * acc * h / 3.0;
}

void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite " << name;
    throw ValidationError(msg.str());
  }
}

}  // namespace

double kappa_sigma(double t, double x, double sigma, const PhaseConfig& cfg) {
  cfg.validate();
  check_finite(t, "t");
  check_finite(x, "x");
  check_finite(sigma, "sigma");
  if (t < 0.0) throw ValidationError("kappa_sigma: t must be >= 0");
  if (sigma < 0.0) throw ValidationError("kappa_sigma: sigma must be >= 0");
  std::vector<double> w;
  fill_kernel_weights(t, sigma, cfg.n_quad, w);
  return kernel_from_weights(w, t, x, cfg.n_quad);
}

double oracle_psi(double t, double mu, int n_quad) {
  check_finite(t, "t");
  check_finite(mu, "mu");
  if (n_quad < 2 || n_quad % 2 != 0) {
    throw ValidationError("oracle_psi: n_quad must be even and >= 2");
  }
  std::vector<double> w;
  fill_kernel_weights(std::abs(t), 0.0, n_quad, w);
  return kernel_from_weights(w, std::abs(t), mu, n_quad);
}

double oracle_phase(double t, const Eigen::VectorXd& mu, int n_quad) {
  check_finite(t, "t");
  if (n_quad < 2 || n_quad % 2 != 0) {
    throw ValidationError("oracle_phase: n_quad must be even and >= 2");
  }
  const Eigen::Index m = mu.size();
  if (m == 0) throw ValidationError("oracle_phase: empty mean vector");
  const double at = std::abs(t);
  std::vector<double> w;  // sigma = 0 weights are shared by every coordinate
  fill_kernel_weights(at, 0.0, n_quad, w);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    check_finite(mu(j), "mu entry");
    acc += 1.0 - kernel_from_weights(w, at, mu(j), n_quad);
  }
  return acc / static_cast<double>(m);
}

double empirical_phase(double t, const Eigen::VectorXd& v_star,
                       const Eigen::VectorXd& minor_sd,
                       const PhaseConfig& cfg) {
  cfg.validate();
  check_finite(t, "t");
  if (t < 0.0) throw ValidationError("empirical_phase: t must be >= 0");
  const Eigen::Index m = v_star.size();
  if (m == 0) throw ValidationError("empirical_phase: empty input");
  if (minor_sd.size() != m) {
    std::ostringstream msg;
    msg << "empirical_phase: v_star has " << m << " entries but minor_sd has "
        << minor_sd.size();
    throw ValidationError(msg.str());
  }

  // Per-coordinate sigmas typically take only a handful of distinct values
  // (one per eigen-cluster), so the exp-weight vectors are cached; the cache
  // is capped to keep memory bounded when every sigma is distinct.
  constexpr size_t kMaxCached = 8;
  std::map<double, std::vector<double>> cache;
  std::vector<double> scratch;

  double acc = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    check_finite(v_star(j), "v_star entry");
    double sd = minor_sd(j);
    if (!(sd >= 0.0 && sd <= 1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "empirical_phase: minor_sd(" << j << ") = " << sd
          << " outside [0, 1]";
      throw ValidationError(msg.str());
    }
    if (sd < cfg.sigma_floor) sd = 0.0;

    const std::vector<double>* w = nullptr;
    auto it = cache.find(sd);
    if (it != cache.end()) {
      w = &it->second;
    } else if (cache.size() < kMaxCached) {
      std::vector<double> fresh;
      fill_kernel_weights(t, sd, cfg.n_quad, fresh);
      w = &cache.emplace(sd, std::move(fresh)).first->second;
    } else {
      fill_kernel_weights(t, sd, cfg.n_quad, scratch);
      w = &scratch;
    }
    acc += 1.0 - kernel_from_weights(*w, t, v_star(j), cfg.n_quad);
  }
  return acc / static_cast<double>(m);
}

}  // namespace nzprop
