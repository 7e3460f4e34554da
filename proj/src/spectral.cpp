#include "nzprop/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace nzprop {

namespace {

constexpr double kSymTol = 1e-12;
constexpr double kDiagTol = 1e-10;
constexpr double kRangeTol = 1e-10;
constexpr double kPsdTol = -1e-8;

}  // namespace

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries)
    : entries_(std::move(entries)) {
  const Eigen::Index m = entries_.rows();
  if (m == 0 || entries_.cols() != m) {
    std::ostringstream msg;
    msg << "correlation matrix must be square and non-empty, got "
        << entries_.rows() << "x" << entries_.cols();
    throw ValidationError(msg.str());
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = entries_(i, j);
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite entry at (" << i << "," << j << ")";
        throw ValidationError(msg.str());
      }
      if (std::abs(v) > 1.0 + kRangeTol) {
        std::ostringstream msg;
        msg << "entry (" << i << "," << j << ") = " << v
            << " outside [-1, 1]";
        throw ValidationError(msg.str());
      }
      if (j > i && std::abs(v - entries_(j, i)) > kSymTol) {
        std::ostringstream msg;
        msg << "asymmetric at (" << i << "," << j << "): " << v << " vs "
            << entries_(j, i);
        throw ValidationError(msg.str());
      }
    }
    if (std::abs(entries_(i, i) - 1.0) > kDiagTol) {
      std::ostringstream msg;
      msg << "diagonal entry " << i << " = " << entries_(i, i)
          << " is not 1";
      throw ValidationError(msg.str());
    }
  }
}

Spectrum eigendecompose(const CorrelationMatrix& sigma) {
  const Eigen::Index m = sigma.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma.entries());
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "symmetric eigensolver did not converge on " << m << "x" << m
        << " input (tridiagonal QL iteration limit reached)";
    throw NumericError(msg.str());
  }

  Spectrum out;
  // Eigen returns ascending order; flip to non-increasing.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();

  if (out.eigenvalues(m - 1) < kPsdTol) {
    std::ostringstream msg;
    msg << "matrix is not positive semidefinite: smallest eigenvalue = "
        << out.eigenvalues(m - 1);
    throw ValidationError(msg.str());
  }

  // Canonical signs: largest-magnitude entry of each eigenvector positive,
  // first occurrence wins on magnitude ties.
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = std::abs(out.eigenvectors(i, j));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (out.eigenvectors(imax, j) < 0.0) {
      out.eigenvectors.col(j) = -out.eigenvectors.col(j);
    }
  }
  return out;
}

double eigenvalue_tail_rms(const Spectrum& spectrum, int k) {
  const Eigen::Index m = spectrum.dim();
  if (k < 0 || k > m) throw ValidationError("tail index out of range");
  double sumsq = 0.0;
  for (Eigen::Index j = m - 1; j >= k; --j) {
    const double lam = std::max(spectrum.eigenvalues(j), 0.0);
    sumsq += lam * lam;
  }
  return std::sqrt(sumsq) / static_cast<double>(m);
}

int choose_num_factors(const Spectrum& spectrum, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("delta must be in (0, 1)");
  }
  const Eigen::Index m = spectrum.dim();
  const double threshold =
      std::pow(static_cast<double>(m), -delta) * (1.0 + 1e-10);

  // Suffix sums of squared (clamped) eigenvalues, accumulated from the tail
  // so every k reuses the same rounding path.
  double sumsq = 0.0;
  std::vector<double> tail(static_cast<size_t>(m) + 1, 0.0);
  for (Eigen::Index j = m - 1; j >= 0; --j) {
    const double lam = std::max(spectrum.eigenvalues(j), 0.0);
    sumsq += lam * lam;
    tail[static_cast<size_t>(j)] = sumsq;
  }
  for (int k = 0; k <= m - 1; ++k) {
    const double rms = std::sqrt(tail[static_cast<size_t>(k)]) /
                       static_cast<double>(m);
    if (rms <= threshold) return k;
  }
  return static_cast<int>(m) - 1;
}

bool tail_bound_met(const Spectrum& spectrum, int k, double delta) {
  const double threshold =
      std::pow(static_cast<double>(spectrum.dim()), -delta) * (1.0 + 1e-10);
  return eigenvalue_tail_rms(spectrum, k) <= threshold;
}

PfaDecomposition build_pfa(const Spectrum& spectrum, int k, double delta) {
  const Eigen::Index m = spectrum.dim();
  if (k < 0 || k > m - 1) {
    std::ostringstream msg;
    msg << "factor count k = " << k << " outside [0, " << (m - 1) << "]";
    throw ValidationError(msg.str());
  }

  PfaDecomposition pfa;
  pfa.k = k;
  pfa.delta = delta;
  pfa.loadings.resize(m, k);
  pfa.factor_variances.resize(k);
  pfa.sigma_major_sq = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < k; ++j) {
    const double lam = std::max(spectrum.eigenvalues(j), 0.0);
    pfa.factor_variances(j) = lam;
    pfa.loadings.col(j) = std::sqrt(lam) * spectrum.eigenvectors.col(j);
    pfa.sigma_major_sq.array() +=
        lam * spectrum.eigenvectors.col(j).array().square();
  }

  pfa.minor_sd.resize(m);
  double max_sd = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (pfa.sigma_major_sq(i) > 1.0 + 1e-10) {
      std::ostringstream msg;
      msg << "major-vector variance " << pfa.sigma_major_sq(i)
          << " at coordinate " << i << " exceeds 1";
      throw NumericError(msg.str());
    }
    pfa.minor_sd(i) = std::sqrt(std::max(0.0, 1.0 - pfa.sigma_major_sq(i)));
    max_sd = std::max(max_sd, pfa.minor_sd(i));
  }
  pfa.a_min = max_sd > 0.0 ? 1.0 / max_sd
                           : std::numeric_limits<double>::infinity();
  pfa.gamma_m = max_sd * std::sqrt(2.0 * std::log(static_cast<double>(m)));
  return pfa;
}

}  // namespace nzprop
