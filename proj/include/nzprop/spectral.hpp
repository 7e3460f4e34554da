#pragma once

#include <Eigen/Core>
#include <limits>

#include "nzprop/errors.hpp"

namespace nzprop {

/// A validated m x m correlation matrix.
///
/// Construction enforces: symmetry (|S_ij - S_ji| <= 1e-12), unit diagonal
/// (|S_ii - 1| <= 1e-10) and entries within [-1, 1] up to 1e-10 round-off.
/// Positive semidefiniteness is checked at decomposition time.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd entries);

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// Spectral decomposition of a correlation matrix.
///
/// Eigenvalues are sorted non-increasing; eigenvector column j pairs with
/// eigenvalues[j]. Signs are canonicalized so the largest-magnitude entry of
/// each eigenvector is positive, making the basis reproducible across runs.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }
};

/// Principal-factor split built from the top-k eigenpairs: the major vector
/// carries the dominant covariance, the minor vector keeps per-coordinate
/// standard deviations minor_sd and is weakly dependent once the eigenvalue
/// tail is small.
struct PfaDecomposition {
  int k = 0;
  Eigen::MatrixXd loadings;         // m x k, column j = sqrt(lambda_j) * rho_j
  Eigen::VectorXd factor_variances; // top-k eigenvalues, clamped at 0
  Eigen::VectorXd sigma_major_sq;   // variance of the major vector, per coordinate
  Eigen::VectorXd minor_sd;         // sqrt(max(0, 1 - sigma_major_sq)), in [0, 1]
  double a_min = std::numeric_limits<double>::infinity(); // 1 / max(minor_sd); +inf when all minor_sd are 0
  double gamma_m = 0.0;             // max(minor_sd) * sqrt(2 log m), the rough maximum of the minor entries
  double delta = 0.0;               // tail-decay exponent used to choose k
};

/// Dense symmetric eigendecomposition with deterministic ordering and signs.
/// Throws ValidationError if the matrix is not positive semidefinite beyond
/// round-off (smallest eigenvalue < -1e-8) and NumericError on solver failure.
Spectrum eigendecompose(const CorrelationMatrix& sigma);

/// m^{-1} sqrt(sum_{j>k} lambda_j^2) with eigenvalues clamped at 0.
double eigenvalue_tail_rms(const Spectrum& spectrum, int k);

/// Smallest k in [0, m-1] with eigenvalue_tail_rms(k) <= m^{-delta}
/// (a 1-ulp relative slack keeps exact-equality cases stable). If even
/// k = m-1 fails the bound, returns m-1; callers can detect that case with
/// tail_bound_met.
int choose_num_factors(const Spectrum& spectrum, double delta);

bool tail_bound_met(const Spectrum& spectrum, int k, double delta);

/// Builds the factor split from the top-k eigenpairs. 1 - sigma_major_sq is
/// clamped at 0 before the square root; minor_sd = 0 coordinates correspond
/// to a_i = +inf.
PfaDecomposition build_pfa(const Spectrum& spectrum, int k, double delta);

}  // namespace nzprop
