#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "mlsvd/error.hpp"

namespace mlsvd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One singular triplet (u, sigma, v) with A v ~= sigma u.
struct SingularTriplet {
  Vector left;
  double sigma = 0.0;
  Vector right;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& message, SingularTriplet last, Index component)
      : Error(ErrorCode::NonConvergence, message),
        last_(std::move(last)),
        component_(component) {}

  const SingularTriplet& last_iterate() const noexcept { return last_; }
  Index component() const noexcept { return component_; }

 private:
  SingularTriplet last_;
  Index component_;
};

struct SvdResult {
  Matrix left_vectors;     // n x Q, orthonormal columns
  Vector singular_values;  // length Q, non-increasing and >= 0
  Matrix right_vectors;    // p x Q, orthonormal columns
};

struct PowerMethodOptions {
  double tol = 1e-9;
  Index max_iter = 1000;
  // Stream for the restart vectors drawn when the iteration stagnates
  // (start orthogonal to the dominant subspace, e.g. the all-ones vector
  // on a column-centered matrix). Restarts are drawn on the right side so
  // the same rule works when the rows of A are partitioned across sites.
  std::uint64_t redraw_seed = kFitRedrawSeed;
  // Scale used for the stagnation and zero-matrix checks; defaults to
  // the Frobenius norm of the argument when <= 0.
  double scale = 0.0;

  static constexpr std::uint64_t kFitRedrawSeed = 0x6d6c73766400ULL;
};

inline constexpr double kStagnationFactor = 1e-12;

/// Dominant singular triplet by the alternating iteration
/// z = A^T q, z /= |z|, q = A z, sigma = |q|, q /= |q|,
/// stopped once |A^T u - sigma v| <= tol * sigma.
/// Sign convention: the first nonzero entry of v is positive.
/// Throws Error(ZeroMatrix) when |A|_F = 0 and NonConvergenceError with the
/// last iterate when max_iter is exhausted.
SingularTriplet power_method(const Matrix& a, const Vector& start, double tol, Index max_iter,
                             std::uint64_t redraw_seed = PowerMethodOptions::kFitRedrawSeed);

/// Rank-Q SVD by repeated power iteration, deflating A <- A - sigma u v^T
/// after each extracted component. Start vectors are pseudo-random unit
/// vectors drawn from `seed` (one stream per component). Extracted vectors
/// are re-orthogonalized against the previous components and sigma refreshed
/// as u^T A v before deflation. NonConvergence is rethrown with the index of
/// the failing component.
SvdResult truncated_svd(const Matrix& a, Index rank, double tol, Index max_iter,
                        std::uint64_t seed);

/// Deflation SVD used inside the model fits and mirrored verbatim by the
/// distributed protocol: all-ones start per component, no re-orthogonalization
/// pass, and a component that exhausts max_iter while numerically negligible
/// (sigma <= 1e-9 * scale) is accepted as-is instead of raising.
SvdResult fit_svd(const Matrix& a, Index rank, double tol, Index max_iter);

inline constexpr double kNegligibleSigmaFactor = 1e-9;

/// Shrunken singular values (lambda_i - sigma2) / sqrt(lambda_i) for
/// i = 1..rank, where sigma2 is the mean of the eigenvalues with index in
/// (rank, effective_rank]; eigenvalues beyond the provided list count as 0.
/// Negative results are clamped to 0. Throws Error(InvalidRank) when
/// rank > effective_rank.
Vector shrink_spectrum(const Vector& eigenvalues, Index rank, Index effective_rank);

/// Shrinkage with the noise variance supplied directly; shrink_spectrum and
/// the model fits (which obtain the trailing eigenvalue mass from the
/// Frobenius norm) both funnel through this.
Vector shrink_with_noise(const Vector& leading_eigenvalues, double noise_variance);

/// Throws Error(ShapeMismatch) when the matrix holds a NaN or infinity.
void require_finite(const Matrix& m, const char* what);

}  // namespace mlsvd
