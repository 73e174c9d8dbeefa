#include "mlsvd/linalg.hpp"

#include <cmath>
#include <string>

#include "mlsvd/rng.hpp"

namespace mlsvd {

namespace {

void fix_sign(SingularTriplet& t) {
  for (Index i = 0; i < t.right.size(); ++i) {
    if (std::abs(t.right[i]) > 1e-12) {
      if (t.right[i] < 0.0) {
        t.right = -t.right;
        t.left = -t.left;
      }
      return;
    }
  }
}

struct PowerOutcome {
  SingularTriplet triplet;
  bool converged = false;
  Index iterations = 0;
};

PowerOutcome power_iterate(const Matrix& a, const Vector& start, double tol, Index max_iter,
                           std::uint64_t redraw_seed, double scale, Index component) {
  const Index p = a.cols();
  const double stagnation = kStagnationFactor * scale;

  Vector u = start;
  const double start_norm = u.norm();
  if (start_norm == 0.0) throw Error(ErrorCode::InvalidConfig, "power method start vector is zero");
  u /= start_norm;

  SingularTriplet current;
  bool have_prev = false;
  std::uint64_t attempt = 0;

  for (Index iter = 1; iter <= max_iter; ++iter) {
    Vector z = a.transpose() * u;
    if (have_prev && (z - current.sigma * current.right).norm() <= tol * current.sigma) {
      fix_sign(current);
      return {current, true, iter};
    }
    Vector v;
    const double zn = z.norm();
    if (zn <= stagnation) {
      v = unit_vector(p, mix_seed(redraw_seed, static_cast<std::uint64_t>(component), attempt++));
    } else {
      v = z / zn;
    }
    Vector w = a * v;
    double sigma = w.norm();
    // v landed in the (numerical) null space; retry with fresh directions.
    std::uint64_t inner = 0;
    while (sigma <= stagnation && inner < 32) {
      v = unit_vector(p, mix_seed(redraw_seed, static_cast<std::uint64_t>(component), attempt++));
      w = a * v;
      sigma = w.norm();
      ++inner;
    }
    if (sigma <= stagnation) {
      // The deflated matrix is numerically zero in every sampled direction.
      current = {u, 0.0, v};
      fix_sign(current);
      return {current, true, iter};
    }
    u = w / sigma;
    current = {u, sigma, v};
    have_prev = true;
  }

  fix_sign(current);
  return {current, false, max_iter};
}

Vector ones_start(Index n) { return Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))); }

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " contains non-finite entries");
  }
}

SingularTriplet power_method(const Matrix& a, const Vector& start, double tol, Index max_iter,
                             std::uint64_t redraw_seed) {
  require_finite(a, "power_method input");
  if (a.rows() == 0 || a.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "empty matrix");
  if (start.size() != a.rows()) throw Error(ErrorCode::ShapeMismatch, "start vector length");
  if (tol <= 0.0) throw Error(ErrorCode::InvalidConfig, "tol must be positive");
  const double scale = a.norm();
  if (scale == 0.0) throw Error(ErrorCode::ZeroMatrix, "power method on a zero matrix");

  PowerOutcome out = power_iterate(a, start, tol, max_iter, redraw_seed, scale, 0);
  if (!out.converged) {
    throw NonConvergenceError("power method did not converge in " + std::to_string(max_iter) +
                                  " iterations",
                              out.triplet, 0);
  }
  return out.triplet;
}

namespace {

SvdResult svd_by_deflation(const Matrix& a, Index rank, double tol, Index max_iter,
                           bool seeded_starts, std::uint64_t seed, bool accept_negligible,
                           bool reorthogonalize) {
  require_finite(a, "truncated_svd input");
  const Index n = a.rows();
  const Index p = a.cols();
  if (rank < 1 || rank > std::min(n, p)) {
    throw Error(ErrorCode::InvalidRank, "rank must lie in [1, min(rows, cols)]");
  }

  const double scale = a.norm();
  if (scale == 0.0) throw Error(ErrorCode::ZeroMatrix, "SVD of a zero matrix");

  SvdResult result;
  result.left_vectors.resize(n, rank);
  result.singular_values.resize(rank);
  result.right_vectors.resize(p, rank);

  Matrix deflated = a;
  const std::uint64_t redraw_seed =
      seeded_starts ? mix_seed(seed, 0x5eedULL) : PowerMethodOptions::kFitRedrawSeed;

  for (Index i = 0; i < rank; ++i) {
    Vector start = seeded_starts ? unit_vector(n, mix_seed(seed, static_cast<std::uint64_t>(i)))
                                 : ones_start(n);
    PowerOutcome out = power_iterate(deflated, start, tol, max_iter, redraw_seed, scale, i);
    if (!out.converged) {
      const bool negligible = out.triplet.sigma <= kNegligibleSigmaFactor * scale;
      if (!(accept_negligible && negligible)) {
        throw NonConvergenceError(
            "component " + std::to_string(i) + " did not converge in " +
                std::to_string(max_iter) + " iterations",
            out.triplet, i);
      }
    }
    SingularTriplet t = out.triplet;

    if (reorthogonalize && i > 0) {
      // Deflation leaves a residue of every previously extracted component;
      // project it out and refresh sigma with the Rayleigh quotient.
      Vector u = t.left - result.left_vectors.leftCols(i) *
                              (result.left_vectors.leftCols(i).transpose() * t.left);
      Vector v = t.right - result.right_vectors.leftCols(i) *
                               (result.right_vectors.leftCols(i).transpose() * t.right);
      const double un = u.norm();
      const double vn = v.norm();
      if (un > 0.0 && vn > 0.0) {
        u /= un;
        v /= vn;
        double sigma = u.dot(a * v);
        if (sigma < 0.0) {
          sigma = -sigma;
          u = -u;
        }
        t = {u, sigma, v};
        fix_sign(t);
      }
      if (t.sigma > result.singular_values[i - 1]) t.sigma = result.singular_values[i - 1];
    }

    result.left_vectors.col(i) = t.left;
    result.singular_values[i] = t.sigma;
    result.right_vectors.col(i) = t.right;
    if (i + 1 < rank) deflated.noalias() -= t.sigma * t.left * t.right.transpose();
  }
  return result;
}

}  // namespace

SvdResult truncated_svd(const Matrix& a, Index rank, double tol, Index max_iter,
                        std::uint64_t seed) {
  return svd_by_deflation(a, rank, tol, max_iter, /*seeded_starts=*/true, seed,
                          /*accept_negligible=*/false, /*reorthogonalize=*/true);
}

SvdResult fit_svd(const Matrix& a, Index rank, double tol, Index max_iter) {
  return svd_by_deflation(a, rank, tol, max_iter, /*seeded_starts=*/false, 0,
                          /*accept_negligible=*/true, /*reorthogonalize=*/false);
}

Vector shrink_with_noise(const Vector& leading_eigenvalues, double noise_variance) {
  Vector out(leading_eigenvalues.size());
  for (Index i = 0; i < leading_eigenvalues.size(); ++i) {
    const double lambda = leading_eigenvalues[i];
    if (lambda <= 0.0) {
      out[i] = 0.0;
      continue;
    }
    out[i] = std::max(0.0, (lambda - noise_variance) / std::sqrt(lambda));
  }
  return out;
}

Vector shrink_spectrum(const Vector& eigenvalues, Index rank, Index effective_rank) {
  if (rank > effective_rank) {
    throw Error(ErrorCode::InvalidRank, "rank exceeds the effective rank");
  }
  if (rank < 0 || rank > eigenvalues.size()) {
    throw Error(ErrorCode::InvalidRank, "rank exceeds the number of eigenvalues");
  }
  for (Index i = 1; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] > eigenvalues[i - 1] + 1e-12 * std::abs(eigenvalues[i - 1])) {
      throw Error(ErrorCode::InvalidConfig, "eigenvalues must be non-increasing");
    }
  }

  double noise = 0.0;
  if (rank < effective_rank) {
    double trailing = 0.0;
    for (Index s = rank; s < std::min<Index>(eigenvalues.size(), effective_rank); ++s) {
      trailing += std::max(0.0, eigenvalues[s]);
    }
    noise = trailing / static_cast<double>(effective_rank - rank);
  }
  return shrink_with_noise(eigenvalues.head(rank), noise);
}

}  // namespace mlsvd
