#pragma once

#include "mlsvd/dataset.hpp"

namespace mlsvd {

struct SplitResult {
  Vector offset;   // m, column means
  Matrix between;  // group column means minus m, replicated per row
  Matrix within;   // x - 1 m^T - between
};

/// Exact identity x = 1 offset^T + between + within.
SplitResult between_within_split(const Matrix& x, const GroupStructure& groups);

/// K x p matrix of group column means. Rows are accumulated in global row
/// order so that a site holding one group reproduces the same value bitwise.
Matrix group_means(const Matrix& x, const GroupStructure& groups);

struct SumOfSquaresParts {
  Vector total;    // per column, sum over rows of x^2
  Vector offset;   // n m^2
  Vector between;  // sum_k n_k (mean_k - m)^2
  Vector within;   // residual sum of squares
};

SumOfSquaresParts sum_of_squares_check(const Matrix& x, const GroupStructure& groups);

struct FitOptions {
  bool regularize = true;
  double svd_tol = 1e-9;
  Index svd_max_iter = 1000;
};

/// Two-level low-rank model of a matrix: separate truncated SVDs of the
/// between matrix (compact K x p form, rows weighted by sqrt(n_k)) and the
/// within matrix. When regularized, the stored scores carry the shrunken
/// singular values; the eigenvalue fields keep the raw squared singular
/// values.
struct MultilevelModel {
  Vector offset;               // m in the coordinates of the fitted matrix
  Matrix between_scores;       // K x Q_b, row k = f_{b,k}
  Matrix between_loadings;     // p x Q_b, orthonormal columns
  Matrix within_scores;        // n x Q_w
  Matrix within_loadings;      // p x Q_w, orthonormal columns
  Vector between_eigenvalues;  // lambda, eigenvalues of the weighted between matrix
  Vector within_eigenvalues;   // nu
  double between_noise = 0.0;  // estimated noise variance entering the shrinkage
  double within_noise = 0.0;

  Index rank_between() const { return between_loadings.cols(); }
  Index rank_within() const { return within_loadings.cols(); }

  Matrix expanded_between_scores(const GroupStructure& groups) const;  // n x Q_b
  /// 1 m^T + F_b V_b^T + F_w V_w^T
  Matrix reconstruct(const GroupStructure& groups) const;
};

/// Least squares fit of the two-level model under the identifiability
/// constraints (weighted between scores and within scores sum to zero).
/// Requires rank_between <= min(K-1, p) and rank_within <= min(n-K, p);
/// throws Error(RankTooLarge) otherwise.
MultilevelModel fit_mlpca(const Matrix& y, const GroupStructure& groups, Index rank_between,
                          Index rank_within, const FitOptions& options = {});

/// Multilevel fit of a disjunctive table in the margin-weighted coordinates
/// Z D_pi^{-1/2}; table.proportions must be the column means of table.values.
struct MlmcaFit {
  MultilevelModel model;
  Vector proportions;
  std::vector<CategoricalBlock> blocks;

  /// Fuzzy reconstruction; per-variable block row sums equal one.
  Matrix reconstruct(const GroupStructure& groups) const;
};

MlmcaFit fit_mlmca(const DisjunctiveTable& table, const GroupStructure& groups,
                   Index rank_between, Index rank_within, const FitOptions& options = {});

/// Multilevel fit of a complete mixed dataset in the FAMD coordinates of
/// famd_transform, with pooled statistics computed from the data.
struct MlfamdFit {
  MultilevelModel model;
  ColumnStatistics stats;
  std::vector<CategoricalBlock> blocks;
  Index quant_count = 0;
  Index cat_variable_count = 0;

  FamdInverse reconstruct(const GroupStructure& groups) const;
};

MlfamdFit fit_mlfamd(const MixedDataset& data, Index rank_between, Index rank_within,
                     const FitOptions& options = {});

/// Population statistics (denominator n) of a completed table given as a
/// quantitative block plus a fuzzy disjunctive block.
ColumnStatistics compute_statistics(const Matrix& quant, const Matrix& fuzzy,
                                    const GroupStructure& groups);

/// Fit core shared by the three methods: the matrix is already in its final
/// coordinates.
MultilevelModel fit_multilevel_matrix(const Matrix& x, const GroupStructure& groups,
                                      Index rank_between, Index rank_within,
                                      const FitOptions& options);

/// fit_svd with the rank-0 and zero-matrix conventions used by the fits:
/// rank 0 yields empty factors, a zero matrix yields zero singular values
/// with canonical basis vectors.
SvdResult fit_svd_or_zero(const Matrix& a, Index rank, double tol, Index max_iter);

/// Noise variance from the trailing eigenvalue mass: the eigenvalues beyond
/// the leading ones sum to |X|_F^2 - sum(leading), and the matrix has at most
/// effective_rank nonzero eigenvalues.
double noise_from_frobenius(double frob2, const Vector& leading_eigenvalues, Index rank,
                            Index effective_rank);

}  // namespace mlsvd
