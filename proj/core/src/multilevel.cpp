#include "mlsvd/multilevel.hpp"

#include <cmath>
#include <string>

namespace mlsvd {

Matrix group_means(const Matrix& x, const GroupStructure& groups) {
  const Index k_count = groups.group_count();
  Matrix sums = Matrix::Zero(k_count, x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    sums.row(groups.assignment[i]) += x.row(i);
  }
  for (Index k = 0; k < k_count; ++k) {
    sums.row(k) /= static_cast<double>(groups.group_sizes[k]);
  }
  return sums;
}

SplitResult between_within_split(const Matrix& x, const GroupStructure& groups) {
  if (x.rows() != groups.rows()) throw Error(ErrorCode::ShapeMismatch, "rows do not match groups");
  groups.validate();
  SplitResult out;
  out.offset = x.colwise().mean();
  const Matrix means = group_means(x, groups);
  out.between.resize(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    out.between.row(i) = means.row(groups.assignment[i]) - out.offset.transpose();
  }
  out.within = x - out.between;
  out.within.rowwise() -= out.offset.transpose();
  return out;
}

SumOfSquaresParts sum_of_squares_check(const Matrix& x, const GroupStructure& groups) {
  SplitResult split = between_within_split(x, groups);
  SumOfSquaresParts parts;
  parts.total = x.array().square().colwise().sum();
  parts.offset =
      static_cast<double>(x.rows()) * split.offset.array().square();
  parts.between = split.between.array().square().colwise().sum();
  parts.within = split.within.array().square().colwise().sum();
  return parts;
}

SvdResult fit_svd_or_zero(const Matrix& a, Index rank, double tol, Index max_iter) {
  if (rank == 0) {
    SvdResult empty;
    empty.left_vectors.resize(a.rows(), 0);
    empty.singular_values.resize(0);
    empty.right_vectors.resize(a.cols(), 0);
    return empty;
  }
  if (a.norm() == 0.0) {
    SvdResult zero;
    zero.left_vectors = Matrix::Identity(a.rows(), a.rows()).leftCols(rank);
    zero.singular_values = Vector::Zero(rank);
    zero.right_vectors = Matrix::Identity(a.cols(), a.cols()).leftCols(rank);
    return zero;
  }
  return fit_svd(a, rank, tol, max_iter);
}

double noise_from_frobenius(double frob2, const Vector& leading_eigenvalues, Index rank,
                            Index effective_rank) {
  if (rank >= effective_rank) return 0.0;
  const double trailing = std::max(0.0, frob2 - leading_eigenvalues.sum());
  return trailing / static_cast<double>(effective_rank - rank);
}

namespace {

struct PartFit {
  Matrix scores;    // shrunken when regularized
  Matrix loadings;
  Vector eigenvalues;
  double noise = 0.0;
};

PartFit fit_part(const Matrix& a, Index rank, Index effective_rank, const FitOptions& options) {
  PartFit part;
  SvdResult svd = fit_svd_or_zero(a, rank, options.svd_tol, options.svd_max_iter);
  part.loadings = svd.right_vectors;
  part.eigenvalues = svd.singular_values.array().square();
  Vector values = svd.singular_values;
  if (options.regularize) {
    part.noise = noise_from_frobenius(a.squaredNorm(), part.eigenvalues, rank, effective_rank);
    values = shrink_with_noise(part.eigenvalues, part.noise);
  }
  part.scores = svd.left_vectors * values.asDiagonal();
  return part;
}

}  // namespace

Matrix MultilevelModel::expanded_between_scores(const GroupStructure& groups) const {
  Matrix expanded(groups.rows(), between_scores.cols());
  for (Index i = 0; i < expanded.rows(); ++i) {
    expanded.row(i) = between_scores.row(groups.assignment[i]);
  }
  return expanded;
}

Matrix MultilevelModel::reconstruct(const GroupStructure& groups) const {
  Matrix y = Matrix::Zero(groups.rows(), offset.size());
  y.rowwise() += offset.transpose();
  if (rank_between() > 0) {
    y.noalias() += expanded_between_scores(groups) * between_loadings.transpose();
  }
  if (rank_within() > 0) {
    y.noalias() += within_scores * within_loadings.transpose();
  }
  return y;
}

MultilevelModel fit_multilevel_matrix(const Matrix& x, const GroupStructure& groups,
                                      Index rank_between, Index rank_within,
                                      const FitOptions& options) {
  require_finite(x, "fit input");
  const Index n = x.rows();
  const Index p = x.cols();
  const Index k_count = groups.group_count();
  const Index effective_between = std::min<Index>(k_count - 1, p);
  const Index effective_within = std::min<Index>(n - k_count, p);
  if (rank_between < 0 || rank_between > effective_between) {
    throw Error(ErrorCode::RankTooLarge,
                "between rank " + std::to_string(rank_between) + " exceeds min(K-1, p) = " +
                    std::to_string(effective_between));
  }
  if (rank_within < 0 || rank_within > effective_within) {
    throw Error(ErrorCode::RankTooLarge,
                "within rank " + std::to_string(rank_within) + " exceeds min(n-K, p) = " +
                    std::to_string(effective_within));
  }

  MultilevelModel model;
  model.offset = x.colwise().mean();
  const Matrix means = group_means(x, groups);

  // Compact between fit: the SVD of the sqrt(n_k)-weighted K x p matrix of
  // centered group means has the same singular values and right vectors as
  // the replicated n x p between matrix.
  Matrix weighted = means;
  weighted.rowwise() -= model.offset.transpose();
  Vector scale(k_count);
  for (Index k = 0; k < k_count; ++k) {
    scale[k] = std::sqrt(static_cast<double>(groups.group_sizes[k]));
    weighted.row(k) *= scale[k];
  }
  PartFit between = fit_part(weighted, rank_between, effective_between, options);
  model.between_loadings = between.loadings;
  model.between_eigenvalues = between.eigenvalues;
  model.between_noise = between.noise;
  model.between_scores = between.scores;
  for (Index k = 0; k < k_count; ++k) model.between_scores.row(k) /= scale[k];

  Matrix within(n, p);
  for (Index i = 0; i < n; ++i) {
    within.row(i) = x.row(i) - means.row(groups.assignment[i]);
  }
  PartFit within_fit = fit_part(within, rank_within, effective_within, options);
  model.within_loadings = within_fit.loadings;
  model.within_eigenvalues = within_fit.eigenvalues;
  model.within_noise = within_fit.noise;
  model.within_scores = within_fit.scores;
  return model;
}

MultilevelModel fit_mlpca(const Matrix& y, const GroupStructure& groups, Index rank_between,
                          Index rank_within, const FitOptions& options) {
  groups.validate();
  if (y.rows() != groups.rows()) throw Error(ErrorCode::ShapeMismatch, "rows do not match groups");
  return fit_multilevel_matrix(y, groups, rank_between, rank_within, options);
}

Matrix MlmcaFit::reconstruct(const GroupStructure& groups) const {
  Matrix z = model.reconstruct(groups);
  for (Index c = 0; c < z.cols(); ++c) z.col(c) *= std::sqrt(proportions[c]);
  return z;
}

MlmcaFit fit_mlmca(const DisjunctiveTable& table, const GroupStructure& groups,
                   Index rank_between, Index rank_within, const FitOptions& options) {
  MlmcaFit fit;
  fit.proportions = table.proportions;
  fit.blocks = table.blocks;
  for (Index c = 0; c < fit.proportions.size(); ++c) {
    if (!(fit.proportions[c] > 0.0)) {
      throw Error(ErrorCode::SingularWeight,
                  "category proportion " + std::to_string(c) + " is not positive");
    }
  }
  Matrix weighted = table.values;
  for (Index c = 0; c < weighted.cols(); ++c) weighted.col(c) /= std::sqrt(fit.proportions[c]);
  fit.model = fit_multilevel_matrix(weighted, groups, rank_between, rank_within, options);
  return fit;
}

ColumnStatistics compute_statistics(const Matrix& quant, const Matrix& fuzzy,
                                    const GroupStructure& groups) {
  ColumnStatistics stats;
  stats.group_sizes = groups.group_sizes;
  const double n = static_cast<double>(quant.rows());
  stats.means = quant.colwise().mean();
  stats.std_devs.resize(quant.cols());
  for (Index j = 0; j < quant.cols(); ++j) {
    stats.std_devs[j] = std::sqrt((quant.col(j).array() - stats.means[j]).square().sum() / n);
  }
  stats.proportions = fuzzy.cols() > 0 ? Vector(fuzzy.colwise().mean()) : Vector(0);
  return stats;
}

FamdInverse MlfamdFit::reconstruct(const GroupStructure& groups) const {
  return famd_inverse(model.reconstruct(groups), stats, quant_count, cat_variable_count);
}

MlfamdFit fit_mlfamd(const MixedDataset& data, Index rank_between, Index rank_within,
                     const FitOptions& options) {
  data.validate();
  if (!data.is_complete()) {
    throw Error(ErrorCode::InvalidConfig, "fit_mlfamd requires complete data");
  }
  MlfamdFit fit;
  fit.quant_count = data.quant_count();
  fit.cat_variable_count = data.cat_count();

  Matrix fuzzy(data.rows(), 0);
  if (data.cat_count() > 0) {
    MaskMatrix all = MaskMatrix::Constant(data.rows(), data.cat_count(), 1);
    DisjunctiveCoding coding = disjunctive_code(data.categorical, all, data.category_counts());
    fit.blocks = coding.table.blocks;
    fuzzy = coding.table.values;
  }
  fit.stats = compute_statistics(data.quant, fuzzy, data.groups);
  for (Index c = 0; c < fit.stats.proportions.size(); ++c) {
    if (!(fit.stats.proportions[c] > 0.0)) {
      throw Error(ErrorCode::EmptyCategory, "category " + std::to_string(c) + " never observed");
    }
  }
  const Matrix w = famd_transform(data.quant, fuzzy, fit.stats, data.cat_count());
  fit.model = fit_multilevel_matrix(w, data.groups, rank_between, rank_within, options);
  return fit;
}

}  // namespace mlsvd
