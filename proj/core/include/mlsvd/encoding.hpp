#pragma once

#include <string>
#include <vector>

#include "mlsvd/linalg.hpp"

namespace mlsvd {

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntGrid = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

enum class ColumnKind { Quantitative, Categorical };
enum class ColumnRole { Feature, GroupId };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Quantitative;
  ColumnRole role = ColumnRole::Feature;
  std::vector<std::string> categories;  // categorical feature columns only, ordered
};

/// Column range [begin, begin + size) of one categorical variable inside a
/// disjunctive table.
struct CategoricalBlock {
  Index begin = 0;
  Index size = 0;
};

std::vector<CategoricalBlock> make_blocks(const std::vector<Index>& category_counts);

/// Indicator (or fuzzy) coding of categorical variables: one column per
/// category, per-variable blocks row-summing to one.
struct DisjunctiveTable {
  Matrix values;  // n x C
  std::vector<CategoricalBlock> blocks;
  Vector proportions;  // pi, length C
  bool hard = true;

  Index rows() const { return values.rows(); }
  Index total_categories() const { return values.cols(); }
  Index variable_count() const { return static_cast<Index>(blocks.size()); }
};

/// Pooled statistics entering the MCA/FAMD transforms. Group sizes are kept
/// so that distributed sites can reproduce the same global quantities.
struct ColumnStatistics {
  Vector means;      // length p_q
  Vector std_devs;   // length p_q, population denominator n
  Vector proportions;  // length C
  std::vector<Index> group_sizes;

  Index n() const {
    Index total = 0;
    for (Index size : group_sizes) total += size;
    return total;
  }
};

struct DisjunctiveCoding {
  DisjunctiveTable table;
  MaskMatrix expanded_mask;  // n x C; a missing cell masks its whole block row
};

/// Hard indicator coding of an n x p_c grid of category indices (-1 where the
/// mask is zero). Proportions are computed from observed rows only. Throws
/// Error(UnknownCategory) for an out-of-range observed index and
/// Error(EmptyCategory) when a declared category is never observed.
DisjunctiveCoding disjunctive_code(const IntGrid& categories, const MaskMatrix& mask,
                                   const std::vector<Index>& category_counts);

/// A = (1 / (n p)) (Z - 1 pi^T) D_pi^{-1/2}. `n_rows` is the global row count
/// (equal to z.rows() in the centralized case; the pooled count when a site
/// transforms its local slice). Throws Error(SingularWeight) when some
/// pi_c <= 0.
Matrix mca_transform(const Matrix& z, const Vector& pi, Index n_rows, Index variable_count);
Matrix mca_transform(const DisjunctiveTable& table, Index variable_count);

/// Exact inverse: Z = n p A D_pi^{1/2} + 1 pi^T.
Matrix mca_inverse(const Matrix& a, const Vector& pi, Index n_rows, Index variable_count);

/// W = ((Y_q - 1 m^T) Sigma^{-1}, (1 / (n p_c)) (Z - 1 pi^T) D_pi^{-1/2}).
/// Either block may be empty. Throws Error(ZeroVariance) when a standard
/// deviation is <= 0.
Matrix famd_transform(const Matrix& y_q, const Matrix& z, const ColumnStatistics& stats,
                      Index cat_variable_count);

struct FamdInverse {
  Matrix quantitative;
  Matrix categorical;  // fuzzy disjunctive values
};

FamdInverse famd_inverse(const Matrix& w, const ColumnStatistics& stats, Index quant_count,
                         Index cat_variable_count);

/// Index of the maximal membership in a fuzzy block row; ties break to the
/// lowest category index.
Index hard_assign(const Eigen::Ref<const Vector>& block_row);

/// Sum of squared correlations with the quantitative columns plus squared
/// correlation ratios with the categorical columns. Complete data only.
/// Throws Error(ConstantComponent) when the component has zero variance.
double link_criterion(const Vector& component, const Matrix& y_q, const IntGrid& categories,
                      const std::vector<Index>& category_counts);

}  // namespace mlsvd
