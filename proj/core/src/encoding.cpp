#include "mlsvd/encoding.hpp"

#include <cmath>
#include <string>

namespace mlsvd {

std::vector<CategoricalBlock> make_blocks(const std::vector<Index>& category_counts) {
  std::vector<CategoricalBlock> blocks;
  blocks.reserve(category_counts.size());
  Index offset = 0;
  for (Index count : category_counts) {
    blocks.push_back({offset, count});
    offset += count;
  }
  return blocks;
}

DisjunctiveCoding disjunctive_code(const IntGrid& categories, const MaskMatrix& mask,
                                   const std::vector<Index>& category_counts) {
  const Index n = categories.rows();
  const Index p = categories.cols();
  if (mask.rows() != n || mask.cols() != p) {
    throw Error(ErrorCode::ShapeMismatch, "mask shape does not match the categorical grid");
  }
  if (static_cast<Index>(category_counts.size()) != p) {
    throw Error(ErrorCode::ShapeMismatch, "category_counts length does not match columns");
  }

  DisjunctiveCoding out;
  out.table.blocks = make_blocks(category_counts);
  const Index total = out.table.blocks.empty()
                          ? 0
                          : out.table.blocks.back().begin + out.table.blocks.back().size;
  out.table.values = Matrix::Zero(n, total);
  out.table.proportions = Vector::Zero(total);
  out.table.hard = true;
  out.expanded_mask = MaskMatrix::Zero(n, total);

  for (Index j = 0; j < p; ++j) {
    const CategoricalBlock& block = out.table.blocks[j];
    Index observed = 0;
    for (Index i = 0; i < n; ++i) {
      if (!mask(i, j)) continue;
      const int c = categories(i, j);
      if (c < 0 || c >= block.size) {
        throw Error(ErrorCode::UnknownCategory,
                    "category index " + std::to_string(c) + " out of range in column " +
                        std::to_string(j));
      }
      out.table.values(i, block.begin + c) = 1.0;
      for (Index b = 0; b < block.size; ++b) out.expanded_mask(i, block.begin + b) = 1;
      out.table.proportions[block.begin + c] += 1.0;
      ++observed;
    }
    if (observed == 0) {
      throw Error(ErrorCode::EmptyColumn,
                  "categorical column " + std::to_string(j) + " has no observed value");
    }
    for (Index b = 0; b < block.size; ++b) {
      double& pi = out.table.proportions[block.begin + b];
      if (pi == 0.0) {
        throw Error(ErrorCode::EmptyCategory,
                    "category " + std::to_string(b) + " of column " + std::to_string(j) +
                        " never observed");
      }
      pi /= static_cast<double>(observed);
    }
  }
  return out;
}

Matrix mca_transform(const Matrix& z, const Vector& pi, Index n_rows, Index variable_count) {
  if (z.cols() != pi.size()) {
    throw Error(ErrorCode::ShapeMismatch, "proportions length does not match table width");
  }
  for (Index c = 0; c < pi.size(); ++c) {
    if (!(pi[c] > 0.0)) {
      throw Error(ErrorCode::SingularWeight,
                  "category proportion " + std::to_string(c) + " is not positive");
    }
  }
  const double factor = 1.0 / (static_cast<double>(n_rows) * static_cast<double>(variable_count));
  Matrix a = z;
  for (Index c = 0; c < a.cols(); ++c) {
    a.col(c) = factor * (a.col(c).array() - pi[c]) / std::sqrt(pi[c]);
  }
  return a;
}

Matrix mca_transform(const DisjunctiveTable& table, Index variable_count) {
  return mca_transform(table.values, table.proportions, table.rows(), variable_count);
}

Matrix mca_inverse(const Matrix& a, const Vector& pi, Index n_rows, Index variable_count) {
  if (a.cols() != pi.size()) {
    throw Error(ErrorCode::ShapeMismatch, "proportions length does not match table width");
  }
  const double factor = static_cast<double>(n_rows) * static_cast<double>(variable_count);
  Matrix z = a;
  for (Index c = 0; c < z.cols(); ++c) {
    z.col(c) = factor * z.col(c).array() * std::sqrt(pi[c]) + pi[c];
  }
  return z;
}

Matrix famd_transform(const Matrix& y_q, const Matrix& z, const ColumnStatistics& stats,
                      Index cat_variable_count) {
  const Index p_q = y_q.cols();
  if (stats.means.size() != p_q || stats.std_devs.size() != p_q) {
    throw Error(ErrorCode::ShapeMismatch, "statistics do not match the quantitative block");
  }
  const Index n_rows = stats.n();
  Matrix w(std::max(y_q.rows(), z.rows()), p_q + z.cols());
  for (Index j = 0; j < p_q; ++j) {
    if (!(stats.std_devs[j] > 0.0)) {
      throw Error(ErrorCode::ZeroVariance,
                  "quantitative column " + std::to_string(j) + " has zero variance");
    }
    w.col(j) = (y_q.col(j).array() - stats.means[j]) / stats.std_devs[j];
  }
  if (z.cols() > 0) {
    w.rightCols(z.cols()) = mca_transform(z, stats.proportions, n_rows, cat_variable_count);
  }
  return w;
}

FamdInverse famd_inverse(const Matrix& w, const ColumnStatistics& stats, Index quant_count,
                         Index cat_variable_count) {
  if (w.cols() != quant_count + stats.proportions.size()) {
    throw Error(ErrorCode::ShapeMismatch, "transformed width does not match the statistics");
  }
  FamdInverse out;
  out.quantitative.resize(w.rows(), quant_count);
  for (Index j = 0; j < quant_count; ++j) {
    out.quantitative.col(j) = w.col(j).array() * stats.std_devs[j] + stats.means[j];
  }
  const Index c = stats.proportions.size();
  if (c > 0) {
    out.categorical =
        mca_inverse(w.rightCols(c), stats.proportions, stats.n(), cat_variable_count);
  } else {
    out.categorical.resize(w.rows(), 0);
  }
  return out;
}

Index hard_assign(const Eigen::Ref<const Vector>& block_row) {
  if (block_row.size() == 0) throw Error(ErrorCode::ShapeMismatch, "empty block row");
  Index best = 0;
  for (Index i = 1; i < block_row.size(); ++i) {
    if (block_row[i] > block_row[best]) best = i;
  }
  return best;
}

double link_criterion(const Vector& component, const Matrix& y_q, const IntGrid& categories,
                      const std::vector<Index>& category_counts) {
  const Index n = component.size();
  if ((y_q.cols() > 0 && y_q.rows() != n) || (categories.cols() > 0 && categories.rows() != n)) {
    throw Error(ErrorCode::ShapeMismatch, "component length does not match the data");
  }
  const double mean_f = component.mean();
  const double ss_f = (component.array() - mean_f).square().sum();
  if (ss_f <= 0.0) {
    throw Error(ErrorCode::ConstantComponent, "link criterion of a constant component");
  }

  double total = 0.0;
  for (Index j = 0; j < y_q.cols(); ++j) {
    const double mean_y = y_q.col(j).mean();
    const double ss_y = (y_q.col(j).array() - mean_y).square().sum();
    if (ss_y <= 0.0) continue;  // constant column carries no association
    const double cov =
        ((component.array() - mean_f) * (y_q.col(j).array() - mean_y)).sum();
    total += (cov * cov) / (ss_f * ss_y);
  }
  for (Index j = 0; j < categories.cols(); ++j) {
    const Index c_count = category_counts[j];
    Vector sums = Vector::Zero(c_count);
    Vector counts = Vector::Zero(c_count);
    for (Index i = 0; i < n; ++i) {
      const int c = categories(i, j);
      if (c < 0 || c >= c_count) {
        throw Error(ErrorCode::InvalidConfig, "link criterion requires complete data");
      }
      sums[c] += component[i];
      counts[c] += 1.0;
    }
    double between = 0.0;
    for (Index c = 0; c < c_count; ++c) {
      if (counts[c] == 0.0) continue;
      const double group_mean = sums[c] / counts[c];
      between += counts[c] * (group_mean - mean_f) * (group_mean - mean_f);
    }
    total += between / ss_f;
  }
  return total;
}

}  // namespace mlsvd
