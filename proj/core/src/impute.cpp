#include "mlsvd/impute.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "mlsvd/rng.hpp"

namespace mlsvd {

namespace {

constexpr double kConvergenceFloor = 1e-12;

struct Cell {
  Index row;
  Index col;
};

Vector observed_column_means(const MixedDataset& data) {
  Vector means(data.quant_count());
  for (Index j = 0; j < data.quant_count(); ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < data.rows(); ++i) {
      if (data.is_observed_quant(i, j)) {
        sum += data.quant(i, j);
        ++count;
      }
    }
    if (count == 0) {
      throw Error(ErrorCode::EmptyColumn,
                  "quantitative column " + std::to_string(j) + " has no observed value");
    }
    means[j] = sum / static_cast<double>(count);
  }
  return means;
}

MaskMatrix categorical_mask(const MixedDataset& data) {
  MaskMatrix m(data.rows(), data.cat_count());
  for (Index c = 0; c < data.cat_count(); ++c) {
    for (Index i = 0; i < data.rows(); ++i) m(i, c) = data.is_observed_cat(i, c) ? 1 : 0;
  }
  return m;
}

double relative_change(const Vector& old_values, const Vector& new_values) {
  if (old_values.size() == 0) return 0.0;
  return (new_values - old_values).norm() / std::max(old_values.norm(), kConvergenceFloor);
}

Vector gather(const Matrix& m, const std::vector<Cell>& cells) {
  Vector out(static_cast<Index>(cells.size()));
  for (size_t i = 0; i < cells.size(); ++i) {
    out[static_cast<Index>(i)] = m(cells[i].row, cells[i].col);
  }
  return out;
}

std::vector<Cell> missing_quant_cells(const MixedDataset& data) {
  std::vector<Cell> cells;
  for (Index j = 0; j < data.quant_count(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.is_observed_quant(i, j)) cells.push_back({i, j});
    }
  }
  return cells;
}

/// Expanded (row, table-column) cells of the missing categorical entries.
std::vector<Cell> missing_fuzzy_cells(const MixedDataset& data,
                                      const std::vector<CategoricalBlock>& blocks) {
  std::vector<Cell> cells;
  for (Index c = 0; c < data.cat_count(); ++c) {
    const CategoricalBlock& block = blocks[c];
    for (Index i = 0; i < data.rows(); ++i) {
      if (data.is_observed_cat(i, c)) continue;
      for (Index b = 0; b < block.size; ++b) cells.push_back({i, block.begin + b});
    }
  }
  return cells;
}

void finalize_categorical(ImputationResult& result, const Matrix& fuzzy,
                          const std::vector<CategoricalBlock>& blocks) {
  MixedDataset& completed = result.completed;
  for (Index c = 0; c < completed.cat_count(); ++c) {
    const CategoricalBlock& block = blocks[c];
    for (Index i = 0; i < completed.rows(); ++i) {
      if (completed.is_observed_cat(i, c)) continue;
      Vector weights = fuzzy.block(i, block.begin, 1, block.size).transpose();
      completed.categorical(i, c) = static_cast<int>(hard_assign(weights));
      result.fuzzy_memberships.push_back({i, c, std::move(weights)});
    }
  }
}

double observed_residual(const Matrix& fitted, const Matrix& values, const MaskMatrix& mask) {
  double total = 0.0;
  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) {
      if (!mask(i, j)) continue;
      const double r = values(i, j) - fitted(i, j);
      total += r * r;
    }
  }
  return total;
}

}  // namespace

MixedDataset complete_by_mean_proportion(const MixedDataset& data) {
  MixedDataset out = data;
  if (data.quant_count() > 0) {
    const Vector means = observed_column_means(data);
    for (Index j = 0; j < data.quant_count(); ++j) {
      for (Index i = 0; i < data.rows(); ++i) {
        if (!data.is_observed_quant(i, j)) out.quant(i, j) = means[j];
      }
    }
  }
  if (data.cat_count() > 0) {
    const DisjunctiveCoding coding =
        disjunctive_code(data.categorical, categorical_mask(data), data.category_counts());
    for (Index c = 0; c < data.cat_count(); ++c) {
      const CategoricalBlock& block = coding.table.blocks[c];
      const Index modal = hard_assign(coding.table.proportions.segment(block.begin, block.size));
      for (Index i = 0; i < data.rows(); ++i) {
        if (!data.is_observed_cat(i, c)) out.categorical(i, c) = static_cast<int>(modal);
      }
    }
  }
  return out;
}

ImputationResult impute_mlpca(const MixedDataset& data, Index rank_between, Index rank_within,
                              const ImputationOptions& options) {
  data.validate();
  if (data.cat_count() > 0) {
    throw Error(ErrorCode::InvalidConfig, "impute_mlpca expects quantitative columns only");
  }
  if (data.quant_count() == 0) throw Error(ErrorCode::InvalidConfig, "dataset has no columns");

  ImputationResult result;
  result.completed = data;
  Matrix& y = result.completed.quant;

  const std::vector<Cell> missing = missing_quant_cells(data);
  const Vector init = observed_column_means(data);
  for (const Cell& cell : missing) y(cell.row, cell.col) = init[cell.col];

  MaskMatrix qmask(data.rows(), data.quant_count());
  for (Index j = 0; j < data.quant_count(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) qmask(i, j) = data.is_observed_quant(i, j) ? 1 : 0;
  }

  Vector old_values = gather(y, missing);
  for (Index iter = 1; iter <= options.max_iter; ++iter) {
    result.model = fit_multilevel_matrix(y, data.groups, rank_between, rank_within,
                                         options.fit_options());
    const Matrix fitted = result.model.reconstruct(data.groups);
    result.objective_trace.push_back(observed_residual(fitted, y, qmask));

    Vector new_values(old_values.size());
    for (size_t m = 0; m < missing.size(); ++m) {
      new_values[static_cast<Index>(m)] = fitted(missing[m].row, missing[m].col);
      y(missing[m].row, missing[m].col) = new_values[static_cast<Index>(m)];
    }
    if (options.observer) {
      options.observer({iter, result.objective_trace.back(), &y, nullptr, nullptr});
    }
    result.iterations = iter;
    const double rel = relative_change(old_values, new_values);
    old_values = std::move(new_values);
    if (rel < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

ImputationResult impute_mlmca(const MixedDataset& data, Index rank_between, Index rank_within,
                              const ImputationOptions& options) {
  data.validate();
  if (data.quant_count() > 0) {
    throw Error(ErrorCode::InvalidConfig, "impute_mlmca expects categorical columns only");
  }
  if (data.cat_count() == 0) throw Error(ErrorCode::InvalidConfig, "dataset has no columns");

  DisjunctiveCoding coding =
      disjunctive_code(data.categorical, categorical_mask(data), data.category_counts());
  Matrix fuzzy = coding.table.values;
  const std::vector<CategoricalBlock>& blocks = coding.table.blocks;

  const std::vector<Cell> missing = missing_fuzzy_cells(data, blocks);
  for (const Cell& cell : missing) {
    fuzzy(cell.row, cell.col) = coding.table.proportions[cell.col];
  }

  ImputationResult result;
  result.completed = data;

  Vector old_values = gather(fuzzy, missing);
  for (Index iter = 1; iter <= options.max_iter; ++iter) {
    DisjunctiveTable table;
    table.values = fuzzy;
    table.blocks = blocks;
    table.proportions = fuzzy.colwise().mean();
    table.hard = missing.empty();
    const MlmcaFit fit =
        fit_mlmca(table, data.groups, rank_between, rank_within, options.fit_options());
    const Matrix fitted = fit.reconstruct(data.groups);
    result.model = fit.model;

    // Observed-cell residual in the margin-weighted fit coordinates.
    double objective = 0.0;
    for (Index c = 0; c < fuzzy.cols(); ++c) {
      const double w = 1.0 / std::sqrt(table.proportions[c]);
      for (Index i = 0; i < fuzzy.rows(); ++i) {
        if (!coding.expanded_mask(i, c)) continue;
        const double r = (fuzzy(i, c) - fitted(i, c)) * w;
        objective += r * r;
      }
    }
    result.objective_trace.push_back(objective);

    Vector new_values(old_values.size());
    for (size_t m = 0; m < missing.size(); ++m) {
      new_values[static_cast<Index>(m)] = fitted(missing[m].row, missing[m].col);
      fuzzy(missing[m].row, missing[m].col) = new_values[static_cast<Index>(m)];
    }
    if (options.observer) {
      options.observer({iter, objective, nullptr, &fuzzy, &blocks});
    }
    result.iterations = iter;
    const double rel = relative_change(old_values, new_values);
    old_values = std::move(new_values);
    if (rel < options.tol) {
      result.converged = true;
      break;
    }
  }

  finalize_categorical(result, fuzzy, blocks);
  return result;
}

ImputationResult impute_mlfamd(const MixedDataset& data, Index rank_between, Index rank_within,
                               const ImputationOptions& options) {
  data.validate();
  if (data.feature_count() == 0) throw Error(ErrorCode::InvalidConfig, "dataset has no columns");
  if (data.quant_count() == 0) return impute_mlmca(data, rank_between, rank_within, options);

  const Index p_q = data.quant_count();
  const Index p_c = data.cat_count();

  ImputationResult result;
  result.completed = data;
  Matrix& y = result.completed.quant;

  const std::vector<Cell> missing_q = missing_quant_cells(data);
  const Vector init = observed_column_means(data);
  for (const Cell& cell : missing_q) y(cell.row, cell.col) = init[cell.col];

  MaskMatrix qmask(data.rows(), p_q);
  for (Index j = 0; j < p_q; ++j) {
    for (Index i = 0; i < data.rows(); ++i) qmask(i, j) = data.is_observed_quant(i, j) ? 1 : 0;
  }

  Matrix fuzzy(data.rows(), 0);
  std::vector<CategoricalBlock> blocks;
  MaskMatrix expanded_mask(data.rows(), 0);
  std::vector<Cell> missing_c;
  if (p_c > 0) {
    DisjunctiveCoding coding =
        disjunctive_code(data.categorical, categorical_mask(data), data.category_counts());
    fuzzy = coding.table.values;
    blocks = coding.table.blocks;
    expanded_mask = coding.expanded_mask;
    missing_c = missing_fuzzy_cells(data, blocks);
    for (const Cell& cell : missing_c) fuzzy(cell.row, cell.col) = coding.table.proportions[cell.col];
  }

  const Index total_missing = static_cast<Index>(missing_q.size() + missing_c.size());
  Vector old_values(total_missing);
  for (size_t m = 0; m < missing_q.size(); ++m) {
    old_values[static_cast<Index>(m)] = y(missing_q[m].row, missing_q[m].col);
  }
  for (size_t m = 0; m < missing_c.size(); ++m) {
    old_values[static_cast<Index>(missing_q.size() + m)] = fuzzy(missing_c[m].row, missing_c[m].col);
  }

  for (Index iter = 1; iter <= options.max_iter; ++iter) {
    ColumnStatistics stats = compute_statistics(y, fuzzy, data.groups);
    for (Index j = 0; j < p_q; ++j) {
      if (!(stats.std_devs[j] > 0.0)) {
        throw Error(ErrorCode::ZeroVariance, "quantitative column " + std::to_string(j) +
                                                 " became constant at iteration " +
                                                 std::to_string(iter));
      }
    }
    for (Index c = 0; c < stats.proportions.size(); ++c) {
      if (!(stats.proportions[c] > 0.0)) {
        throw Error(ErrorCode::SingularWeight, "category margin " + std::to_string(c) +
                                                   " vanished at iteration " +
                                                   std::to_string(iter));
      }
    }

    const Matrix w = famd_transform(y, fuzzy, stats, p_c);
    result.model =
        fit_multilevel_matrix(w, data.groups, rank_between, rank_within, options.fit_options());
    const Matrix fitted_w = result.model.reconstruct(data.groups);

    double objective = observed_residual(fitted_w.leftCols(p_q), w.leftCols(p_q), qmask);
    if (p_c > 0) {
      objective += observed_residual(fitted_w.rightCols(fuzzy.cols()), w.rightCols(fuzzy.cols()),
                                     expanded_mask);
    }
    result.objective_trace.push_back(objective);

    const FamdInverse inverse = famd_inverse(fitted_w, stats, p_q, p_c);
    Vector new_values(total_missing);
    for (size_t m = 0; m < missing_q.size(); ++m) {
      const double value = inverse.quantitative(missing_q[m].row, missing_q[m].col);
      new_values[static_cast<Index>(m)] = value;
      y(missing_q[m].row, missing_q[m].col) = value;
    }
    for (size_t m = 0; m < missing_c.size(); ++m) {
      const double value = inverse.categorical(missing_c[m].row, missing_c[m].col);
      new_values[static_cast<Index>(missing_q.size() + m)] = value;
      fuzzy(missing_c[m].row, missing_c[m].col) = value;
    }
    if (options.observer) {
      options.observer({iter, objective, &y, p_c > 0 ? &fuzzy : nullptr,
                        p_c > 0 ? &blocks : nullptr});
    }
    result.iterations = iter;
    const double rel = relative_change(old_values, new_values);
    old_values = std::move(new_values);
    if (rel < options.tol) {
      result.converged = true;
      break;
    }
  }

  if (p_c > 0) finalize_categorical(result, fuzzy, blocks);
  return result;
}

ImputationResult impute_auto(const MixedDataset& data, Index rank_between, Index rank_within,
                             const ImputationOptions& options) {
  if (data.cat_count() == 0) return impute_mlpca(data, rank_between, rank_within, options);
  if (data.quant_count() == 0) return impute_mlmca(data, rank_between, rank_within, options);
  return impute_mlfamd(data, rank_between, rank_within, options);
}

namespace {

struct HoldoutScore {
  std::optional<double> mse;
  std::optional<double> misclassification;
};

HoldoutScore score_holdout(const MixedDataset& completed, const MixedDataset& truth,
                           const MaskMatrix& heldout) {
  HoldoutScore score;
  double quant_sum = 0.0;
  Index quant_cells = 0;
  for (Index q = 0; q < truth.quant_count(); ++q) {
    const Index f = truth.quant_features[q];
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!heldout(i, f)) continue;
      const double r = completed.quant(i, q) - truth.quant(i, q);
      quant_sum += r * r;
      ++quant_cells;
    }
  }
  if (quant_cells > 0) score.mse = quant_sum / static_cast<double>(quant_cells);

  Index wrong = 0;
  Index cat_cells = 0;
  for (Index c = 0; c < truth.cat_count(); ++c) {
    const Index f = truth.cat_features[c];
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!heldout(i, f)) continue;
      if (completed.categorical(i, c) != truth.categorical(i, c)) ++wrong;
      ++cat_cells;
    }
  }
  if (cat_cells > 0) {
    score.misclassification = static_cast<double>(wrong) / static_cast<double>(cat_cells);
  }
  return score;
}

double standardized_score(const HoldoutScore& method, const HoldoutScore& baseline) {
  double total = 0.0;
  if (method.mse) total += *method.mse / std::max(*baseline.mse, kConvergenceFloor);
  if (method.misclassification) {
    total += *method.misclassification /
             std::max(*baseline.misclassification, kConvergenceFloor);
  }
  return total;
}

}  // namespace

CrossValidationResult cross_validate_ranks(const MixedDataset& data,
                                           const std::vector<std::pair<Index, Index>>& grid,
                                           double holdout_fraction, Index n_repeats,
                                           std::uint64_t seed,
                                           const ImputationOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidConfig, "empty rank grid");
  if (!(holdout_fraction > 0.0 && holdout_fraction <= 0.5)) {
    throw Error(ErrorCode::InvalidConfig, "holdout fraction must lie in (0, 0.5]");
  }
  if (n_repeats < 1) throw Error(ErrorCode::InvalidConfig, "n_repeats must be at least 1");

  CrossValidationResult result;
  result.table.resize(grid.size());
  for (size_t g = 0; g < grid.size(); ++g) {
    result.table[g].rank_between = grid[g].first;
    result.table[g].rank_within = grid[g].second;
  }

  for (Index r = 0; r < n_repeats; ++r) {
    const MixedDataset masked =
        apply_mcar_mask(data, holdout_fraction, mix_seed(seed, static_cast<std::uint64_t>(r)));
    MaskMatrix heldout(data.rows(), data.feature_count());
    for (Index j = 0; j < data.feature_count(); ++j) {
      for (Index i = 0; i < data.rows(); ++i) {
        heldout(i, j) = (data.mask(i, j) && !masked.mask(i, j)) ? 1 : 0;
      }
    }
    const HoldoutScore baseline =
        score_holdout(complete_by_mean_proportion(masked), data, heldout);
    for (size_t g = 0; g < grid.size(); ++g) {
      const ImputationResult imputed =
          impute_auto(masked, grid[g].first, grid[g].second, options);
      const HoldoutScore method = score_holdout(imputed.completed, data, heldout);
      result.table[g].repeat_scores.push_back(standardized_score(method, baseline));
    }
  }

  size_t best = 0;
  for (size_t g = 0; g < grid.size(); ++g) {
    CvCell& cell = result.table[g];
    double sum = 0.0;
    for (double s : cell.repeat_scores) sum += s;
    cell.mean_score = sum / static_cast<double>(cell.repeat_scores.size());
    if (g == 0) continue;
    const CvCell& incumbent = result.table[best];
    const double tie =
        1e-9 * std::max({1.0, std::abs(cell.mean_score), std::abs(incumbent.mean_score)});
    if (cell.mean_score < incumbent.mean_score - tie) {
      best = g;
    } else if (std::abs(cell.mean_score - incumbent.mean_score) <= tie) {
      const auto key = [](const CvCell& c) {
        return std::make_pair(c.rank_between + c.rank_within, c.rank_between);
      };
      if (key(cell) < key(incumbent)) best = g;
    }
  }
  result.rank_between = result.table[best].rank_between;
  result.rank_within = result.table[best].rank_within;
  return result;
}

}  // namespace mlsvd
