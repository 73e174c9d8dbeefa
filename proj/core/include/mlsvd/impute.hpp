#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mlsvd/multilevel.hpp"

namespace mlsvd {

/// Per-iteration view handed to the optional observer (tests use it to check
/// invariants while the algorithm runs). Pointers are valid only during the
/// callback; the fuzzy block is null for purely quantitative runs.
struct IterationSnapshot {
  Index iteration = 0;
  double objective = 0.0;  // observed-cell squared residual in fit coordinates
  const Matrix* quant = nullptr;
  const Matrix* fuzzy = nullptr;
  const std::vector<CategoricalBlock>* blocks = nullptr;
};

struct ImputationOptions {
  double tol = 1e-6;   // relative change of the imputed cells
  Index max_iter = 1000;
  bool regularize = true;
  std::uint64_t seed = 0;
  double svd_tol = 1e-9;
  Index svd_max_iter = 1000;
  std::function<void(const IterationSnapshot&)> observer;

  FitOptions fit_options() const { return {regularize, svd_tol, svd_max_iter}; }
};

/// Fitted membership degrees of one imputed categorical cell; the weights sum
/// to one and may lie outside [0, 1].
struct FuzzyMembership {
  Index row = 0;
  Index cat_column = 0;  // index into the categorical block
  Vector weights;
};

struct ImputationResult {
  MixedDataset completed;  // original mask kept, so imputed cells stay identifiable
  std::vector<FuzzyMembership> fuzzy_memberships;
  MultilevelModel model;  // final fit, in the coordinates of the method
  Index iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Iterative multilevel imputation of a purely quantitative dataset:
/// initialize missing cells at the observed column means, then alternate a
/// (regularized) multilevel fit with re-imputation of the missing cells until
/// the imputed values stabilize. Non-convergence is reported through the
/// `converged` flag, not an error.
ImputationResult impute_mlpca(const MixedDataset& data, Index rank_between, Index rank_within,
                              const ImputationOptions& options = {});

/// Counterpart for purely categorical data on the disjunctive table, with
/// column margins refreshed from the completed fuzzy table at every
/// iteration. Imputed labels are the argmax memberships of the final fit.
ImputationResult impute_mlmca(const MixedDataset& data, Index rank_between, Index rank_within,
                              const ImputationOptions& options = {});

/// Mixed-data imputation in the FAMD coordinates; means, standard deviations
/// and column margins are refreshed from the completed table at every
/// iteration.
ImputationResult impute_mlfamd(const MixedDataset& data, Index rank_between, Index rank_within,
                               const ImputationOptions& options = {});

/// Dispatch on the column types: quantitative-only data to impute_mlpca,
/// categorical-only to impute_mlmca, mixed to impute_mlfamd.
ImputationResult impute_auto(const MixedDataset& data, Index rank_between, Index rank_within,
                             const ImputationOptions& options = {});

/// Mean / modal completion used both as the iteration start and as the
/// benchmark baseline. Throws Error(EmptyColumn) when a column has no
/// observed cell.
MixedDataset complete_by_mean_proportion(const MixedDataset& data);

struct CvCell {
  Index rank_between = 0;
  Index rank_within = 0;
  double mean_score = 0.0;
  std::vector<double> repeat_scores;
};

struct CrossValidationResult {
  Index rank_between = 0;
  Index rank_within = 0;
  std::vector<CvCell> table;  // grid order
};

/// Rank selection by repeated extra masking of observed cells: each repeat
/// hides `holdout_fraction` of the observed cells, every grid point imputes
/// them, and parts are scored against the hidden truth (MSE / misclassification,
/// each divided by the mean-imputation score of the same repeat). Scores within
/// 1e-9 count as ties and resolve to the smaller rank_between + rank_within,
/// then the smaller rank_between, then grid order.
CrossValidationResult cross_validate_ranks(const MixedDataset& data,
                                           const std::vector<std::pair<Index, Index>>& grid,
                                           double holdout_fraction, Index n_repeats,
                                           std::uint64_t seed,
                                           const ImputationOptions& options = {});

}  // namespace mlsvd
