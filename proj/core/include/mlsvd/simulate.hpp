#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlsvd/impute.hpp"

namespace mlsvd {

/// Synthetic two-level model: offset plus low-rank between and within parts
/// with Gaussian noise; the last `cat_vars` generated columns are cut into
/// equal-probability categories.
struct SimulationConfig {
  Index groups = 5;              // K
  Index rows_per_group = 20;     // n_k
  Index quant_vars = 10;         // quantitative columns in the output
  Index cat_vars = 0;            // columns cut into categories
  Index rank_between = 2;        // true Q_b
  Index rank_within = 2;         // true Q_w
  double noise = 1.0;            // sigma
  double missing_fraction = 0.3;
  Index categories_per_variable = 3;
  std::uint64_t seed = 0;

  Index total_vars() const { return quant_vars + cat_vars; }
  Index total_rows() const { return groups * rows_per_group; }
  void validate() const;
};

struct GroundTruth {
  Vector offset;            // p
  Matrix between_scores;    // K x Q_b, weighted-centered
  Matrix between_loadings;  // p x Q_b, orthonormal
  Matrix within_scores;     // n x Q_w, centered per group
  Matrix within_loadings;   // p x Q_w, orthonormal
  Matrix noiseless;         // n x p, pre-noise pre-cut values
};

std::pair<MixedDataset, GroundTruth> generate_multilevel_data(const SimulationConfig& config);

/// Mean / modal-category baseline packaged as an imputation result; fitted
/// fuzzy values are the observed category proportions.
ImputationResult impute_mean_proportion(const MixedDataset& data);

/// Single-level iterative SVD imputation at the given rank (the multilevel
/// machinery with one group and no between part).
ImputationResult impute_global(const MixedDataset& data, Index rank,
                               const ImputationOptions& options = {});

/// impute_global applied to every group independently, results re-stacked.
/// A failing group rethrows with its index in the message.
ImputationResult impute_separate(const MixedDataset& data, Index rank,
                                 const ImputationOptions& options = {});

struct Score {
  std::optional<double> mse;                // masked quantitative cells, original units
  std::optional<double> misclassification;  // masked categorical cells
};

/// Scores over the cells flagged in mask_delta (cells that were observed in
/// the complete dataset and hidden by the harness). Throws
/// Error(EmptyEvaluationSet) when mask_delta flags no cell.
Score score(const MixedDataset& completed, const MixedDataset& truth,
            const MaskMatrix& mask_delta);

/// Per-group scores, indexed by group.
std::vector<Score> score_per_group(const MixedDataset& completed, const MixedDataset& truth,
                                   const MaskMatrix& mask_delta);

struct MethodSpec {
  std::string name;        // mlpca | mlmca | mlfamd | global | separate | mean
  Index rank_between = 2;  // multilevel methods
  Index rank_within = 2;
  Index rank = 4;          // global / separate
};

struct BenchmarkConfig {
  SimulationConfig simulation;
  std::vector<MethodSpec> methods;
  Index replications = 100;
  ImputationOptions options;
};

struct BenchmarkRow {
  std::string method;
  Index replication = 0;
  Score overall;
  std::vector<Score> per_group;
  double seconds = 0.0;
  std::string error;  // empty on success
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<BenchmarkRow> rows;
};

/// Seeded, reproducible comparison run; per-replication seeds derive from the
/// master seed by replication index, and method failures are recorded in the
/// row instead of aborting the run.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

void write_report_csv(const BenchmarkReport& report, std::ostream& out);
/// Medians, win counts against the mean baseline, and timing totals.
void write_report_summary_json(const BenchmarkReport& report, std::ostream& out);

BenchmarkConfig parse_benchmark_config(const std::string& json_text);

}  // namespace mlsvd
