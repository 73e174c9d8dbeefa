#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlsvd/encoding.hpp"

namespace mlsvd {

/// Row-to-group assignment; groups are indexed in order of first appearance.
struct GroupStructure {
  std::vector<int> assignment;  // per row, 0-based group index
  std::vector<Index> group_sizes;
  std::vector<std::string> labels;

  Index rows() const { return static_cast<Index>(assignment.size()); }
  Index group_count() const { return static_cast<Index>(group_sizes.size()); }

  static GroupStructure from_labels(const std::vector<std::string>& row_labels);
  /// K contiguous groups of the given sizes, labeled g0, g1, ...
  static GroupStructure contiguous(const std::vector<Index>& sizes);

  void validate() const;  // every group nonempty, assignments in range
};

struct DatasetSchema {
  std::vector<ColumnSchema> columns;  // file order, includes the group column

  Index group_column() const;       // index into columns
  std::vector<Index> feature_columns() const;  // schema indices, file order
  void validate() const;

  bool operator==(const DatasetSchema&) const = default;
};

/// Typed data grid with an observation mask. Quantitative values live in
/// `quant` (missing cells hold 0 and are identified by the mask), categorical
/// values in `categorical` as 0-based indices (-1 where missing). `mask` has
/// one column per feature column, in schema order.
struct MixedDataset {
  DatasetSchema schema;
  GroupStructure groups;
  Matrix quant;        // n x p_q
  IntGrid categorical; // n x p_c
  MaskMatrix mask;     // n x (p_q + p_c), 1 = observed

  // feature index (mask column) of each quantitative / categorical column
  std::vector<Index> quant_features;
  std::vector<Index> cat_features;

  Index rows() const { return mask.rows(); }
  Index feature_count() const { return mask.cols(); }
  Index quant_count() const { return quant.cols(); }
  Index cat_count() const { return categorical.cols(); }

  std::vector<Index> category_counts() const;
  bool is_complete() const;
  bool is_observed_quant(Index row, Index q) const { return mask(row, quant_features[q]) != 0; }
  bool is_observed_cat(Index row, Index c) const { return mask(row, cat_features[c]) != 0; }

  void validate() const;

  /// Dataset restricted to the rows of one group (single-group structure).
  MixedDataset group_slice(int group) const;
};

/// Independently masks each currently observed cell with the given
/// probability, redrawing (bounded retries) whenever a column or a group
/// would lose its last observed cell. Throws Error(MaskInfeasible) once the
/// retry budget is exhausted.
MixedDataset apply_mcar_mask(const MixedDataset& data, double fraction, std::uint64_t seed,
                             int max_retries = 100);

}  // namespace mlsvd
