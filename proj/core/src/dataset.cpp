#include "mlsvd/dataset.hpp"

#include <map>
#include <string>

#include "mlsvd/rng.hpp"

namespace mlsvd {

GroupStructure GroupStructure::from_labels(const std::vector<std::string>& row_labels) {
  GroupStructure g;
  std::map<std::string, int> index;
  g.assignment.reserve(row_labels.size());
  for (const std::string& label : row_labels) {
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(g.labels.size()));
    if (inserted) {
      g.labels.push_back(label);
      g.group_sizes.push_back(0);
    }
    g.assignment.push_back(it->second);
    ++g.group_sizes[it->second];
  }
  return g;
}

GroupStructure GroupStructure::contiguous(const std::vector<Index>& sizes) {
  GroupStructure g;
  g.group_sizes = sizes;
  for (size_t k = 0; k < sizes.size(); ++k) {
    g.labels.push_back("g" + std::to_string(k));
    for (Index i = 0; i < sizes[k]; ++i) g.assignment.push_back(static_cast<int>(k));
  }
  return g;
}

void GroupStructure::validate() const {
  const int k_count = static_cast<int>(group_sizes.size());
  std::vector<Index> seen(group_sizes.size(), 0);
  for (int g : assignment) {
    if (g < 0 || g >= k_count) throw Error(ErrorCode::InvalidConfig, "group index out of range");
    ++seen[g];
  }
  for (size_t k = 0; k < group_sizes.size(); ++k) {
    if (group_sizes[k] < 1) {
      throw Error(ErrorCode::EmptyGroup, "group " + std::to_string(k) + " is empty");
    }
    if (seen[k] != group_sizes[k]) {
      throw Error(ErrorCode::InvalidConfig, "group sizes do not match the assignment");
    }
  }
}

Index DatasetSchema::group_column() const {
  Index found = -1;
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].role == ColumnRole::GroupId) {
      if (found >= 0) throw Error(ErrorCode::SchemaMismatch, "multiple group-id columns");
      found = static_cast<Index>(j);
    }
  }
  if (found < 0) throw Error(ErrorCode::SchemaMismatch, "schema declares no group-id column");
  return found;
}

std::vector<Index> DatasetSchema::feature_columns() const {
  std::vector<Index> out;
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].role == ColumnRole::Feature) out.push_back(static_cast<Index>(j));
  }
  return out;
}

void DatasetSchema::validate() const {
  group_column();
  for (const ColumnSchema& col : columns) {
    if (col.role == ColumnRole::Feature && col.kind == ColumnKind::Categorical &&
        col.categories.size() < 2) {
      throw Error(ErrorCode::SchemaMismatch,
                  "categorical column '" + col.name + "' needs at least two categories");
    }
  }
}

std::vector<Index> MixedDataset::category_counts() const {
  std::vector<Index> counts;
  for (Index f : cat_features) {
    const Index schema_index = schema.feature_columns()[f];
    counts.push_back(static_cast<Index>(schema.columns[schema_index].categories.size()));
  }
  return counts;
}

bool MixedDataset::is_complete() const {
  return (mask.array() != 0).all();
}

void MixedDataset::validate() const {
  schema.validate();
  groups.validate();
  const Index n = rows();
  if (groups.rows() != n || quant.rows() != n || categorical.rows() != n) {
    throw Error(ErrorCode::ShapeMismatch, "row counts disagree");
  }
  if (static_cast<Index>(quant_features.size()) != quant.cols() ||
      static_cast<Index>(cat_features.size()) != categorical.cols() ||
      quant.cols() + categorical.cols() != mask.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "feature maps do not match the mask");
  }
  const std::vector<Index> counts = category_counts();
  for (Index c = 0; c < categorical.cols(); ++c) {
    for (Index i = 0; i < n; ++i) {
      if (is_observed_cat(i, c)) {
        const int value = categorical(i, c);
        if (value < 0 || value >= counts[c]) {
          throw Error(ErrorCode::UnknownCategory, "categorical value out of range");
        }
      }
    }
  }
}

MixedDataset MixedDataset::group_slice(int group) const {
  MixedDataset out;
  out.schema = schema;
  out.quant_features = quant_features;
  out.cat_features = cat_features;
  std::vector<Index> rows_in_group;
  for (Index i = 0; i < rows(); ++i) {
    if (groups.assignment[i] == group) rows_in_group.push_back(i);
  }
  const Index m = static_cast<Index>(rows_in_group.size());
  out.quant.resize(m, quant.cols());
  out.categorical.resize(m, categorical.cols());
  out.mask.resize(m, mask.cols());
  for (Index r = 0; r < m; ++r) {
    out.quant.row(r) = quant.row(rows_in_group[r]);
    out.categorical.row(r) = categorical.row(rows_in_group[r]);
    out.mask.row(r) = mask.row(rows_in_group[r]);
  }
  out.groups.assignment.assign(m, 0);
  out.groups.group_sizes = {m};
  out.groups.labels = {groups.labels[group]};
  return out;
}

MixedDataset apply_mcar_mask(const MixedDataset& data, double fraction, std::uint64_t seed,
                             int max_retries) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "missing fraction must lie in [0, 1)");
  }
  if (fraction == 0.0) return data;

  const Index n = data.rows();
  const Index p = data.feature_count();
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt), 0x6d61736bULL));
    MaskMatrix mask = data.mask;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) {
        if (mask(i, j) && rng.uniform01() < fraction) mask(i, j) = 0;
      }
    }
    bool feasible = true;
    for (Index j = 0; j < p && feasible; ++j) {
      feasible = (mask.col(j).array() != 0).any();
    }
    if (feasible) {
      std::vector<char> group_has(data.groups.group_count(), 0);
      for (Index i = 0; i < n; ++i) {
        if ((mask.row(i).array() != 0).any()) group_has[data.groups.assignment[i]] = 1;
      }
      for (char h : group_has) feasible = feasible && h;
    }
    if (!feasible) continue;

    MixedDataset out = data;
    out.mask = mask;
    for (Index q = 0; q < out.quant_count(); ++q) {
      for (Index i = 0; i < n; ++i) {
        if (!out.is_observed_quant(i, q)) out.quant(i, q) = 0.0;
      }
    }
    for (Index c = 0; c < out.cat_count(); ++c) {
      for (Index i = 0; i < n; ++i) {
        if (!out.is_observed_cat(i, c)) out.categorical(i, c) = -1;
      }
    }
    return out;
  }
  throw Error(ErrorCode::MaskInfeasible,
              "could not draw a mask keeping every column and group observed");
}

}  // namespace mlsvd
