#include "mlsvd/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mlsvd/rng.hpp"

namespace mlsvd {

void SimulationConfig::validate() const {
  if (groups < 1 || rows_per_group < 1) {
    throw Error(ErrorCode::InvalidConfig, "need at least one group and one row per group");
  }
  if (total_vars() < 1) throw Error(ErrorCode::InvalidConfig, "need at least one variable");
  if (noise < 0.0) throw Error(ErrorCode::InvalidConfig, "noise must be nonnegative");
  if (missing_fraction < 0.0 || missing_fraction >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "missing fraction must lie in [0, 1)");
  }
  if (cat_vars > 0 && categories_per_variable < 2) {
    throw Error(ErrorCode::InvalidConfig, "categorical variables need at least two categories");
  }
  if (rank_between > std::min<Index>(groups - 1, total_vars())) {
    throw Error(ErrorCode::InvalidConfig, "rank_between exceeds min(K-1, p)");
  }
  if (rank_within > std::min<Index>(total_rows() - groups, total_vars())) {
    throw Error(ErrorCode::InvalidConfig, "rank_within exceeds min(n-K, p)");
  }
}

namespace {

Matrix orthonormal_columns(Index rows, Index cols, std::uint64_t seed) {
  if (cols == 0) return Matrix(rows, 0);
  const Matrix raw = gaussian_matrix(rows, cols, seed);
  Eigen::HouseholderQR<Matrix> qr(raw);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  return q;
}

std::vector<int> quantile_cut(const Vector& column, Index categories) {
  const Index n = column.size();
  std::vector<double> sorted(column.data(), column.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  for (Index k = 1; k < categories; ++k) {
    thresholds.push_back(sorted[static_cast<size_t>((k * n) / categories)]);
  }
  std::vector<int> cut(n);
  for (Index i = 0; i < n; ++i) {
    int c = 0;
    for (double t : thresholds) {
      if (column[i] >= t) ++c;
    }
    cut[i] = c;
  }
  return cut;
}

}  // namespace

std::pair<MixedDataset, GroundTruth> generate_multilevel_data(const SimulationConfig& config) {
  config.validate();
  const Index n = config.total_rows();
  const Index p = config.total_vars();
  const Index k_count = config.groups;

  GroundTruth truth;
  truth.offset = gaussian_vector(p, mix_seed(config.seed, 1));
  truth.between_loadings = orthonormal_columns(p, config.rank_between, mix_seed(config.seed, 2));
  truth.within_loadings = orthonormal_columns(p, config.rank_within, mix_seed(config.seed, 3));

  truth.between_scores = gaussian_matrix(k_count, config.rank_between, mix_seed(config.seed, 4));
  if (config.rank_between > 0) {
    Eigen::RowVectorXd weighted_mean = Eigen::RowVectorXd::Zero(config.rank_between);
    for (Index k = 0; k < k_count; ++k) {
      weighted_mean += static_cast<double>(config.rows_per_group) * truth.between_scores.row(k);
    }
    weighted_mean /= static_cast<double>(n);
    truth.between_scores.rowwise() -= weighted_mean;
  }

  truth.within_scores = gaussian_matrix(n, config.rank_within, mix_seed(config.seed, 5));
  if (config.rank_within > 0) {
    // Centered per group: the split then recovers the construction exactly.
    for (Index k = 0; k < k_count; ++k) {
      const Index begin = k * config.rows_per_group;
      auto block = truth.within_scores.middleRows(begin, config.rows_per_group);
      block.rowwise() -= Eigen::RowVectorXd(block.colwise().mean());
    }
  }

  truth.noiseless = Matrix::Zero(n, p);
  truth.noiseless.rowwise() += truth.offset.transpose();
  for (Index k = 0; k < k_count; ++k) {
    const Index begin = k * config.rows_per_group;
    truth.noiseless.middleRows(begin, config.rows_per_group).rowwise() +=
        Eigen::RowVectorXd(truth.between_scores.row(k) * truth.between_loadings.transpose());
  }
  truth.noiseless.noalias() += truth.within_scores * truth.within_loadings.transpose();

  Matrix values = truth.noiseless;
  if (config.noise > 0.0) {
    values += config.noise * gaussian_matrix(n, p, mix_seed(config.seed, 6));
  }

  MixedDataset data;
  data.schema.columns.push_back({"group", ColumnKind::Categorical, ColumnRole::GroupId, {}});
  for (Index j = 0; j < config.quant_vars; ++j) {
    data.schema.columns.push_back(
        {"q" + std::to_string(j + 1), ColumnKind::Quantitative, ColumnRole::Feature, {}});
  }
  std::vector<std::string> labels;
  for (Index c = 0; c < config.categories_per_variable; ++c) {
    labels.push_back(std::to_string(c + 1));
  }
  for (Index j = 0; j < config.cat_vars; ++j) {
    data.schema.columns.push_back(
        {"c" + std::to_string(j + 1), ColumnKind::Categorical, ColumnRole::Feature, labels});
  }

  data.groups = GroupStructure::contiguous(std::vector<Index>(k_count, config.rows_per_group));
  data.quant = values.leftCols(config.quant_vars);
  data.categorical.resize(n, config.cat_vars);
  for (Index j = 0; j < config.cat_vars; ++j) {
    const std::vector<int> cut =
        quantile_cut(values.col(config.quant_vars + j), config.categories_per_variable);
    for (Index i = 0; i < n; ++i) data.categorical(i, j) = cut[i];
  }
  data.mask = MaskMatrix::Constant(n, p, 1);
  for (Index j = 0; j < config.quant_vars; ++j) data.quant_features.push_back(j);
  for (Index j = 0; j < config.cat_vars; ++j) data.cat_features.push_back(config.quant_vars + j);
  data.validate();
  return {std::move(data), std::move(truth)};
}

ImputationResult impute_mean_proportion(const MixedDataset& data) {
  ImputationResult result;
  result.completed = complete_by_mean_proportion(data);
  result.iterations = 1;
  result.converged = true;
  if (data.cat_count() > 0) {
    const DisjunctiveCoding coding = [&] {
      MaskMatrix cmask(data.rows(), data.cat_count());
      for (Index c = 0; c < data.cat_count(); ++c) {
        for (Index i = 0; i < data.rows(); ++i) cmask(i, c) = data.is_observed_cat(i, c) ? 1 : 0;
      }
      return disjunctive_code(data.categorical, cmask, data.category_counts());
    }();
    for (Index c = 0; c < data.cat_count(); ++c) {
      const CategoricalBlock& block = coding.table.blocks[c];
      for (Index i = 0; i < data.rows(); ++i) {
        if (data.is_observed_cat(i, c)) continue;
        result.fuzzy_memberships.push_back(
            {i, c, coding.table.proportions.segment(block.begin, block.size)});
      }
    }
  }
  return result;
}

namespace {

MixedDataset with_single_group(const MixedDataset& data) {
  MixedDataset out = data;
  out.groups.assignment.assign(data.rows(), 0);
  out.groups.group_sizes = {data.rows()};
  out.groups.labels = {"all"};
  return out;
}

}  // namespace

ImputationResult impute_global(const MixedDataset& data, Index rank,
                               const ImputationOptions& options) {
  ImputationResult result = impute_auto(with_single_group(data), 0, rank, options);
  result.completed.groups = data.groups;
  return result;
}

ImputationResult impute_separate(const MixedDataset& data, Index rank,
                                 const ImputationOptions& options) {
  ImputationResult result;
  result.completed = data;
  result.converged = true;
  for (Index g = 0; g < data.groups.group_count(); ++g) {
    ImputationResult part;
    try {
      part = impute_global(data.group_slice(static_cast<int>(g)), rank, options);
    } catch (const Error& e) {
      throw Error(e.code(), "group " + std::to_string(g) + " (" + data.groups.labels[g] +
                                "): " + e.what());
    }
    Index local = 0;
    std::vector<Index> global_rows;
    for (Index i = 0; i < data.rows(); ++i) {
      if (data.groups.assignment[i] == static_cast<int>(g)) global_rows.push_back(i);
    }
    for (Index r = 0; r < static_cast<Index>(global_rows.size()); ++r) {
      const Index i = global_rows[r];
      for (Index q = 0; q < data.quant_count(); ++q) {
        result.completed.quant(i, q) = part.completed.quant(r, q);
      }
      for (Index c = 0; c < data.cat_count(); ++c) {
        result.completed.categorical(i, c) = part.completed.categorical(r, c);
      }
    }
    for (FuzzyMembership& membership : part.fuzzy_memberships) {
      membership.row = global_rows[membership.row];
      result.fuzzy_memberships.push_back(std::move(membership));
    }
    result.iterations = std::max(result.iterations, part.iterations);
    result.converged = result.converged && part.converged;
    (void)local;
  }
  return result;
}

namespace {

struct ScoreAccumulator {
  double quant_sum = 0.0;
  Index quant_cells = 0;
  Index wrong = 0;
  Index cat_cells = 0;

  Score finish() const {
    Score s;
    if (quant_cells > 0) s.mse = quant_sum / static_cast<double>(quant_cells);
    if (cat_cells > 0) s.misclassification = static_cast<double>(wrong) / static_cast<double>(cat_cells);
    return s;
  }
};

}  // namespace

Score score(const MixedDataset& completed, const MixedDataset& truth,
            const MaskMatrix& mask_delta) {
  ScoreAccumulator acc;
  for (Index q = 0; q < truth.quant_count(); ++q) {
    const Index f = truth.quant_features[q];
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!mask_delta(i, f)) continue;
      const double r = completed.quant(i, q) - truth.quant(i, q);
      acc.quant_sum += r * r;
      ++acc.quant_cells;
    }
  }
  for (Index c = 0; c < truth.cat_count(); ++c) {
    const Index f = truth.cat_features[c];
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!mask_delta(i, f)) continue;
      if (completed.categorical(i, c) != truth.categorical(i, c)) ++acc.wrong;
      ++acc.cat_cells;
    }
  }
  if (acc.quant_cells + acc.cat_cells == 0) {
    throw Error(ErrorCode::EmptyEvaluationSet, "mask delta flags no cell");
  }
  return acc.finish();
}

std::vector<Score> score_per_group(const MixedDataset& completed, const MixedDataset& truth,
                                   const MaskMatrix& mask_delta) {
  std::vector<ScoreAccumulator> acc(truth.groups.group_count());
  for (Index q = 0; q < truth.quant_count(); ++q) {
    const Index f = truth.quant_features[q];
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!mask_delta(i, f)) continue;
      ScoreAccumulator& a = acc[truth.groups.assignment[i]];
      const double r = completed.quant(i, q) - truth.quant(i, q);
      a.quant_sum += r * r;
      ++a.quant_cells;
    }
  }
  for (Index c = 0; c < truth.cat_count(); ++c) {
    const Index f = truth.cat_features[c];
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!mask_delta(i, f)) continue;
      ScoreAccumulator& a = acc[truth.groups.assignment[i]];
      if (completed.categorical(i, c) != truth.categorical(i, c)) ++a.wrong;
      ++a.cat_cells;
    }
  }
  std::vector<Score> out;
  out.reserve(acc.size());
  for (const ScoreAccumulator& a : acc) out.push_back(a.finish());
  return out;
}

namespace {

ImputationResult run_method(const MethodSpec& spec, const MixedDataset& masked,
                            const ImputationOptions& options) {
  if (spec.name == "mean") return impute_mean_proportion(masked);
  if (spec.name == "global") return impute_global(masked, spec.rank, options);
  if (spec.name == "separate") return impute_separate(masked, spec.rank, options);
  if (spec.name == "mlpca") {
    return impute_mlpca(masked, spec.rank_between, spec.rank_within, options);
  }
  if (spec.name == "mlmca") {
    return impute_mlmca(masked, spec.rank_between, spec.rank_within, options);
  }
  if (spec.name == "mlfamd") {
    return impute_mlfamd(masked, spec.rank_between, spec.rank_within, options);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + spec.name + "'");
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  config.simulation.validate();
  if (config.methods.empty()) throw Error(ErrorCode::InvalidConfig, "no methods configured");
  if (config.replications < 1) throw Error(ErrorCode::InvalidConfig, "replications must be >= 1");

  BenchmarkReport report;
  report.config = config;
  for (Index rep = 0; rep < config.replications; ++rep) {
    SimulationConfig sim = config.simulation;
    sim.seed = mix_seed(config.simulation.seed, static_cast<std::uint64_t>(rep), 1);
    const auto [truth, ground] = generate_multilevel_data(sim);
    const MixedDataset masked =
        apply_mcar_mask(truth, sim.missing_fraction,
                        mix_seed(config.simulation.seed, static_cast<std::uint64_t>(rep), 2));
    MaskMatrix delta(truth.rows(), truth.feature_count());
    for (Index j = 0; j < delta.cols(); ++j) {
      for (Index i = 0; i < delta.rows(); ++i) delta(i, j) = masked.mask(i, j) ? 0 : 1;
    }

    for (const MethodSpec& spec : config.methods) {
      BenchmarkRow row;
      row.method = spec.name;
      row.replication = rep;
      const auto start = std::chrono::steady_clock::now();
      try {
        const ImputationResult result = run_method(spec, masked, config.options);
        row.overall = score(result.completed, truth, delta);
        row.per_group = score_per_group(result.completed, truth, delta);
      } catch (const Error& e) {
        row.error = e.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

namespace {

std::string csv_quote(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string opt_to_string(const std::optional<double>& value) {
  if (!value) return "";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.10g", *value);
  return buffer;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void write_report_csv(const BenchmarkReport& report, std::ostream& out) {
  const Index k_count = report.config.simulation.groups;
  out << "method,replication,mse,misclassification,seconds,error";
  for (Index k = 0; k < k_count; ++k) out << ",mse_g" << k;
  for (Index k = 0; k < k_count; ++k) out << ",misclassification_g" << k;
  out << "\n";
  for (const BenchmarkRow& row : report.rows) {
    out << csv_quote(row.method) << ',' << row.replication << ',' << opt_to_string(row.overall.mse)
        << ',' << opt_to_string(row.overall.misclassification) << ',' << row.seconds << ','
        << csv_quote(row.error);
    for (Index k = 0; k < k_count; ++k) {
      out << ',' << (k < static_cast<Index>(row.per_group.size())
                         ? opt_to_string(row.per_group[k].mse)
                         : "");
    }
    for (Index k = 0; k < k_count; ++k) {
      out << ',' << (k < static_cast<Index>(row.per_group.size())
                         ? opt_to_string(row.per_group[k].misclassification)
                         : "");
    }
    out << "\n";
  }
}

void write_report_summary_json(const BenchmarkReport& report, std::ostream& out) {
  using nlohmann::json;
  json summary;
  const SimulationConfig& sim = report.config.simulation;
  summary["config"] = {{"groups", sim.groups},
                       {"rows_per_group", sim.rows_per_group},
                       {"quant_vars", sim.quant_vars},
                       {"cat_vars", sim.cat_vars},
                       {"rank_between", sim.rank_between},
                       {"rank_within", sim.rank_within},
                       {"noise", sim.noise},
                       {"missing_fraction", sim.missing_fraction},
                       {"categories_per_variable", sim.categories_per_variable},
                       {"seed", sim.seed},
                       {"replications", report.config.replications}};

  std::map<std::string, std::vector<const BenchmarkRow*>> by_method;
  std::map<Index, const BenchmarkRow*> mean_rows;
  for (const BenchmarkRow& row : report.rows) {
    by_method[row.method].push_back(&row);
    if (row.method == "mean") mean_rows[row.replication] = &row;
  }

  json methods = json::object();
  for (const auto& [name, rows] : by_method) {
    json entry;
    std::vector<double> mses, miss;
    double seconds = 0.0;
    Index failures = 0;
    Index wins_mse = 0, comparable_mse = 0;
    Index wins_mis = 0, comparable_mis = 0;
    for (const BenchmarkRow* row : rows) {
      seconds += row->seconds;
      if (!row->error.empty()) {
        ++failures;
        continue;
      }
      if (row->overall.mse) mses.push_back(*row->overall.mse);
      if (row->overall.misclassification) miss.push_back(*row->overall.misclassification);
      auto mean_it = mean_rows.find(row->replication);
      if (mean_it != mean_rows.end() && mean_it->second->error.empty()) {
        if (row->overall.mse && mean_it->second->overall.mse) {
          ++comparable_mse;
          if (*row->overall.mse < *mean_it->second->overall.mse) ++wins_mse;
        }
        if (row->overall.misclassification && mean_it->second->overall.misclassification) {
          ++comparable_mis;
          if (*row->overall.misclassification < *mean_it->second->overall.misclassification) {
            ++wins_mis;
          }
        }
      }
    }
    entry["rows"] = rows.size();
    entry["failures"] = failures;
    entry["total_seconds"] = seconds;
    if (!mses.empty()) entry["median_mse"] = median(mses);
    if (!miss.empty()) entry["median_misclassification"] = median(miss);
    if (comparable_mse > 0) {
      entry["wins_vs_mean_mse"] = wins_mse;
      entry["comparable_vs_mean_mse"] = comparable_mse;
    }
    if (comparable_mis > 0) {
      entry["wins_vs_mean_misclassification"] = wins_mis;
      entry["comparable_vs_mean_misclassification"] = comparable_mis;
    }
    methods[name] = std::move(entry);
  }
  summary["methods"] = std::move(methods);
  out << summary.dump(2) << "\n";
}

BenchmarkConfig parse_benchmark_config(const std::string& json_text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("benchmark config: ") + e.what());
  }
  BenchmarkConfig config;
  try {
    const json sim = root.value("simulation", json::object());
    config.simulation.groups = sim.value("groups", config.simulation.groups);
    config.simulation.rows_per_group = sim.value("rows_per_group", config.simulation.rows_per_group);
    config.simulation.quant_vars = sim.value("quant_vars", config.simulation.quant_vars);
    config.simulation.cat_vars = sim.value("cat_vars", config.simulation.cat_vars);
    config.simulation.rank_between = sim.value("rank_between", config.simulation.rank_between);
    config.simulation.rank_within = sim.value("rank_within", config.simulation.rank_within);
    config.simulation.noise = sim.value("noise", config.simulation.noise);
    config.simulation.missing_fraction =
        sim.value("missing_fraction", config.simulation.missing_fraction);
    config.simulation.categories_per_variable =
        sim.value("categories_per_variable", config.simulation.categories_per_variable);
    config.simulation.seed = sim.value("seed", config.simulation.seed);
    config.replications = root.value("replications", config.replications);
    const json opts = root.value("options", json::object());
    config.options.tol = opts.value("tol", config.options.tol);
    config.options.max_iter = opts.value("max_iter", config.options.max_iter);
    config.options.regularize = opts.value("regularize", config.options.regularize);
    config.options.seed = opts.value("seed", config.options.seed);
    for (const json& m : root.value("methods", json::array())) {
      MethodSpec spec;
      spec.name = m.at("name").get<std::string>();
      spec.rank_between = m.value("rank_between", spec.rank_between);
      spec.rank_within = m.value("rank_within", spec.rank_within);
      spec.rank = m.value("rank", spec.rank);
      config.methods.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("benchmark config: ") + e.what());
  }
  return config;
}

}  // namespace mlsvd
