#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "linkforecast/features.hpp"

namespace lf::reduce {

// Named column-index sets plus passthrough columns; together they partition
// the input layout.
struct FeatureGroups {
  struct Group {
    std::string name;
    std::vector<std::uint32_t> cols;
  };
  std::vector<Group> groups;
  std::vector<std::uint32_t> passthrough;

  void validate(std::size_t n_cols) const;

  // The seven fixed groups over the 45-column window layout (per-node degree
  // histories, pair-count histories, the ratio-index block, the weighted-sum
  // block) with the 12 AD/CI columns passed through.
  static FeatureGroups paper_default();

  // Greedy complete-linkage clustering on |r| >= threshold over a Pearson
  // matrix; singleton clusters become passthrough columns.
  static FeatureGroups derive(const std::vector<double>& pearson,
                              std::size_t n_cols, double threshold);
};

struct ScreenEntry {
  std::string column;
  double mutual_information = 0.0;  // nats, equal-frequency binning
  double chi_squared = 0.0;
  bool chi_squared_valid = false;
  std::string note;
};

// Report-only univariate screen of every column against the binary label:
// plug-in mutual information and the chi-squared statistic on the same
// 16-bin equal-frequency binning. No columns are dropped.
std::vector<ScreenEntry> univariate_screen(const features::FeatureMatrix& m);

nlohmann::json screen_to_json(const std::vector<ScreenEntry>& entries);

// Dense n_cols x n_cols Pearson correlation matrix: symmetric, unit
// diagonal, entries in [-1, 1]. Constant columns correlate 0 with everything
// and are reported in `warnings` when given.
std::vector<double> pearson_matrix(const features::FeatureMatrix& m,
                                   std::vector<std::string>* warnings = nullptr);

struct PcaGroup {
  std::string name;
  std::vector<std::uint32_t> cols;
  std::vector<double> mean;       // per-column centering means
  std::vector<double> component;  // unit first principal component
  double explained_variance_ratio = 0.0;
};

// Fitted reducer: per-group first principal components plus the
// standardization parameters of the final projected layout. Applying it
// never re-fits anything.
struct PcaGroupModel {
  std::vector<std::string> input_columns;
  std::vector<PcaGroup> groups;
  std::vector<std::uint32_t> passthrough;
  std::vector<std::string> output_columns;
  std::vector<double> standardize_mean;
  std::vector<double> standardize_sd;
  std::uint64_t fitted_on = 0;
};

// PCA per group on mean-centered (not variance-scaled) columns: first
// component by power iteration on the group covariance (tolerance 1e-12,
// <= 10^4 iterations, all-ones start), sign fixed so the largest-magnitude
// coefficient is positive. Standardization parameters are then computed for
// the projected layout. Errors on fewer than 2 rows or a zero-variance group.
PcaGroupModel fit_reducer(const features::FeatureMatrix& m, const FeatureGroups& groups);

// Projects group columns onto their components, copies passthrough columns,
// standardizes with the training-set parameters. Row-wise and parallel; the
// input layout must match the layout the reducer was fitted on.
features::FeatureMatrix apply_reducer(const features::FeatureMatrix& m,
                                      const PcaGroupModel& r, unsigned threads = 0);

// Per-group coefficient vectors and explained variances as JSON.
nlohmann::json export_components(const PcaGroupModel& r);

// Lossless (bit-exact double) JSON round trip.
nlohmann::json reducer_to_json(const PcaGroupModel& r);
PcaGroupModel reducer_from_json(const nlohmann::json& j);

}  // namespace lf::reduce
