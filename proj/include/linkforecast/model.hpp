#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "linkforecast/eval.hpp"
#include "linkforecast/features.hpp"
#include "linkforecast/reduce.hpp"

namespace lf::model {

struct ForestConfig {
  std::uint32_t n_estimators = 1250;
  std::optional<std::uint32_t> max_depth;      // nullopt = unbounded
  std::uint32_t min_samples_split = 7;
  std::uint32_t min_samples_leaf = 5;
  std::optional<std::uint32_t> max_features;   // nullopt = floor(sqrt(p))
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LogisticConfig {
  double l1_ratio = 0.5;   // 0 = ridge, 1 = lasso
  double alpha = 1e-4;     // total penalty weight
  std::uint32_t max_epochs = 1000;
  double tolerance = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

// Flat node array; internal nodes route x[feature] <= threshold to `left`,
// else `right`. feature == -1 marks a leaf whose value is the positive-class
// fraction.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> row) const;
};

// Trained bagged ensemble plus the fitted reducer needed to score raw
// 45-column rows (absent when the model consumes pre-reduced input).
struct ForestModel {
  ForestConfig config;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;
  std::optional<reduce::PcaGroupModel> reducer;

  std::vector<double> predict_proba(const features::FeatureMatrix& X,
                                    unsigned threads = 0) const;
};

struct LogisticModel {
  LogisticConfig config;
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double intercept = 0.0;
  std::uint32_t epochs_run = 0;
  bool converged = false;
  std::optional<reduce::PcaGroupModel> reducer;

  std::vector<double> predict_proba(const features::FeatureMatrix& X,
                                    unsigned threads = 0) const;
};

// CART with Gini impurity over all rows of X: per node, max_features
// candidate features sampled without replacement from the stream, thresholds
// at midpoints between consecutive distinct sorted values, exhaustive scan.
// Leaves store the positive fraction.
Tree fit_tree(const features::FeatureMatrix& X, std::span<const std::uint8_t> y,
              const ForestConfig& cfg, std::mt19937_64& rng);

// n_estimators trees over bootstrap samples (n rows with replacement); the
// per-tree stream seed derives from (cfg.seed, tree index), so results do
// not depend on scheduling. Uses X.labels.
ForestModel fit_forest(const features::FeatureMatrix& X, const ForestConfig& cfg,
                       unsigned threads = 0);

// Elastic-net logistic regression minimizing
//   mean logistic loss + alpha * (l1_ratio*||w||_1 + (1-l1_ratio)/2*||w||_2^2)
// by proximal gradient; intercept unpenalized. Stops when the largest
// coefficient change drops below tolerance.
LogisticModel fit_logistic(const features::FeatureMatrix& X, const LogisticConfig& cfg);

// Smooth part of the objective (logistic loss + ridge term) and its exact
// gradient; exposed so finite-difference checks can target the training path.
double logistic_smooth_objective(const features::FeatureMatrix& X,
                                 std::span<const std::uint8_t> y,
                                 std::span<const double> w, double intercept,
                                 double alpha, double l1_ratio);
std::pair<std::vector<double>, double> logistic_smooth_gradient(
    const features::FeatureMatrix& X, std::span<const std::uint8_t> y,
    std::span<const double> w, double intercept, double alpha, double l1_ratio);

// --- random-search hyperparameter optimization ------------------------------

struct ParamDist {
  enum class Kind { uniform, log_uniform, int_uniform, int_log_uniform, categorical };
  Kind kind = Kind::uniform;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> values;  // categorical only

  static ParamDist make_uniform(double lo, double hi);
  static ParamDist make_log_uniform(double lo, double hi);
  static ParamDist make_int_uniform(std::int64_t lo, std::int64_t hi);
  static ParamDist make_int_log_uniform(std::int64_t lo, std::int64_t hi);
  static ParamDist make_categorical(std::vector<double> values);
};

struct SearchSpec {
  std::map<std::string, ParamDist> params;
  std::uint32_t n_draws = 20;
  std::uint32_t k_folds = 5;
  std::uint64_t seed = 0;
  // Second pass re-centered around the first round's winner, numeric ranges
  // shrunk by shrink_factor and clamped to the original bounds.
  bool second_round = false;
  double shrink_factor = 0.5;

  void validate() const;
};

enum class Family { forest, logistic };

struct Trial {
  std::uint32_t round = 0;
  std::uint32_t index = 0;  // draw index within the round
  std::map<std::string, double> params;
  std::vector<double> fold_auc;
  double mean_auc = 0.0;
};

struct SearchResult {
  Family family = Family::forest;
  std::variant<ForestConfig, LogisticConfig> best_config;
  std::map<std::string, double> best_params;
  double best_mean_auc = 0.0;
  std::uint32_t best_round = 0;
  std::uint32_t best_index = 0;
  std::vector<Trial> trials;
};

// Seeded draws from the spec's distributions; each trial is scored by the
// mean AUC of a stratified k-fold cross-validation (folds fixed across
// trials). Ties go to the earliest trial.
SearchResult random_search(const features::FeatureMatrix& X, const SearchSpec& spec,
                           const ForestConfig& base, unsigned threads = 0);
SearchResult random_search(const features::FeatureMatrix& X, const SearchSpec& spec,
                           const LogisticConfig& base, unsigned threads = 0);

nlohmann::json search_result_to_json(const SearchResult& r);

// --- serialization -----------------------------------------------------------

// LFRF container: magic "LFRF", version byte, u32 header length, JSON header
// (config, feature names, embedded reducer + its hash), u32 tree count, then
// per tree a u32 node count and the flat node encoding (i32 feature;
// internal: f64 threshold, u32 left, u32 right; leaf: f64 fraction).
void save_model(const ForestModel& m, const std::string& path);
ForestModel load_model(const std::string& path);

void save_logistic_json(const LogisticModel& m, const std::string& path);
LogisticModel load_logistic_json(const std::string& path);

nlohmann::json forest_config_to_json(const ForestConfig& c);
ForestConfig forest_config_from_json(const nlohmann::json& j);
nlohmann::json logistic_config_to_json(const LogisticConfig& c);
LogisticConfig logistic_config_from_json(const nlohmann::json& j);

}  // namespace lf::model
