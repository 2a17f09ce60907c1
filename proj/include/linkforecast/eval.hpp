#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "linkforecast/features.hpp"

namespace lf::model {
struct ForestConfig;
struct LogisticConfig;
}  // namespace lf::model

namespace lf::eval {

struct RocResult {
  double auc = 0.0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  // (fpr, tpr) staircase, only filled on request; starts (0,0), ends (1,1).
  std::vector<std::pair<double, double>> roc_points;
};

// Exact rank-based AUC via the Mann-Whitney statistic with midranks for
// ties, O(n log n). Requires at least one positive and one negative.
RocResult auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
              bool with_roc_points = false);

// fold id per row; every fold's class counts are within 1 of an even split.
// Errors when any class has fewer rows than k.
std::vector<std::uint32_t> stratified_fold_assignment(std::span<const std::uint8_t> labels,
                                                      std::uint32_t k, std::uint64_t seed);

struct CvReport {
  std::vector<double> fold_auc;
  double mean_auc = 0.0;
};

// Generic harness: scorer(train, test, fold_seed) returns test-row scores.
using FoldScorer = std::function<std::vector<double>(
    const features::FeatureMatrix& train, const features::FeatureMatrix& test,
    std::uint64_t fold_seed)>;

CvReport cross_validate(const features::FeatureMatrix& m, std::uint32_t k,
                        std::uint64_t seed, const FoldScorer& scorer);

// Family-specific wrappers (defined with the model code). Fold assignment
// comes from `seed`; the per-fold model seed is derived from the config seed
// and the fold index.
CvReport cross_validate(const features::FeatureMatrix& m, const model::ForestConfig& cfg,
                        std::uint32_t k, std::uint64_t seed, unsigned threads = 0);
CvReport cross_validate(const features::FeatureMatrix& m, const model::LogisticConfig& cfg,
                        std::uint32_t k, std::uint64_t seed, unsigned threads = 0);

}  // namespace lf::eval
