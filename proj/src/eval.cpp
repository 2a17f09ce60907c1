#include "linkforecast/eval.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "linkforecast/common.hpp"

namespace lf::eval {

RocResult auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
              bool with_roc_points) {
  if (scores.size() != labels.size())
    throw ValidationError("auc: scores and labels differ in length");
  RocResult res;
  for (const auto y : labels) (y ? res.n_pos : res.n_neg)++;
  if (res.n_pos == 0 || res.n_neg == 0)
    throw ValidationError("auc: need at least one positive and one negative (" +
                          std::to_string(res.n_pos) + " pos, " +
                          std::to_string(res.n_neg) + " neg)");

  std::vector<std::uint64_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::uint64_t a, std::uint64_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney with midranks, accumulated in half-rank units so the sum
  // stays an exact integer.
  std::int64_t pos_rank2 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j; doubled midrank = (i+1) + j.
    const std::int64_t midrank2 = static_cast<std::int64_t>(i) + 1 + static_cast<std::int64_t>(j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) pos_rank2 += midrank2;
    i = j;
  }
  const std::int64_t n_pos = static_cast<std::int64_t>(res.n_pos);
  const std::int64_t u2 = pos_rank2 - n_pos * (n_pos + 1);
  res.auc = static_cast<double>(u2) /
            (2.0 * static_cast<double>(res.n_pos) * static_cast<double>(res.n_neg));

  if (with_roc_points) {
    res.roc_points.emplace_back(0.0, 0.0);
    std::uint64_t tp = 0, fp = 0;
    std::size_t k = order.size();
    while (k > 0) {
      std::size_t j = k;  // walk descending score groups
      while (j > 0 && scores[order[j - 1]] == scores[order[k - 1]]) {
        if (labels[order[j - 1]])
          ++tp;
        else
          ++fp;
        --j;
      }
      res.roc_points.emplace_back(static_cast<double>(fp) / static_cast<double>(res.n_neg),
                                  static_cast<double>(tp) / static_cast<double>(res.n_pos));
      k = j;
    }
  }
  return res;
}

std::vector<std::uint32_t> stratified_fold_assignment(std::span<const std::uint8_t> labels,
                                                      std::uint32_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified folds: k must be >= 2");
  std::vector<std::uint64_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i] ? 1 : 0].push_back(i);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < k)
      throw ValidationError("stratified folds: class " + std::to_string(c) + " has " +
                            std::to_string(by_class[c].size()) + " rows, fewer than k=" +
                            std::to_string(k));

  std::vector<std::uint32_t> fold(labels.size(), 0);
  std::mt19937_64 rng(seed);
  for (auto& idx : by_class) {
    const auto perm = shuffled_indices(rng, idx.size());
    for (std::uint64_t i = 0; i < perm.size(); ++i)
      fold[idx[perm[i]]] = static_cast<std::uint32_t>(i % k);
  }
  return fold;
}

CvReport cross_validate(const features::FeatureMatrix& m, std::uint32_t k,
                        std::uint64_t seed, const FoldScorer& scorer) {
  if (!m.has_labels()) throw ValidationError("cross-validation: matrix has no labels");
  if (m.n_rows < k) throw ValidationError("cross-validation: fewer rows than folds");
  const auto fold = stratified_fold_assignment(m.labels, k, seed);

  CvReport report;
  for (std::uint32_t f = 0; f < k; ++f) {
    std::vector<std::uint64_t> train_rows, test_rows;
    for (std::size_t i = 0; i < m.n_rows; ++i)
      (fold[i] == f ? test_rows : train_rows).push_back(i);
    const auto train = m.select_rows(train_rows);
    const auto test = m.select_rows(test_rows);
    const auto scores = scorer(train, test, derive_seed(seed, f));
    report.fold_auc.push_back(auc(scores, test.labels).auc);
  }
  double sum = 0.0;
  for (const double a : report.fold_auc) sum += a;
  report.mean_auc = sum / static_cast<double>(report.fold_auc.size());
  return report;
}

}  // namespace lf::eval
