#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "linkforecast/graph.hpp"

namespace lf::sampling {

struct SamplingConfig {
  std::uint32_t min_degree = 10;
  std::optional<std::uint64_t> max_candidates;  // cap on the candidate stream
  std::uint64_t seed = 0;
  bool balance = true;
  // Adds a second candidate band of pairs whose endpoints both have
  // 1 <= degree < min_degree, appended after the main band.
  bool two_band = false;
};

enum class Split : std::uint8_t { train = 0, holdout = 1 };

struct PairSample {
  NodeId u = 0;
  NodeId v = 0;
  std::uint8_t label = 0;
  Split split = Split::train;
};

// Streams the candidate pairs u < v where both degrees fall in the config's
// band(s) and (u, v) is not connected in the snapshot. Ascending (u, v) order
// within each band, nothing materialized, deterministic across runs.
class CandidateStream {
 public:
  CandidateStream(const graph::Snapshot& s, const SamplingConfig& cfg);

  bool next(NodeId& u, NodeId& v);
  void reset();

 private:
  bool next_in_band(NodeId& u, NodeId& v);
  void enter_band(std::size_t b);

  const graph::Snapshot* snap_;
  std::uint64_t cap_;
  std::uint64_t yielded_ = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bands_;  // [lo, hi) degree ranges
  std::size_t band_ = 0;
  std::vector<NodeId> eligible_;
  std::size_t ui_ = 0, vi_ = 0, ai_ = 0;
};

// Materialized convenience wrapper around CandidateStream.
std::vector<std::pair<NodeId, NodeId>> candidate_pairs(const graph::Snapshot& s,
                                                       const SamplingConfig& cfg);

// label = is_connected(label_snapshot, u, v); split untouched.
std::vector<PairSample> label_pairs(std::span<const std::pair<NodeId, NodeId>> pairs,
                                    const graph::Snapshot& label_snapshot);

// Keeps every positive and a uniform without-replacement draw of exactly as
// many negatives. Errors when positives are absent or outnumber negatives.
std::vector<PairSample> balanced_undersample(std::span<const PairSample> rows,
                                             std::uint64_t seed);

// Uniform seeded draw of k rows per class, returned in original order.
std::vector<PairSample> subsample_balanced(std::span<const PairSample> rows,
                                           std::uint64_t k_per_class, std::uint64_t seed);

// Stratified (per-label) split; holdout gets round(fraction * class size)
// rows of each class. Outputs preserve input order and carry Split tags.
std::pair<std::vector<PairSample>, std::vector<PairSample>> holdout_split(
    std::span<const PairSample> rows, double holdout_fraction, std::uint64_t seed);

// Streaming equivalent of candidate_pairs -> label_pairs ->
// balanced_undersample: two passes over the candidate stream, negatives
// chosen by index sampling, so the candidate set never resides in memory.
// With cfg.balance = false it simply labels every candidate.
std::vector<PairSample> sample_window(const graph::Snapshot& feature_snapshot,
                                      const graph::Snapshot& label_snapshot,
                                      const SamplingConfig& cfg);

// CSV "u,v,label,split" with split in {train, holdout}.
void save_samples_csv(std::span<const PairSample> rows, const std::string& path);
std::vector<PairSample> load_samples_csv(const std::string& path);

}  // namespace lf::sampling
