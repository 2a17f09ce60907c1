#include "linkforecast/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace lf::sampling {

CandidateStream::CandidateStream(const graph::Snapshot& s, const SamplingConfig& cfg)
    : snap_(&s),
      cap_(cfg.max_candidates.value_or(std::numeric_limits<std::uint64_t>::max())) {
  bands_.emplace_back(cfg.min_degree, std::numeric_limits<std::uint32_t>::max());
  if (cfg.two_band && cfg.min_degree > 1) bands_.emplace_back(1u, cfg.min_degree);
  enter_band(0);
}

void CandidateStream::reset() {
  yielded_ = 0;
  enter_band(0);
}

void CandidateStream::enter_band(std::size_t b) {
  band_ = b;
  eligible_.clear();
  ui_ = 0;
  vi_ = 1;
  ai_ = 0;
  if (b >= bands_.size()) return;
  const auto [lo, hi] = bands_[b];
  const NodeId n = snap_->num_nodes();
  for (NodeId u = 0; u < n; ++u) {
    const std::uint32_t d = snap_->degree(u);
    if (d >= lo && d < hi) eligible_.push_back(u);
  }
}

bool CandidateStream::next(NodeId& u, NodeId& v) {
  if (yielded_ >= cap_) return false;
  while (band_ < bands_.size()) {
    if (next_in_band(u, v)) {
      ++yielded_;
      return true;
    }
    enter_band(band_ + 1);
  }
  return false;
}

bool CandidateStream::next_in_band(NodeId& u, NodeId& v) {
  while (ui_ + 1 < eligible_.size() || (ui_ < eligible_.size() && vi_ < eligible_.size())) {
    if (vi_ >= eligible_.size()) {
      ++ui_;
      vi_ = ui_ + 1;
      ai_ = 0;
      continue;
    }
    const NodeId a = eligible_[ui_];
    const NodeId b = eligible_[vi_];
    // Skip connected pairs by merging against the sorted neighbor list of a.
    const auto nb = snap_->neighbors(a);
    while (ai_ < nb.size() && nb[ai_] < b) ++ai_;
    if (ai_ < nb.size() && nb[ai_] == b) {
      ++vi_;
      continue;
    }
    u = a;
    v = b;
    ++vi_;
    return true;
  }
  return false;
}

std::vector<std::pair<NodeId, NodeId>> candidate_pairs(const graph::Snapshot& s,
                                                       const SamplingConfig& cfg) {
  std::vector<std::pair<NodeId, NodeId>> out;
  CandidateStream stream(s, cfg);
  NodeId u, v;
  while (stream.next(u, v)) out.emplace_back(u, v);
  return out;
}

std::vector<PairSample> label_pairs(std::span<const std::pair<NodeId, NodeId>> pairs,
                                    const graph::Snapshot& label_snapshot) {
  std::vector<PairSample> out;
  out.reserve(pairs.size());
  for (const auto& [u, v] : pairs)
    out.push_back({u, v, label_snapshot.is_connected(u, v) ? std::uint8_t{1} : std::uint8_t{0},
                   Split::train});
  return out;
}

namespace {

// Negatives chosen by ordinal against a sorted index draw; shared by the
// in-memory and streaming undersamplers so both pick identical sets.
std::vector<std::uint64_t> draw_negative_indices(std::uint64_t n_negatives,
                                                 std::uint64_t n_positives,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_without_replacement(rng, n_negatives, n_positives);
}

}  // namespace

std::vector<PairSample> balanced_undersample(std::span<const PairSample> rows,
                                             std::uint64_t seed) {
  std::uint64_t n_pos = 0, n_neg = 0;
  for (const auto& r : rows) (r.label ? n_pos : n_neg)++;
  if (n_pos == 0) throw ValidationError("balanced undersample: no positive samples");
  if (n_neg < n_pos)
    throw ValidationError("balanced undersample: fewer negatives (" +
                          std::to_string(n_neg) + ") than positives (" +
                          std::to_string(n_pos) + ")");

  const auto chosen = draw_negative_indices(n_neg, n_pos, seed);
  std::vector<PairSample> out;
  out.reserve(2 * n_pos);
  std::uint64_t neg_ordinal = 0;
  std::size_t next = 0;
  for (const auto& r : rows) {
    if (r.label) {
      out.push_back(r);
    } else {
      if (next < chosen.size() && chosen[next] == neg_ordinal) {
        out.push_back(r);
        ++next;
      }
      ++neg_ordinal;
    }
  }
  return out;
}

std::vector<PairSample> subsample_balanced(std::span<const PairSample> rows,
                                           std::uint64_t k_per_class, std::uint64_t seed) {
  std::vector<std::uint64_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < rows.size(); ++i)
    (rows[i].label ? pos_idx : neg_idx).push_back(i);
  if (pos_idx.size() < k_per_class || neg_idx.size() < k_per_class)
    throw ValidationError("subsample: class smaller than k_per_class (" +
                          std::to_string(pos_idx.size()) + " positives, " +
                          std::to_string(neg_idx.size()) + " negatives, k=" +
                          std::to_string(k_per_class) + ")");
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> keep;
  keep.reserve(2 * k_per_class);
  for (const auto* cls : {&pos_idx, &neg_idx})
    for (const auto j : sample_without_replacement(rng, cls->size(), k_per_class))
      keep.push_back((*cls)[j]);
  std::sort(keep.begin(), keep.end());
  std::vector<PairSample> out;
  out.reserve(keep.size());
  for (const auto i : keep) out.push_back(rows[i]);
  return out;
}

std::pair<std::vector<PairSample>, std::vector<PairSample>> holdout_split(
    std::span<const PairSample> rows, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction <= 1.0))
    throw ValidationError("holdout fraction must lie in [0, 1]");
  std::vector<std::uint64_t> by_class[2];
  for (std::size_t i = 0; i < rows.size(); ++i)
    by_class[rows[i].label ? 1 : 0].push_back(i);

  std::vector<bool> is_holdout(rows.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& idx : by_class) {
    const auto take = static_cast<std::uint64_t>(
        std::llround(holdout_fraction * static_cast<double>(idx.size())));
    const auto perm = shuffled_indices(rng, idx.size());
    for (std::uint64_t i = 0; i < take; ++i) is_holdout[idx[perm[i]]] = true;
  }

  std::vector<PairSample> train, holdout;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    PairSample r = rows[i];
    r.split = is_holdout[i] ? Split::holdout : Split::train;
    (is_holdout[i] ? holdout : train).push_back(r);
  }
  return {std::move(train), std::move(holdout)};
}

std::vector<PairSample> sample_window(const graph::Snapshot& feature_snapshot,
                                      const graph::Snapshot& label_snapshot,
                                      const SamplingConfig& cfg) {
  CandidateStream stream(feature_snapshot, cfg);
  NodeId u, v;

  std::vector<PairSample> positives;
  std::uint64_t n_neg = 0;
  if (!cfg.balance) {
    std::vector<PairSample> all;
    while (stream.next(u, v))
      all.push_back({u, v,
                     label_snapshot.is_connected(u, v) ? std::uint8_t{1} : std::uint8_t{0},
                     Split::train});
    return all;
  }

  // Pass 1: collect positives, count negatives.
  while (stream.next(u, v)) {
    if (label_snapshot.is_connected(u, v))
      positives.push_back({u, v, 1, Split::train});
    else
      ++n_neg;
  }
  if (positives.empty())
    throw ValidationError("sampling: no candidate pair is connected at the label cutoff");
  if (n_neg < positives.size())
    throw ValidationError("sampling: fewer negatives (" + std::to_string(n_neg) +
                          ") than positives (" + std::to_string(positives.size()) + ")");

  // Pass 2: re-stream and keep the index-sampled negatives.
  const auto chosen = draw_negative_indices(n_neg, positives.size(), cfg.seed);
  std::vector<PairSample> negatives;
  negatives.reserve(chosen.size());
  stream.reset();
  std::uint64_t neg_ordinal = 0;
  std::size_t next = 0;
  while (stream.next(u, v) && next < chosen.size()) {
    if (label_snapshot.is_connected(u, v)) continue;
    if (chosen[next] == neg_ordinal) {
      negatives.push_back({u, v, 0, Split::train});
      ++next;
    }
    ++neg_ordinal;
  }

  // Both class vectors follow the stream order; merge keeps it.
  std::vector<PairSample> out;
  out.reserve(positives.size() + negatives.size());
  std::merge(positives.begin(), positives.end(), negatives.begin(), negatives.end(),
             std::back_inserter(out), [](const PairSample& a, const PairSample& b) {
               return std::pair{a.u, a.v} < std::pair{b.u, b.v};
             });
  return out;
}

void save_samples_csv(std::span<const PairSample> rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write sample file: " + path);
  out << "u,v,label,split\n";
  for (const auto& r : rows)
    out << r.u << ',' << r.v << ',' << int(r.label) << ','
        << (r.split == Split::holdout ? "holdout" : "train") << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<PairSample> load_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open sample file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty sample file");
  std::vector<PairSample> rows;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string fields[4];
    std::size_t start = 0, f = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (f < 4) fields[f] = line.substr(start, i - start);
        ++f;
        start = i + 1;
      }
    }
    const auto fail = [&](const char* what) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
    };
    if (f != 4) fail("want 4 fields: u,v,label,split");
    PairSample r;
    std::int64_t x;
    for (int k = 0; k < 2; ++k) {
      const auto& tok = fields[k];
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || x < 0 ||
          x > std::numeric_limits<NodeId>::max())
        fail("bad node id");
      (k == 0 ? r.u : r.v) = static_cast<NodeId>(x);
    }
    if (fields[2] == "0")
      r.label = 0;
    else if (fields[2] == "1")
      r.label = 1;
    else
      fail("label must be 0 or 1");
    if (fields[3] == "train")
      r.split = Split::train;
    else if (fields[3] == "holdout")
      r.split = Split::holdout;
    else
      fail("split must be train or holdout");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lf::sampling
