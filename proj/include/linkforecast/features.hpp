#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "linkforecast/graph.hpp"

namespace lf::features {

// --- scalar topological features -------------------------------------------
// Conventions: N(.) = neighbor set, d(.) = degree, C = N(u) ∩ N(v).
// Every 0/0-style ratio defines to 0; all results are finite.

std::uint32_t degree_centrality(const graph::Snapshot& s, NodeId u);
std::uint64_t total_neighbors(const graph::Snapshot& s, NodeId u, NodeId v);
std::uint64_t common_neighbors(const graph::Snapshot& s, NodeId u, NodeId v);
double jaccard(const graph::Snapshot& s, NodeId u, NodeId v);
double simpson(const graph::Snapshot& s, NodeId u, NodeId v);
double geometric(const graph::Snapshot& s, NodeId u, NodeId v);
double cosine(const graph::Snapshot& s, NodeId u, NodeId v);
double adamic_adar(const graph::Snapshot& s, NodeId u, NodeId v);
double resource_allocation(const graph::Snapshot& s, NodeId u, NodeId v);
std::uint64_t preferential_attachment(const graph::Snapshot& s, NodeId u, NodeId v);
double avg_neighbor_degree(const graph::Snapshot& s, NodeId u);
double clustering_coefficient(const graph::Snapshot& s, NodeId u);

// --- assembled per-window matrix --------------------------------------------

inline constexpr std::size_t kWindowColumnCount = 45;

// Column layout of a window feature row. v1 is the smaller node id of the
// pair, y1 the newest snapshot. Order is fixed; everything downstream
// (grouping, reduction, model files) indexes into it.
const std::array<std::string, kWindowColumnCount>& window_column_names();

// Dense rows of named feature values with column metadata. labels and
// pair_ids are optional; when present they have one entry per row.
struct FeatureMatrix {
  std::vector<std::string> column_names;
  std::vector<double> values;  // row-major, n_rows * n_cols()
  std::vector<std::pair<NodeId, NodeId>> pair_ids;
  std::vector<std::uint8_t> labels;
  std::size_t n_rows = 0;

  std::size_t n_cols() const { return column_names.size(); }
  bool has_labels() const { return !labels.empty(); }

  double at(std::size_t r, std::size_t c) const { return values[r * n_cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * n_cols(), n_cols()};
  }
  std::vector<double> column(std::size_t c) const;

  FeatureMatrix select_rows(std::span<const std::uint64_t> rows) const;
};

// Per-node features (AD, CI) precomputed once per snapshot; lets callers
// extract many pair chunks against one window without redoing node work.
struct WindowNodeCache {
  std::array<std::vector<double>, 3> avg_degree;
  std::array<std::vector<double>, 3> clustering;
};

WindowNodeCache build_window_cache(const graph::SnapshotWindow& w, unsigned threads = 0);

// One 45-column row per pair, in input order, bit-identical for any thread
// count. Throws ValidationError naming the offending pair for out-of-range
// ids and for self-pairs.
FeatureMatrix extract_window(const graph::SnapshotWindow& w,
                             std::span<const std::pair<NodeId, NodeId>> pairs,
                             unsigned threads = 0);
FeatureMatrix extract_window(const graph::SnapshotWindow& w,
                             std::span<const std::pair<NodeId, NodeId>> pairs,
                             const WindowNodeCache& cache, unsigned threads = 0);

// CSV: header "u,v,label,<column names>"; label cell empty when absent.
void save_matrix_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix load_matrix_csv(const std::string& path);

// LFFM container: magic "LFFM", version byte, flags byte (bit0 labels,
// bit1 pair ids), u32 n_cols, u64 n_rows, column-name block, pair block,
// label block, then row-major f64 data. Bit-exact round trip.
void save_matrix_binary(const FeatureMatrix& m, const std::string& path);
FeatureMatrix load_matrix_binary(const std::string& path);

void save_matrix(const FeatureMatrix& m, const std::string& path, const std::string& format);
FeatureMatrix load_matrix(const std::string& path);  // sniffs LFFM magic

}  // namespace lf::features
