#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "linkforecast/common.hpp"

namespace lf::graph {

enum class EdgeFileFormat { csv, tsv, binary };

// Probes the file: LFEL magic means binary, otherwise text (csv).
EdgeFileFormat detect_edge_format(const std::string& path);
EdgeFileFormat edge_format_from_string(const std::string& name);

struct TemporalEdge {
  NodeId u = 0;
  NodeId v = 0;
  std::int64_t t = 0;
};

struct IngestSummary {
  std::uint64_t nodes = 0;
  std::uint64_t raw_records = 0;
  std::uint64_t self_loops_dropped = 0;
  std::uint64_t duplicate_records = 0;
};

// Raw timestamped undirected edges, the single ingestion format.
// Records are normalized on entry (self-loops dropped, endpoints ordered
// u < v) but duplicates of the same pair survive until a Snapshot collapses
// them, so the stored sequence mirrors the input stream.
class TemporalEdgeList {
 public:
  TemporalEdgeList() = default;

  // Text records are "u,v,t" or "u<TAB>v<TAB>t"; '#' lines are comments.
  // Binary is the LFEL container written by save_binary.
  static TemporalEdgeList ingest(const std::string& path, EdgeFileFormat format);

  // Normalizes an in-memory edge sequence through the same path as ingest.
  static TemporalEdgeList from_edges(std::vector<TemporalEdge> edges);

  std::span<const TemporalEdge> edges() const { return edges_; }
  NodeId num_nodes() const { return n_nodes_; }
  const IngestSummary& summary() const { return summary_; }

  // LFEL container: magic "LFEL", version byte, little-endian u64 record
  // count, then (u32 u, u32 v, i64 t) triples.
  void save_binary(const std::string& path) const;

 private:
  std::vector<TemporalEdge> edges_;
  NodeId n_nodes_ = 0;
  IngestSummary summary_;
};

// Immutable adjacency view of the graph at a time cutoff: exactly the edges
// with t <= cutoff, duplicates collapsed. Stored as one contiguous neighbor
// pool with per-node offset ranges; every neighbor list is strictly
// increasing. Safe to share across any number of concurrent readers.
class Snapshot {
 public:
  Snapshot(const TemporalEdgeList& edges, std::int64_t cutoff);

  std::int64_t cutoff() const { return cutoff_; }
  NodeId num_nodes() const { return static_cast<NodeId>(offsets_.size() - 1); }
  std::uint64_t num_edges() const { return adjacency_.size() / 2; }

  std::uint32_t degree(NodeId u) const {
    check_node(u);
    return static_cast<std::uint32_t>(offsets_[u + 1] - offsets_[u]);
  }

  std::span<const NodeId> neighbors(NodeId u) const {
    check_node(u);
    return {adjacency_.data() + offsets_[u],
            adjacency_.data() + offsets_[u + 1]};
  }

  // Binary search over the sorted neighbor list; (u, u) is false by
  // convention since self-loops never exist.
  bool is_connected(NodeId u, NodeId v) const;

 private:
  void check_node(NodeId u) const {
    if (std::size_t{u} + 1 >= offsets_.size())
      throw ValidationError("node id " + std::to_string(u) + " out of range (n=" +
                            std::to_string(offsets_.size() - 1) + ")");
  }

  std::int64_t cutoff_ = 0;
  std::vector<std::uint64_t> offsets_;  // size n+1
  std::vector<NodeId> adjacency_;       // neighbor pool, 2 * num_edges entries
};

// Three feature snapshots ordered newest-first (y1, y2, y3) plus the label
// cutoff. The label snapshot itself is intentionally absent: code holding a
// window can only see cutoffs <= y1, which is what keeps label information
// out of feature extraction.
struct SnapshotWindow {
  Snapshot y1, y2, y3;
  std::int64_t label_cutoff;

  SnapshotWindow(Snapshot newest, Snapshot middle, Snapshot oldest,
                 std::int64_t label_cutoff_time);

  // age 0 = y1 (newest) .. age 2 = y3 (oldest)
  const Snapshot& by_age(int age) const;
};

// n * (n - 1) / 2 with an overflow check; the result type must hold >= 2^62.
std::uint64_t num_possible_pairs(std::uint64_t n);

inline bool is_connected(const Snapshot& s, NodeId u, NodeId v) {
  return s.is_connected(u, v);
}

}  // namespace lf::graph
