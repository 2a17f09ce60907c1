#include "linkforecast/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>

namespace lf::graph {

namespace {

constexpr char kEdgeMagic[4] = {'L', 'F', 'E', 'L'};
constexpr std::uint8_t kEdgeVersion = 1;

bool parse_int(std::string_view tok, std::int64_t& out) {
  // from_chars rejects leading whitespace; trim both ends first.
  std::size_t b = 0, e = tok.size();
  while (b < e && (tok[b] == ' ' || tok[b] == '\r')) ++b;
  while (e > b && (tok[e - 1] == ' ' || tok[e - 1] == '\r')) --e;
  if (b == e) return false;
  const auto res = std::from_chars(tok.data() + b, tok.data() + e, out);
  return res.ec == std::errc{} && res.ptr == tok.data() + e;
}

std::vector<TemporalEdge> parse_text(std::istream& in, const std::string& path) {
  std::vector<TemporalEdge> edges;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty() || sv.front() == '#') continue;

    std::int64_t fields[3];
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= sv.size(); ++i) {
      if (i == sv.size() || sv[i] == ',' || sv[i] == '\t') {
        if (field >= 3 || !parse_int(sv.substr(start, i - start), fields[field]))
          throw ValidationError(path + ":" + std::to_string(line_no) +
                                ": malformed record (want 3 integers: u,v,t)");
        ++field;
        start = i + 1;
      }
    }
    if (field != 3)
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": malformed record (want 3 integers: u,v,t)");
    if (fields[0] < 0 || fields[1] < 0)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": negative node id");
    if (fields[0] > std::numeric_limits<NodeId>::max() ||
        fields[1] > std::numeric_limits<NodeId>::max())
      throw ValidationError(path + ":" + std::to_string(line_no) + ": node id too large");
    edges.push_back({static_cast<NodeId>(fields[0]), static_cast<NodeId>(fields[1]),
                     fields[2]});
  }
  return edges;
}

template <class T>
void read_raw(std::istream& in, T& out, const std::string& path) {
  in.read(reinterpret_cast<char*>(&out), sizeof(T));
  if (!in) throw ValidationError(path + ": truncated binary edge file");
}

std::vector<TemporalEdge> parse_binary(std::istream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kEdgeMagic, 4) != 0)
    throw ValidationError(path + ": not an LFEL edge file (bad magic)");
  std::uint8_t version;
  read_raw(in, version, path);
  if (version != kEdgeVersion)
    throw ValidationError(path + ": unsupported LFEL version " + std::to_string(version));
  std::uint64_t count;
  read_raw(in, count, path);
  std::vector<TemporalEdge> edges;
  edges.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t u, v;
    std::int64_t t;
    read_raw(in, u, path);
    read_raw(in, v, path);
    read_raw(in, t, path);
    edges.push_back({u, v, t});
  }
  return edges;
}

}  // namespace

EdgeFileFormat detect_edge_format(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open edge file: " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  return std::memcmp(magic, kEdgeMagic, 4) == 0 ? EdgeFileFormat::binary
                                                : EdgeFileFormat::csv;
}

EdgeFileFormat edge_format_from_string(const std::string& name) {
  if (name == "csv") return EdgeFileFormat::csv;
  if (name == "tsv") return EdgeFileFormat::tsv;
  if (name == "binary") return EdgeFileFormat::binary;
  throw ValidationError("unknown edge format '" + name + "' (csv|tsv|binary)");
}

TemporalEdgeList TemporalEdgeList::ingest(const std::string& path, EdgeFileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open edge file: " + path);
  std::vector<TemporalEdge> raw = format == EdgeFileFormat::binary
                                      ? parse_binary(in, path)
                                      : parse_text(in, path);
  return from_edges(std::move(raw));
}

TemporalEdgeList TemporalEdgeList::from_edges(std::vector<TemporalEdge> edges) {
  TemporalEdgeList out;
  out.summary_.raw_records = edges.size();

  std::size_t kept = 0;
  NodeId max_id = 0;
  bool any = false;
  for (auto& e : edges) {
    if (e.u == e.v) {
      ++out.summary_.self_loops_dropped;
      continue;
    }
    if (e.u > e.v) std::swap(e.u, e.v);
    max_id = std::max(max_id, e.v);
    any = true;
    edges[kept++] = e;
  }
  edges.resize(kept);

  // Duplicate (u,v) records are retained; only counted here. Sort-based so
  // huge inputs do not need a hash table.
  std::vector<std::uint64_t> keys(kept);
  for (std::size_t i = 0; i < kept; ++i)
    keys[i] = (std::uint64_t{edges[i].u} << 32) | edges[i].v;
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 1; i < kept; ++i)
    if (keys[i] == keys[i - 1]) ++out.summary_.duplicate_records;

  out.edges_ = std::move(edges);
  out.n_nodes_ = any ? max_id + 1 : 0;
  out.summary_.nodes = out.n_nodes_;
  return out;
}

void TemporalEdgeList::save_binary(const std::string& path) const {
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) throw std::runtime_error("cannot write edge file: " + path);
  outf.write(kEdgeMagic, 4);
  outf.put(static_cast<char>(kEdgeVersion));
  const std::uint64_t count = edges_.size();
  outf.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& e : edges_) {
    outf.write(reinterpret_cast<const char*>(&e.u), sizeof(e.u));
    outf.write(reinterpret_cast<const char*>(&e.v), sizeof(e.v));
    outf.write(reinterpret_cast<const char*>(&e.t), sizeof(e.t));
  }
  if (!outf) throw std::runtime_error("write failed: " + path);
}

Snapshot::Snapshot(const TemporalEdgeList& edges, std::int64_t cutoff)
    : cutoff_(cutoff) {
  const NodeId n = edges.num_nodes();

  std::vector<std::uint64_t> keys;
  for (const auto& e : edges.edges())
    if (e.t <= cutoff) keys.push_back((std::uint64_t{e.u} << 32) | e.v);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  offsets_.assign(std::size_t{n} + 1, 0);
  for (const auto k : keys) {
    ++offsets_[(k >> 32) + 1];
    ++offsets_[(k & 0xffffffffULL) + 1];
  }
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];

  // Filling in ascending (u,v) key order appends every node's neighbors in
  // increasing order: reversed entries (all < u) arrive before forward ones.
  adjacency_.resize(keys.size() * 2);
  std::vector<std::uint64_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto k : keys) {
    const NodeId u = static_cast<NodeId>(k >> 32);
    const NodeId v = static_cast<NodeId>(k & 0xffffffffULL);
    adjacency_[cursor[u]++] = v;
    adjacency_[cursor[v]++] = u;
  }
}

bool Snapshot::is_connected(NodeId u, NodeId v) const {
  check_node(u);
  check_node(v);
  if (u == v) return false;
  // Search the shorter list.
  if (degree(u) > degree(v)) std::swap(u, v);
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

SnapshotWindow::SnapshotWindow(Snapshot newest, Snapshot middle, Snapshot oldest,
                               std::int64_t label_cutoff_time)
    : y1(std::move(newest)),
      y2(std::move(middle)),
      y3(std::move(oldest)),
      label_cutoff(label_cutoff_time) {
  if (!(y1.cutoff() > y2.cutoff() && y2.cutoff() > y3.cutoff()))
    throw ValidationError("window snapshots must be ordered newest-first (y1 > y2 > y3)");
  if (!(label_cutoff > y1.cutoff()))
    throw ValidationError("label cutoff must lie beyond the newest feature snapshot");
}

const Snapshot& SnapshotWindow::by_age(int age) const {
  switch (age) {
    case 0: return y1;
    case 1: return y2;
    case 2: return y3;
    default: throw std::out_of_range("snapshot age must be 0, 1 or 2");
  }
}

std::uint64_t num_possible_pairs(std::uint64_t n) {
  if (n < 2) return 0;
  const unsigned __int128 p = (static_cast<unsigned __int128>(n) * (n - 1)) / 2;
  if (p > std::numeric_limits<std::uint64_t>::max())
    throw ValidationError("pair count overflows 64 bits for n=" + std::to_string(n));
  return static_cast<std::uint64_t>(p);
}

}  // namespace lf::graph
