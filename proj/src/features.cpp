#include "linkforecast/features.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace lf::features {

namespace {

struct IntersectStats {
  std::uint64_t cn = 0;
  double aa = 0.0;
  double ra = 0.0;
};

// Single merge over both sorted neighbor lists feeding CN, AA and RA at once.
IntersectStats intersect_stats(const graph::Snapshot& s, NodeId u, NodeId v) {
  IntersectStats st;
  const auto nu = s.neighbors(u);
  const auto nv = s.neighbors(v);
  std::size_t i = 0, j = 0;
  while (i < nu.size() && j < nv.size()) {
    if (nu[i] < nv[j]) {
      ++i;
    } else if (nu[i] > nv[j]) {
      ++j;
    } else {
      const std::uint32_t dw = s.degree(nu[i]);
      assert(dw >= 2 && "common neighbor of a distinct pair has degree >= 2");
      ++st.cn;
      st.aa += 1.0 / std::log(static_cast<double>(dw));
      st.ra += 1.0 / static_cast<double>(dw);
      ++i;
      ++j;
    }
  }
  return st;
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::uint32_t degree_centrality(const graph::Snapshot& s, NodeId u) {
  return s.degree(u);
}

std::uint64_t total_neighbors(const graph::Snapshot& s, NodeId u, NodeId v) {
  return std::uint64_t{s.degree(u)} + s.degree(v);
}

std::uint64_t common_neighbors(const graph::Snapshot& s, NodeId u, NodeId v) {
  return intersect_stats(s, u, v).cn;
}

double jaccard(const graph::Snapshot& s, NodeId u, NodeId v) {
  const auto cn = static_cast<double>(common_neighbors(s, u, v));
  const double uni = static_cast<double>(s.degree(u)) + s.degree(v) - cn;
  return safe_ratio(cn, uni);
}

double simpson(const graph::Snapshot& s, NodeId u, NodeId v) {
  const auto cn = static_cast<double>(common_neighbors(s, u, v));
  return safe_ratio(cn, std::min(s.degree(u), s.degree(v)));
}

double geometric(const graph::Snapshot& s, NodeId u, NodeId v) {
  const auto cn = static_cast<double>(common_neighbors(s, u, v));
  return safe_ratio(cn * cn, static_cast<double>(s.degree(u)) * s.degree(v));
}

double cosine(const graph::Snapshot& s, NodeId u, NodeId v) {
  return std::sqrt(geometric(s, u, v));
}

double adamic_adar(const graph::Snapshot& s, NodeId u, NodeId v) {
  return intersect_stats(s, u, v).aa;
}

double resource_allocation(const graph::Snapshot& s, NodeId u, NodeId v) {
  return intersect_stats(s, u, v).ra;
}

std::uint64_t preferential_attachment(const graph::Snapshot& s, NodeId u, NodeId v) {
  return std::uint64_t{s.degree(u)} * s.degree(v);
}

double avg_neighbor_degree(const graph::Snapshot& s, NodeId u) {
  const auto nb = s.neighbors(u);
  if (nb.empty()) return 0.0;
  std::uint64_t sum = 0;
  for (const NodeId w : nb) sum += s.degree(w);
  return static_cast<double>(sum) / static_cast<double>(nb.size());
}

double clustering_coefficient(const graph::Snapshot& s, NodeId u) {
  const auto nb = s.neighbors(u);
  const std::size_t d = nb.size();
  if (d < 2) return 0.0;
  // Each edge among N(u) counted once via the x > w half of the intersection.
  std::uint64_t triangles = 0;
  for (const NodeId w : nb) {
    const auto nw = s.neighbors(w);
    auto it = std::upper_bound(nw.begin(), nw.end(), w);
    auto jt = std::upper_bound(nb.begin(), nb.end(), w);
    while (it != nw.end() && jt != nb.end()) {
      if (*it < *jt) {
        ++it;
      } else if (*it > *jt) {
        ++jt;
      } else {
        ++triangles;
        ++it;
        ++jt;
      }
    }
  }
  return 2.0 * static_cast<double>(triangles) /
         (static_cast<double>(d) * static_cast<double>(d - 1));
}

const std::array<std::string, kWindowColumnCount>& window_column_names() {
  static const std::array<std::string, kWindowColumnCount> names = {
      "DC_v1_y1", "DC_v2_y1", "DC_v1_y2", "DC_v2_y2", "DC_v1_y3", "DC_v2_y3",
      "TN_y1",    "TN_y2",    "TN_y3",
      "CN_y1",    "CN_y2",    "CN_y3",
      "JC_y1",    "JC_y2",    "JC_y3",
      "SC_y1",    "SC_y2",    "SC_y3",
      "GC_y1",    "GC_y2",    "GC_y3",
      "CC_y1",    "CC_y2",    "CC_y3",
      "AA_y1",    "AA_y2",    "AA_y3",
      "RA_y1",    "RA_y2",    "RA_y3",
      "PA_y1",    "PA_y2",    "PA_y3",
      "AD_v1_y1", "AD_v2_y1", "AD_v1_y2", "AD_v2_y2", "AD_v1_y3", "AD_v2_y3",
      "CI_v1_y1", "CI_v2_y1", "CI_v1_y2", "CI_v2_y2", "CI_v1_y3", "CI_v2_y3"};
  return names;
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = at(r, c);
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::uint64_t> rows) const {
  FeatureMatrix out;
  out.column_names = column_names;
  out.n_rows = rows.size();
  out.values.resize(rows.size() * n_cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = row(rows[i]);
    std::copy(src.begin(), src.end(), out.values.begin() + i * n_cols());
  }
  if (!pair_ids.empty()) {
    out.pair_ids.reserve(rows.size());
    for (const auto r : rows) out.pair_ids.push_back(pair_ids[r]);
  }
  if (!labels.empty()) {
    out.labels.reserve(rows.size());
    for (const auto r : rows) out.labels.push_back(labels[r]);
  }
  return out;
}

WindowNodeCache build_window_cache(const graph::SnapshotWindow& w, unsigned threads) {
  WindowNodeCache cache;
  const NodeId n = w.y1.num_nodes();
  for (int age = 0; age < 3; ++age) {
    cache.avg_degree[age].resize(n);
    cache.clustering[age].resize(n);
    const auto& s = w.by_age(age);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t u = begin; u < end; ++u) {
        cache.avg_degree[age][u] = avg_neighbor_degree(s, static_cast<NodeId>(u));
        cache.clustering[age][u] = clustering_coefficient(s, static_cast<NodeId>(u));
      }
    });
  }
  return cache;
}

FeatureMatrix extract_window(const graph::SnapshotWindow& w,
                             std::span<const std::pair<NodeId, NodeId>> pairs,
                             unsigned threads) {
  return extract_window(w, pairs, build_window_cache(w, threads), threads);
}

FeatureMatrix extract_window(const graph::SnapshotWindow& w,
                             std::span<const std::pair<NodeId, NodeId>> pairs,
                             const WindowNodeCache& cache, unsigned threads) {
  const NodeId n = w.y1.num_nodes();
  for (const auto& [u, v] : pairs) {
    if (u >= n || v >= n)
      throw ValidationError("pair (" + std::to_string(u) + "," + std::to_string(v) +
                            ") out of range (n=" + std::to_string(n) + ")");
    if (u == v)
      throw ValidationError("self-pair (" + std::to_string(u) + "," +
                            std::to_string(v) + ") is not a valid candidate");
  }

  FeatureMatrix m;
  m.column_names.assign(window_column_names().begin(), window_column_names().end());
  m.n_rows = pairs.size();
  m.values.resize(pairs.size() * kWindowColumnCount);
  m.pair_ids.reserve(pairs.size());
  for (const auto& [u, v] : pairs)
    m.pair_ids.emplace_back(std::min(u, v), std::max(u, v));

  parallel_for(pairs.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const NodeId v1 = m.pair_ids[r].first;
      const NodeId v2 = m.pair_ids[r].second;
      double* row = m.values.data() + r * kWindowColumnCount;
      for (int age = 0; age < 3; ++age) {
        const auto& s = w.by_age(age);
        const double d1 = s.degree(v1);
        const double d2 = s.degree(v2);
        const auto st = intersect_stats(s, v1, v2);
        const auto cn = static_cast<double>(st.cn);
        const double gc = safe_ratio(cn * cn, d1 * d2);

        row[0 + 2 * age] = d1;
        row[1 + 2 * age] = d2;
        row[6 + age] = d1 + d2;
        row[9 + age] = cn;
        row[12 + age] = safe_ratio(cn, d1 + d2 - cn);
        row[15 + age] = safe_ratio(cn, std::min(d1, d2));
        row[18 + age] = gc;
        row[21 + age] = std::sqrt(gc);
        row[24 + age] = st.aa;
        row[27 + age] = st.ra;
        row[30 + age] = d1 * d2;
        row[33 + 2 * age] = cache.avg_degree[age][v1];
        row[34 + 2 * age] = cache.avg_degree[age][v2];
        row[39 + 2 * age] = cache.clustering[age][v1];
        row[40 + 2 * age] = cache.clustering[age][v2];
      }
    }
  });
  return m;
}

// --- persistence -------------------------------------------------------------

namespace {

constexpr char kMatrixMagic[4] = {'L', 'F', 'F', 'M'};
constexpr std::uint8_t kMatrixVersion = 1;
constexpr std::uint8_t kFlagLabels = 1;
constexpr std::uint8_t kFlagPairs = 2;

void format_double(char* buf, std::size_t cap, double v) {
  std::snprintf(buf, cap, "%.17g", v);
}

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_raw(std::istream& in, T& v, const std::string& path) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ValidationError(path + ": truncated matrix file");
}

}  // namespace

void save_matrix_csv(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write matrix file: " + path);
  out << "u,v,label";
  for (const auto& name : m.column_names) out << ',' << name;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    if (!m.pair_ids.empty())
      out << m.pair_ids[r].first << ',' << m.pair_ids[r].second;
    else
      out << ',';
    out << ',';
    if (!m.labels.empty()) out << static_cast<int>(m.labels[r]);
    const auto row = m.row(r);
    for (const double v : row) {
      format_double(buf, sizeof(buf), v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

FeatureMatrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open matrix file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty matrix file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  FeatureMatrix m;
  {
    std::size_t start = 0, field = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        const std::string name = line.substr(start, i - start);
        if (field >= 3) m.column_names.push_back(name);
        ++field;
        start = i + 1;
      }
    }
    if (field < 3) throw ValidationError(path + ": matrix header must start with u,v,label");
  }

  bool any_label = false;
  bool any_pair = false;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t start = 0, field = 0;
    NodeId u = 0, v = 0;
    int label = -1;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i != line.size() && line[i] != ',') continue;
      const std::string_view tok(line.data() + start, i - start);
      const auto fail = [&](const char* what) {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
      };
      if (field == 0 || field == 1) {
        std::int64_t x;
        if (!tok.empty()) {
          const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
          if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || x < 0)
            fail("bad node id");
          (field == 0 ? u : v) = static_cast<NodeId>(x);
          any_pair = true;
        }
      } else if (field == 2) {
        if (!tok.empty()) {
          if (tok != "0" && tok != "1") fail("label must be 0 or 1");
          label = tok[0] - '0';
        }
      } else {
        if (field - 3 >= m.column_names.size()) fail("too many fields");
        char* endp = nullptr;
        std::string tmp(tok);
        const double val = std::strtod(tmp.c_str(), &endp);
        if (endp != tmp.c_str() + tmp.size()) fail("bad numeric value");
        m.values.push_back(val);
      }
      ++field;
      start = i + 1;
    }
    if (field != 3 + m.column_names.size())
      throw ValidationError(path + ":" + std::to_string(line_no) + ": wrong field count");
    m.pair_ids.emplace_back(u, v);
    if (label >= 0) any_label = true;
    m.labels.push_back(label < 0 ? 0 : static_cast<std::uint8_t>(label));
    ++m.n_rows;
  }
  if (!any_label) m.labels.clear();
  if (!any_pair) m.pair_ids.clear();
  return m;
}

void save_matrix_binary(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write matrix file: " + path);
  out.write(kMatrixMagic, 4);
  write_raw(out, kMatrixVersion);
  const std::uint8_t flags = (m.labels.empty() ? 0 : kFlagLabels) |
                             (m.pair_ids.empty() ? 0 : kFlagPairs);
  write_raw(out, flags);
  write_raw(out, static_cast<std::uint32_t>(m.n_cols()));
  write_raw(out, static_cast<std::uint64_t>(m.n_rows));
  for (const auto& name : m.column_names) {
    write_raw(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  if (!m.pair_ids.empty())
    for (const auto& [u, v] : m.pair_ids) {
      write_raw(out, u);
      write_raw(out, v);
    }
  if (!m.labels.empty())
    out.write(reinterpret_cast<const char*>(m.labels.data()),
              static_cast<std::streamsize>(m.labels.size()));
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

FeatureMatrix load_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open matrix file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMatrixMagic, 4) != 0)
    throw ValidationError(path + ": not an LFFM matrix file (bad magic)");
  std::uint8_t version, flags;
  read_raw(in, version, path);
  if (version != kMatrixVersion)
    throw ValidationError(path + ": unsupported LFFM version " + std::to_string(version));
  read_raw(in, flags, path);
  std::uint32_t n_cols;
  std::uint64_t n_rows;
  read_raw(in, n_cols, path);
  read_raw(in, n_rows, path);

  FeatureMatrix m;
  m.n_rows = n_rows;
  m.column_names.reserve(n_cols);
  for (std::uint32_t c = 0; c < n_cols; ++c) {
    std::uint32_t len;
    read_raw(in, len, path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw ValidationError(path + ": truncated matrix file");
    m.column_names.push_back(std::move(name));
  }
  if (flags & kFlagPairs) {
    m.pair_ids.resize(n_rows);
    for (auto& [u, v] : m.pair_ids) {
      read_raw(in, u, path);
      read_raw(in, v, path);
    }
  }
  if (flags & kFlagLabels) {
    m.labels.resize(n_rows);
    in.read(reinterpret_cast<char*>(m.labels.data()),
            static_cast<std::streamsize>(n_rows));
    if (!in) throw ValidationError(path + ": truncated matrix file");
  }
  m.values.resize(n_rows * n_cols);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  if (!in) throw ValidationError(path + ": truncated matrix file");
  return m;
}

void save_matrix(const FeatureMatrix& m, const std::string& path,
                 const std::string& format) {
  if (format == "csv")
    save_matrix_csv(m, path);
  else if (format == "binary")
    save_matrix_binary(m, path);
  else
    throw ValidationError("unknown matrix format '" + format + "' (csv|binary)");
}

FeatureMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open matrix file: " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.close();
  return std::memcmp(magic, kMatrixMagic, 4) == 0 ? load_matrix_binary(path)
                                                  : load_matrix_csv(path);
}

}  // namespace lf::features
