#include "linkforecast/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "linkforecast/common.hpp"

namespace lf::reduce {

void FeatureGroups::validate(std::size_t n_cols) const {
  std::vector<int> seen(n_cols, 0);
  const auto mark = [&](std::uint32_t c, const std::string& where) {
    if (c >= n_cols)
      throw ValidationError("feature group '" + where + "' references column " +
                            std::to_string(c) + " beyond layout width " +
                            std::to_string(n_cols));
    if (seen[c]++)
      throw ValidationError("column " + std::to_string(c) +
                            " appears in more than one group (" + where + ")");
  };
  for (const auto& g : groups) {
    if (g.cols.empty()) throw ValidationError("feature group '" + g.name + "' is empty");
    for (const auto c : g.cols) mark(c, g.name);
  }
  for (const auto c : passthrough) mark(c, "passthrough");
  for (std::size_t c = 0; c < n_cols; ++c)
    if (!seen[c])
      throw ValidationError("column " + std::to_string(c) +
                            " belongs to no group and is not passthrough");
}

FeatureGroups FeatureGroups::paper_default() {
  FeatureGroups fg;
  fg.groups = {
      {"G1", {0, 2, 4}},                            // DC history of v1
      {"G2", {1, 3, 5}},                            // DC history of v2
      {"G3", {6, 7, 8}},                            // TN history
      {"G4", {9, 10, 11}},                          // CN history
      {"G5", {12, 13, 14, 18, 19, 20, 21, 22, 23}}, // JC + GC + CC histories
      {"G6", {15, 16, 17}},                         // SC history
      {"G7", {24, 25, 26, 27, 28, 29, 30, 31, 32}}, // AA + RA + PA histories
  };
  fg.passthrough.resize(12);
  std::iota(fg.passthrough.begin(), fg.passthrough.end(), 33);  // AD + CI columns
  return fg;
}

FeatureGroups FeatureGroups::derive(const std::vector<double>& pearson,
                                    std::size_t n_cols, double threshold) {
  if (pearson.size() != n_cols * n_cols)
    throw ValidationError("pearson matrix size does not match column count");
  const auto r = [&](std::size_t i, std::size_t j) { return pearson[i * n_cols + j]; };

  FeatureGroups fg;
  std::vector<bool> assigned(n_cols, false);
  std::size_t next_id = 1;
  for (std::size_t i = 0; i < n_cols; ++i) {
    if (assigned[i]) continue;
    std::vector<std::uint32_t> cluster{static_cast<std::uint32_t>(i)};
    assigned[i] = true;
    for (std::size_t j = i + 1; j < n_cols; ++j) {
      if (assigned[j]) continue;
      // Complete linkage: j joins only if it clears the threshold against
      // every current member.
      bool all = true;
      for (const auto c : cluster)
        if (std::abs(r(c, j)) < threshold) {
          all = false;
          break;
        }
      if (all) {
        cluster.push_back(static_cast<std::uint32_t>(j));
        assigned[j] = true;
      }
    }
    if (cluster.size() == 1) {
      fg.passthrough.push_back(cluster[0]);
    } else {
      fg.groups.push_back({"D" + std::to_string(next_id++), std::move(cluster)});
    }
  }
  return fg;
}

// --- univariate screen --------------------------------------------------------

namespace {

constexpr std::size_t kScreenBins = 16;

// Equal-frequency cut points; ties collapse so identical values always land
// in the same bin.
std::vector<double> bin_edges(std::vector<double> sorted) {
  std::vector<double> edges;
  const std::size_t n = sorted.size();
  for (std::size_t b = 1; b < kScreenBins; ++b) {
    const double e = sorted[b * n / kScreenBins];
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

std::size_t bin_of(const std::vector<double>& edges, double x) {
  return static_cast<std::size_t>(
      std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

}  // namespace

std::vector<ScreenEntry> univariate_screen(const features::FeatureMatrix& m) {
  if (!m.has_labels()) throw ValidationError("univariate screen: matrix has no labels");
  if (m.n_rows == 0) throw ValidationError("univariate screen: empty matrix");
  const double n = static_cast<double>(m.n_rows);

  std::vector<ScreenEntry> out;
  out.reserve(m.n_cols());
  for (std::size_t c = 0; c < m.n_cols(); ++c) {
    ScreenEntry e;
    e.column = m.column_names[c];

    auto col = m.column(c);
    auto sorted = col;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
      e.note = "constant column; chi-squared skipped";
      out.push_back(std::move(e));
      continue;
    }
    const auto edges = bin_edges(std::move(sorted));
    const std::size_t n_bins = edges.size() + 1;

    std::vector<double> joint(n_bins * 2, 0.0);
    double class_total[2] = {0.0, 0.0};
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      const std::size_t b = bin_of(edges, col[r]);
      const int y = m.labels[r] ? 1 : 0;
      joint[b * 2 + y] += 1.0;
      class_total[y] += 1.0;
    }

    double mi = 0.0, chi2 = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double bin_total = joint[b * 2] + joint[b * 2 + 1];
      if (bin_total == 0.0) continue;
      for (int y = 0; y < 2; ++y) {
        const double expected = bin_total * class_total[y] / n;
        if (expected > 0.0) {
          const double observed = joint[b * 2 + y];
          chi2 += (observed - expected) * (observed - expected) / expected;
          if (observed > 0.0)
            mi += (observed / n) * std::log(observed / expected);
        }
      }
    }
    e.mutual_information = mi;
    e.chi_squared = chi2;
    e.chi_squared_valid = true;
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json screen_to_json(const std::vector<ScreenEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json j{{"column", e.column},
                     {"mutual_information", e.mutual_information}};
    if (e.chi_squared_valid) j["chi_squared"] = e.chi_squared;
    if (!e.note.empty()) j["note"] = e.note;
    arr.push_back(std::move(j));
  }
  return arr;
}

// --- Pearson correlation -------------------------------------------------------

std::vector<double> pearson_matrix(const features::FeatureMatrix& m,
                                   std::vector<std::string>* warnings) {
  const std::size_t p = m.n_cols();
  const std::size_t n = m.n_rows;
  if (n < 2) throw ValidationError("pearson: need at least 2 rows");

  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += m.at(r, c);
    mean[c] = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = m.at(r, c) - mean[c];
      ss += d * d;
    }
    sd[c] = std::sqrt(ss);
    if (sd[c] == 0.0 && warnings)
      warnings->push_back("column '" + m.column_names[c] +
                          "' is constant; correlations reported as 0");
  }

  std::vector<double> r(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    r[i * p + i] = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      double cov = 0.0;
      if (sd[i] > 0.0 && sd[j] > 0.0) {
        for (std::size_t k = 0; k < n; ++k)
          cov += (m.at(k, i) - mean[i]) * (m.at(k, j) - mean[j]);
        cov /= sd[i] * sd[j];
        cov = std::clamp(cov, -1.0, 1.0);
      }
      r[i * p + j] = cov;
      r[j * p + i] = cov;
    }
  }
  return r;
}

// --- grouped PCA ----------------------------------------------------------------

namespace {

constexpr double kPowerTolerance = 1e-12;
constexpr int kPowerMaxIter = 10000;

// First eigenvector of a tiny symmetric PSD matrix by power iteration.
// All-ones start; if the start lies exactly in the null space, restart from
// the axis of largest diagonal.
std::vector<double> power_iteration_first(const std::vector<double>& cov, std::size_t g) {
  std::vector<double> v(g, 1.0 / std::sqrt(static_cast<double>(g)));
  std::vector<double> w(g);
  bool restarted = false;
  for (int it = 0; it < kPowerMaxIter; ++it) {
    for (std::size_t i = 0; i < g; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < g; ++j) s += cov[i * g + j] * v[j];
      w[i] = s;
    }
    double norm = 0.0;
    for (const double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      if (restarted) break;
      restarted = true;
      std::size_t best = 0;
      for (std::size_t i = 1; i < g; ++i)
        if (cov[i * g + i] > cov[best * g + best]) best = i;
      std::fill(v.begin(), v.end(), 0.0);
      v[best] = 1.0;
      continue;
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      w[i] /= norm;
      delta = std::max(delta, std::abs(w[i] - v[i]));
    }
    v = w;
    if (delta < kPowerTolerance) break;
  }
  return v;
}

void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0.0)
    for (auto& x : v) x = -x;
}

}  // namespace

PcaGroupModel fit_reducer(const features::FeatureMatrix& m, const FeatureGroups& groups) {
  groups.validate(m.n_cols());
  if (m.n_rows < 2) throw ValidationError("reducer fit: need at least 2 rows");
  const std::size_t n = m.n_rows;

  PcaGroupModel model;
  model.input_columns = m.column_names;
  model.passthrough = groups.passthrough;
  model.fitted_on = n;

  for (const auto& g : groups.groups) {
    PcaGroup pg;
    pg.name = g.name;
    pg.cols = g.cols;
    const std::size_t w = g.cols.size();

    pg.mean.assign(w, 0.0);
    for (std::size_t j = 0; j < w; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += m.at(r, g.cols[j]);
      pg.mean[j] = s / static_cast<double>(n);
    }

    // Group covariance, sample-normalized. Centered but deliberately not
    // variance-scaled: coefficients live on the raw feature scales.
    std::vector<double> cov(w * w, 0.0);
    std::vector<double> centered(w);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < w; ++j) centered[j] = m.at(r, g.cols[j]) - pg.mean[j];
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = i; j < w; ++j) cov[i * w + j] += centered[i] * centered[j];
    }
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = i; j < w; ++j) {
        cov[i * w + j] /= static_cast<double>(n - 1);
        cov[j * w + i] = cov[i * w + j];
      }

    double trace = 0.0;
    for (std::size_t i = 0; i < w; ++i) trace += cov[i * w + i];
    if (trace == 0.0)
      throw ValidationError("reducer fit: group '" + g.name + "' has zero variance");

    pg.component = power_iteration_first(cov, w);
    fix_sign(pg.component);

    // Rayleigh quotient = top eigenvalue estimate.
    double lambda = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < w; ++j) s += cov[i * w + j] * pg.component[j];
      lambda += pg.component[i] * s;
    }
    pg.explained_variance_ratio = lambda / trace;
    model.groups.push_back(std::move(pg));
  }

  model.output_columns.clear();
  for (const auto& pg : model.groups) model.output_columns.push_back("PCA-" + pg.name);
  for (const auto c : model.passthrough)
    model.output_columns.push_back(m.column_names[c]);

  // Standardization parameters for the projected layout, population sd.
  const std::size_t out_w = model.output_columns.size();
  model.standardize_mean.assign(out_w, 0.0);
  model.standardize_sd.assign(out_w, 0.0);
  std::vector<double> row(out_w);
  std::vector<double> sum(out_w, 0.0), sumsq(out_w, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t o = 0;
    for (const auto& pg : model.groups) {
      double proj = 0.0;
      for (std::size_t j = 0; j < pg.cols.size(); ++j)
        proj += pg.component[j] * (m.at(r, pg.cols[j]) - pg.mean[j]);
      row[o++] = proj;
    }
    for (const auto c : model.passthrough) row[o++] = m.at(r, c);
    for (std::size_t k = 0; k < out_w; ++k) {
      sum[k] += row[k];
      sumsq[k] += row[k] * row[k];
    }
  }
  for (std::size_t k = 0; k < out_w; ++k) {
    model.standardize_mean[k] = sum[k] / static_cast<double>(n);
    const double var =
        sumsq[k] / static_cast<double>(n) - model.standardize_mean[k] * model.standardize_mean[k];
    model.standardize_sd[k] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return model;
}

features::FeatureMatrix apply_reducer(const features::FeatureMatrix& m,
                                      const PcaGroupModel& r, unsigned threads) {
  if (m.column_names != r.input_columns)
    throw ValidationError("reducer apply: matrix layout does not match the fitted layout");

  features::FeatureMatrix out;
  out.column_names = r.output_columns;
  out.n_rows = m.n_rows;
  out.pair_ids = m.pair_ids;
  out.labels = m.labels;
  const std::size_t out_w = r.output_columns.size();
  out.values.resize(m.n_rows * out_w);

  parallel_for(m.n_rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double* dst = out.values.data() + i * out_w;
      std::size_t o = 0;
      for (const auto& pg : r.groups) {
        double proj = 0.0;
        for (std::size_t j = 0; j < pg.cols.size(); ++j)
          proj += pg.component[j] * (m.at(i, pg.cols[j]) - pg.mean[j]);
        dst[o++] = proj;
      }
      for (const auto c : r.passthrough) dst[o++] = m.at(i, c);
      for (std::size_t k = 0; k < out_w; ++k)
        dst[k] = (dst[k] - r.standardize_mean[k]) / r.standardize_sd[k];
    }
  });
  return out;
}

nlohmann::json export_components(const PcaGroupModel& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& pg : r.groups) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (std::size_t j = 0; j < pg.cols.size(); ++j)
      coeffs.push_back({{"column", r.input_columns[pg.cols[j]]},
                        {"coefficient", pg.component[j]}});
    groups.push_back({{"group", pg.name},
                      {"explained_variance_ratio", pg.explained_variance_ratio},
                      {"first_component", std::move(coeffs)}});
  }
  return {{"groups", std::move(groups)}};
}

nlohmann::json reducer_to_json(const PcaGroupModel& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& pg : r.groups)
    groups.push_back({{"name", pg.name},
                      {"cols", pg.cols},
                      {"mean", pg.mean},
                      {"component", pg.component},
                      {"explained_variance_ratio", pg.explained_variance_ratio}});
  return {{"format", "lf-reducer"},
          {"version", 1},
          {"input_columns", r.input_columns},
          {"groups", std::move(groups)},
          {"passthrough", r.passthrough},
          {"output_columns", r.output_columns},
          {"standardize_mean", r.standardize_mean},
          {"standardize_sd", r.standardize_sd},
          {"fitted_on", r.fitted_on}};
}

PcaGroupModel reducer_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "lf-reducer")
    throw ValidationError("not a reducer JSON document");
  if (j.value("version", 0) != 1)
    throw ValidationError("unsupported reducer version");
  PcaGroupModel r;
  r.input_columns = j.at("input_columns").get<std::vector<std::string>>();
  for (const auto& gj : j.at("groups")) {
    PcaGroup pg;
    pg.name = gj.at("name").get<std::string>();
    pg.cols = gj.at("cols").get<std::vector<std::uint32_t>>();
    pg.mean = gj.at("mean").get<std::vector<double>>();
    pg.component = gj.at("component").get<std::vector<double>>();
    pg.explained_variance_ratio = gj.at("explained_variance_ratio").get<double>();
    r.groups.push_back(std::move(pg));
  }
  r.passthrough = j.at("passthrough").get<std::vector<std::uint32_t>>();
  r.output_columns = j.at("output_columns").get<std::vector<std::string>>();
  r.standardize_mean = j.at("standardize_mean").get<std::vector<double>>();
  r.standardize_sd = j.at("standardize_sd").get<std::vector<double>>();
  r.fitted_on = j.at("fitted_on").get<std::uint64_t>();
  return r;
}

}  // namespace lf::reduce
