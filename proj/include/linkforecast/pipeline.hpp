#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "linkforecast/graph.hpp"
#include "linkforecast/model.hpp"
#include "linkforecast/sampling.hpp"

namespace lf::pipeline {

// Cutoffs of one train/eval window: three feature snapshots (newest first)
// plus the label snapshot.
struct WindowSpec {
  std::int64_t y1 = 0;
  std::int64_t y2 = 0;
  std::int64_t y3 = 0;
  std::int64_t label = 0;

  void validate(const std::string& what) const;
  bool operator==(const WindowSpec&) const = default;
};

struct GroupsSection {
  bool use_paper = true;          // false: derive groups from the Pearson matrix
  double derive_threshold = 0.6;
};

struct ModelSection {
  model::Family family = model::Family::forest;
  model::ForestConfig forest;
  model::LogisticConfig logistic;
  bool search_enabled = false;
  model::SearchSpec search;
  // Balanced per-class subsample used only for the search stage.
  std::optional<std::uint64_t> search_subsample_per_class;
};

// Windows are written in "year" space and translated through year_to_cutoff;
// an empty map means years already are cutoffs.
struct RunConfig {
  std::string edge_file;
  std::string edge_format = "auto";  // auto|csv|tsv|binary
  std::map<std::int64_t, std::int64_t> year_to_cutoff;
  WindowSpec train_window;  // in year space
  std::optional<WindowSpec> eval_window;
  sampling::SamplingConfig sampling;
  GroupsSection groups;
  ModelSection model;
  double holdout_fraction = 0.1;
  std::string output_dir = "out";
  std::string matrix_format = "binary";  // binary|csv
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const;
  WindowSpec resolve(const WindowSpec& years) const;  // year space -> cutoff space
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// "auto" probes the file for the LFEL magic; otherwise csv|tsv|binary.
graph::EdgeFileFormat resolve_edge_format(const std::string& format,
                                          const std::string& path);

struct StageInfo {
  std::string name;
  double seconds = 0.0;
  bool cached = false;
  std::uint64_t rows_out = 0;
};

struct ArtifactInfo {
  std::string path;      // relative to the output dir
  std::uint64_t bytes = 0;
  std::string fnv64;
};

struct RunManifest {
  std::string config_hash;
  std::vector<StageInfo> stages;
  nlohmann::json metrics;
  std::vector<ArtifactInfo> artifacts;
};

nlohmann::json manifest_to_json(const RunManifest& m);

// Executes ingest -> snapshots -> sample -> extract -> screen -> reduce ->
// train -> evaluate, persisting every intermediate under cfg.output_dir and
// writing manifest.json. Stages whose inputs are unchanged (by content hash)
// are reloaded instead of recomputed. Fixed config/seed/threads reproduce
// byte-identical model and metrics files.
RunManifest run(const RunConfig& cfg);

// Streams candidate pairs of the given window, applies the model's embedded
// reducer and forest, writes "u,v,score" sorted by descending score.
void score(const std::string& model_path, const std::string& edge_path,
           const std::string& edge_format, std::int64_t y1, std::int64_t y2,
           std::int64_t y3, std::uint32_t min_degree, const std::string& out_path,
           unsigned threads = 0);

enum class GrowthRule { preferential_attachment, uniform };

// Seeded temporal growth: at each step s = 1..n_steps one edge (u, v) with
// t = s attaches, endpoints drawn with probability proportional to
// (degree + 1) under the preferential rule, uniformly otherwise.
graph::TemporalEdgeList gen_synthetic(std::uint32_t n_nodes, std::uint64_t n_steps,
                                      GrowthRule rule, std::uint64_t seed);

}  // namespace lf::pipeline

namespace lf::eval {

struct DriftConfig {
  sampling::SamplingConfig sampling;
  pipeline::GroupsSection groups;
  pipeline::ModelSection model;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct DriftCell {
  std::size_t train_window = 0;
  std::size_t eval_window = 0;
  double auc_value = 0.0;
  std::uint64_t rows = 0;
  bool holdout = false;  // diagonal cells score the train window's holdout
};

struct DriftReport {
  std::vector<pipeline::WindowSpec> windows;
  std::vector<DriftCell> cells;  // train-major, |windows|^2 entries
};

// Trains one model per window and evaluates it on every window's labeled
// sample (its own holdout on the diagonal).
DriftReport drift_report(const graph::TemporalEdgeList& edges,
                         const std::vector<pipeline::WindowSpec>& windows,
                         const DriftConfig& cfg);

// JSON: {"windows": [{y1,y2,y3,label}...], "sampling": {...}, "groups": {...},
// "model": {...}, "holdout_fraction": r, "seed": s}.
std::pair<std::vector<pipeline::WindowSpec>, DriftConfig> drift_config_from_json(
    const nlohmann::json& j);

nlohmann::json drift_to_json(const DriftReport& r);
std::string drift_to_csv(const DriftReport& r);
std::string drift_to_table(const DriftReport& r);  // fixed-width text

}  // namespace lf::eval
