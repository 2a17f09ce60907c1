#include "linkforecast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "linkforecast/eval.hpp"
#include "linkforecast/reduce.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lf::pipeline {

// --- config -------------------------------------------------------------------

void WindowSpec::validate(const std::string& what) const {
  if (!(y1 > y2 && y2 > y3))
    throw ValidationError(what + ": feature cutoffs must satisfy y1 > y2 > y3");
  if (!(label > y1))
    throw ValidationError(what + ": label cutoff must lie beyond y1");
}

WindowSpec RunConfig::resolve(const WindowSpec& years) const {
  if (year_to_cutoff.empty()) return years;
  const auto look = [&](std::int64_t y) {
    const auto it = year_to_cutoff.find(y);
    if (it == year_to_cutoff.end())
      throw ValidationError("config: year " + std::to_string(y) +
                            " is missing from the year_to_cutoff map");
    return it->second;
  };
  return {look(years.y1), look(years.y2), look(years.y3), look(years.label)};
}

void RunConfig::validate() const {
  if (edge_file.empty()) throw ValidationError("config: edge_file is required");
  if (edge_format != "auto") graph::edge_format_from_string(edge_format);
  if (matrix_format != "binary" && matrix_format != "csv")
    throw ValidationError("config: matrix_format must be binary or csv");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ValidationError("config: holdout_fraction must lie in [0, 1)");
  resolve(train_window).validate("config: train window");
  if (eval_window) resolve(*eval_window).validate("config: eval window");
  model.forest.validate();
  model.logistic.validate();
  if (model.search_enabled) model.search.validate();
  if (!groups.use_paper && !(groups.derive_threshold > 0.0 && groups.derive_threshold <= 1.0))
    throw ValidationError("config: derive_threshold must lie in (0, 1]");
}

graph::EdgeFileFormat resolve_edge_format(const std::string& format,
                                          const std::string& path) {
  if (format.empty() || format == "auto") return graph::detect_edge_format(path);
  return graph::edge_format_from_string(format);
}

namespace {

WindowSpec window_from_json(const json& j, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string("config: ") + what + " must be an object");
  WindowSpec w;
  w.y1 = j.at("y1").get<std::int64_t>();
  w.y2 = j.at("y2").get<std::int64_t>();
  w.y3 = j.at("y3").get<std::int64_t>();
  w.label = j.at("label").get<std::int64_t>();
  return w;
}

json window_to_json(const WindowSpec& w) {
  return {{"y1", w.y1}, {"y2", w.y2}, {"y3", w.y3}, {"label", w.label}};
}

model::ParamDist param_dist_from_json(const json& j, const std::string& name) {
  const auto kind = j.value("kind", "");
  if (kind == "categorical") {
    return model::ParamDist::make_categorical(j.at("values").get<std::vector<double>>());
  }
  const double lo = j.at("lo").get<double>();
  const double hi = j.at("hi").get<double>();
  if (kind == "uniform") return model::ParamDist::make_uniform(lo, hi);
  if (kind == "log_uniform") return model::ParamDist::make_log_uniform(lo, hi);
  if (kind == "int_uniform")
    return model::ParamDist::make_int_uniform(static_cast<std::int64_t>(lo),
                                              static_cast<std::int64_t>(hi));
  if (kind == "int_log_uniform")
    return model::ParamDist::make_int_log_uniform(static_cast<std::int64_t>(lo),
                                                  static_cast<std::int64_t>(hi));
  throw ValidationError("config: parameter '" + name + "' has unknown kind '" + kind + "'");
}

json param_dist_to_json(const model::ParamDist& d) {
  using Kind = model::ParamDist::Kind;
  switch (d.kind) {
    case Kind::uniform: return {{"kind", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    case Kind::log_uniform: return {{"kind", "log_uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    case Kind::int_uniform: return {{"kind", "int_uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    case Kind::int_log_uniform:
      return {{"kind", "int_log_uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    case Kind::categorical: return {{"kind", "categorical"}, {"values", d.values}};
  }
  throw std::logic_error("unreachable");
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": bad JSON: " + e.what());
  }
  return j;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config: root must be a JSON object");
  RunConfig cfg;
  cfg.edge_file = j.value("edge_file", "");
  cfg.edge_format = j.value("edge_format", "auto");
  if (j.contains("year_to_cutoff")) {
    for (const auto& [key, val] : j["year_to_cutoff"].items()) {
      try {
        cfg.year_to_cutoff[std::stoll(key)] = val.get<std::int64_t>();
      } catch (const std::exception&) {
        throw ValidationError("config: bad year key '" + key + "'");
      }
    }
  }
  cfg.train_window = window_from_json(j.at("train_window"), "train_window");
  if (j.contains("eval_window") && !j["eval_window"].is_null())
    cfg.eval_window = window_from_json(j["eval_window"], "eval_window");

  if (j.contains("sampling")) {
    const auto& s = j["sampling"];
    cfg.sampling.min_degree = s.value("min_degree", cfg.sampling.min_degree);
    if (s.contains("max_candidates") && !s["max_candidates"].is_null())
      cfg.sampling.max_candidates = s["max_candidates"].get<std::uint64_t>();
    cfg.sampling.balance = s.value("balance", cfg.sampling.balance);
    cfg.sampling.two_band = s.value("two_band", cfg.sampling.two_band);
  }
  if (j.contains("groups")) {
    const auto& g = j["groups"];
    cfg.groups.use_paper = g.value("use_paper", true);
    cfg.groups.derive_threshold = g.value("derive_threshold", 0.6);
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    const auto family = m.value("family", "forest");
    if (family == "forest")
      cfg.model.family = model::Family::forest;
    else if (family == "logistic")
      cfg.model.family = model::Family::logistic;
    else
      throw ValidationError("config: model family must be forest or logistic");
    if (m.contains("forest")) cfg.model.forest = model::forest_config_from_json(m["forest"]);
    if (m.contains("logistic"))
      cfg.model.logistic = model::logistic_config_from_json(m["logistic"]);
    if (m.contains("search") && !m["search"].is_null()) {
      cfg.model.search_enabled = true;
      const auto& s = m["search"];
      cfg.model.search.n_draws = s.value("n_draws", cfg.model.search.n_draws);
      cfg.model.search.k_folds = s.value("k_folds", cfg.model.search.k_folds);
      cfg.model.search.second_round = s.value("second_round", false);
      cfg.model.search.shrink_factor = s.value("shrink_factor", 0.5);
      if (s.contains("params"))
        for (const auto& [name, dj] : s["params"].items())
          cfg.model.search.params[name] = param_dist_from_json(dj, name);
    }
    if (m.contains("search_subsample_per_class") && !m["search_subsample_per_class"].is_null())
      cfg.model.search_subsample_per_class =
          m["search_subsample_per_class"].get<std::uint64_t>();
  }
  cfg.holdout_fraction = j.value("holdout_fraction", 0.1);
  cfg.output_dir = j.value("output_dir", "out");
  cfg.matrix_format = j.value("matrix_format", "binary");
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.threads = j.value("threads", 0u);
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["edge_file"] = cfg.edge_file;
  j["edge_format"] = cfg.edge_format;
  if (!cfg.year_to_cutoff.empty()) {
    json m = json::object();
    for (const auto& [y, c] : cfg.year_to_cutoff) m[std::to_string(y)] = c;
    j["year_to_cutoff"] = std::move(m);
  }
  j["train_window"] = window_to_json(cfg.train_window);
  if (cfg.eval_window) j["eval_window"] = window_to_json(*cfg.eval_window);
  j["sampling"] = {{"min_degree", cfg.sampling.min_degree},
                   {"balance", cfg.sampling.balance},
                   {"two_band", cfg.sampling.two_band}};
  if (cfg.sampling.max_candidates)
    j["sampling"]["max_candidates"] = *cfg.sampling.max_candidates;
  j["groups"] = {{"use_paper", cfg.groups.use_paper},
                 {"derive_threshold", cfg.groups.derive_threshold}};
  j["model"] = {{"family", cfg.model.family == model::Family::forest ? "forest" : "logistic"},
                {"forest", model::forest_config_to_json(cfg.model.forest)},
                {"logistic", model::logistic_config_to_json(cfg.model.logistic)}};
  if (cfg.model.search_enabled) {
    json params = json::object();
    for (const auto& [name, d] : cfg.model.search.params)
      params[name] = param_dist_to_json(d);
    j["model"]["search"] = {{"n_draws", cfg.model.search.n_draws},
                            {"k_folds", cfg.model.search.k_folds},
                            {"second_round", cfg.model.search.second_round},
                            {"shrink_factor", cfg.model.search.shrink_factor},
                            {"params", std::move(params)}};
  }
  if (cfg.model.search_subsample_per_class)
    j["model"]["search_subsample_per_class"] = *cfg.model.search_subsample_per_class;
  j["holdout_fraction"] = cfg.holdout_fraction;
  j["output_dir"] = cfg.output_dir;
  j["matrix_format"] = cfg.matrix_format;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j;
}

// --- stage cache ----------------------------------------------------------------

namespace {

class Stager {
 public:
  explicit Stager(fs::path dir) : dir_(std::move(dir)), path_(dir_ / "stage_cache.json") {
    if (fs::exists(path_)) {
      try {
        cache_ = read_json_file(path_);
      } catch (const std::exception&) {
        cache_ = json::object();
      }
    }
    if (!cache_.is_object()) cache_ = json::object();
  }

  bool fresh(const std::string& stage, std::uint64_t key,
             const std::vector<std::string>& outputs) const {
    if (!cache_.contains(stage)) return false;
    const auto& e = cache_[stage];
    if (e.value("key", "") != to_hex(key)) return false;
    if (!e.contains("outputs")) return false;
    for (const auto& rel : outputs) {
      const fs::path p = dir_ / rel;
      if (!fs::exists(p)) return false;
      if (!e["outputs"].contains(rel)) return false;
      if (e["outputs"][rel] != to_hex(hash_file(p.string()))) return false;
    }
    return true;
  }

  void record(const std::string& stage, std::uint64_t key,
              const std::vector<std::string>& outputs) {
    json h = json::object();
    for (const auto& rel : outputs)
      h[rel] = to_hex(hash_file((dir_ / rel).string()));
    cache_[stage] = {{"key", to_hex(key)}, {"outputs", std::move(h)}};
    write_json_file(path_, cache_);
  }

 private:
  fs::path dir_;
  fs::path path_;
  json cache_;
};

std::uint64_t key_of(std::initializer_list<std::string> parts) {
  std::string all;
  for (const auto& p : parts) {
    all += p;
    all += '\x1f';
  }
  return fnv1a64(all);
}

// Stage failures surface with the stage name attached, keeping the error
// class (validation vs runtime) intact.
template <class Fn>
void in_stage(const char* stage, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("stage ") + stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + stage + ": " + e.what());
  }
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string matrix_name(const std::string& base, const std::string& format) {
  return base + (format == "csv" ? ".csv" : ".bin");
}

// Train + holdout merged back into one ascending (u,v) sequence with tags.
std::vector<sampling::PairSample> merge_splits(std::vector<sampling::PairSample> a,
                                               std::vector<sampling::PairSample> b) {
  std::vector<sampling::PairSample> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out),
             [](const sampling::PairSample& x, const sampling::PairSample& y) {
               return std::pair{x.u, x.v} < std::pair{y.u, y.v};
             });
  return out;
}

features::FeatureMatrix extract_with_labels(const graph::SnapshotWindow& w,
                                            const std::vector<sampling::PairSample>& samples,
                                            unsigned threads) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  pairs.reserve(samples.size());
  for (const auto& s : samples) pairs.emplace_back(s.u, s.v);
  auto m = features::extract_window(w, pairs, threads);
  m.labels.reserve(samples.size());
  for (const auto& s : samples) m.labels.push_back(s.label);
  return m;
}

std::vector<std::uint64_t> rows_with_split(const std::vector<sampling::PairSample>& samples,
                                           sampling::Split split) {
  std::vector<std::uint64_t> idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == split) idx.push_back(i);
  return idx;
}

}  // namespace

// --- run ---------------------------------------------------------------------------

RunManifest run(const RunConfig& cfg) {
  cfg.validate();
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  Stager stager(out_dir);

  RunManifest man;
  const json cfg_json = run_config_to_json(cfg);
  man.config_hash = to_hex(fnv1a64(cfg_json.dump()));
  write_json_file(out_dir / "run_config.json", cfg_json);

  std::vector<std::string> artifacts{"run_config.json"};
  const auto note_stage = [&](const std::string& name, double secs, bool cached,
                              std::uint64_t rows, const std::vector<std::string>& outs) {
    man.stages.push_back({name, secs, cached, rows});
    for (const auto& o : outs) artifacts.push_back(o);
  };

  const WindowSpec train_w = cfg.resolve(cfg.train_window);
  std::optional<WindowSpec> eval_w;
  if (cfg.eval_window) eval_w = cfg.resolve(*cfg.eval_window);

  // ingest ------------------------------------------------------------------
  graph::TemporalEdgeList edges;
  in_stage("ingest", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t src_hash = hash_file(cfg.edge_file);
    const auto key = key_of({to_hex(src_hash), cfg.edge_format});
    const std::vector<std::string> outs{"edges.lfel", "ingest_summary.json"};
    const bool cached = stager.fresh("ingest", key, outs);
    if (cached) {
      edges = graph::TemporalEdgeList::ingest((out_dir / "edges.lfel").string(),
                                              graph::EdgeFileFormat::binary);
    } else {
      edges = graph::TemporalEdgeList::ingest(
          cfg.edge_file, resolve_edge_format(cfg.edge_format, cfg.edge_file));
      edges.save_binary((out_dir / "edges.lfel").string());
      const auto& s = edges.summary();
      write_json_file(out_dir / "ingest_summary.json",
                      json{{"nodes", s.nodes},
                           {"raw_records", s.raw_records},
                           {"self_loops_dropped", s.self_loops_dropped},
                           {"duplicate_records", s.duplicate_records}});
      stager.record("ingest", key, outs);
    }
    note_stage("ingest", seconds_since(t0), cached, edges.edges().size(), outs);
  });
  const std::uint64_t edges_hash = hash_file((out_dir / "edges.lfel").string());

  // sample ------------------------------------------------------------------
  sampling::SamplingConfig sample_cfg = cfg.sampling;
  sample_cfg.seed = derive_seed(cfg.seed, "sample");
  std::vector<sampling::PairSample> samples;
  in_stage("sample", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto key = key_of({to_hex(edges_hash), window_to_json(train_w).dump(),
                             std::to_string(sample_cfg.min_degree),
                             std::to_string(sample_cfg.balance),
                             std::to_string(sample_cfg.two_band),
                             sample_cfg.max_candidates
                                 ? std::to_string(*sample_cfg.max_candidates)
                                 : "none",
                             std::to_string(sample_cfg.seed),
                             std::to_string(cfg.holdout_fraction)});
    const std::vector<std::string> outs{"train_samples.csv"};
    const bool cached = stager.fresh("sample", key, outs);
    if (cached) {
      samples = sampling::load_samples_csv((out_dir / "train_samples.csv").string());
    } else {
      const graph::Snapshot feature_snap(edges, train_w.y1);
      const graph::Snapshot label_snap(edges, train_w.label);
      auto drawn = sampling::sample_window(feature_snap, label_snap, sample_cfg);
      auto [train_rows, holdout_rows] =
          sampling::holdout_split(drawn, cfg.holdout_fraction, derive_seed(cfg.seed, "holdout"));
      samples = merge_splits(std::move(train_rows), std::move(holdout_rows));
      sampling::save_samples_csv(samples, (out_dir / "train_samples.csv").string());
      stager.record("sample", key, outs);
    }
    note_stage("sample", seconds_since(t0), cached, samples.size(), outs);
  });

  // extract -----------------------------------------------------------------
  const std::string feats_train_name = matrix_name("features_train", cfg.matrix_format);
  const std::string feats_holdout_name = matrix_name("features_holdout", cfg.matrix_format);
  features::FeatureMatrix feats_train, feats_holdout;
  in_stage("extract", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto samples_hash = hash_file((out_dir / "train_samples.csv").string());
    const auto key = key_of({to_hex(edges_hash), to_hex(samples_hash),
                             window_to_json(train_w).dump(), cfg.matrix_format});
    const std::vector<std::string> outs{feats_train_name, feats_holdout_name};
    const bool cached = stager.fresh("extract", key, outs);
    if (cached) {
      feats_train = features::load_matrix((out_dir / feats_train_name).string());
      feats_holdout = features::load_matrix((out_dir / feats_holdout_name).string());
    } else {
      const graph::SnapshotWindow window(graph::Snapshot(edges, train_w.y1),
                                         graph::Snapshot(edges, train_w.y2),
                                         graph::Snapshot(edges, train_w.y3), train_w.label);
      const auto all = extract_with_labels(window, samples, cfg.threads);
      feats_train = all.select_rows(rows_with_split(samples, sampling::Split::train));
      feats_holdout = all.select_rows(rows_with_split(samples, sampling::Split::holdout));
      features::save_matrix(feats_train, (out_dir / feats_train_name).string(),
                            cfg.matrix_format);
      features::save_matrix(feats_holdout, (out_dir / feats_holdout_name).string(),
                            cfg.matrix_format);
      stager.record("extract", key, outs);
    }
    note_stage("extract", seconds_since(t0), cached, feats_train.n_rows + feats_holdout.n_rows,
               outs);
  });
  const auto feats_train_hash = hash_file((out_dir / feats_train_name).string());

  // screen --------------------------------------------------------------------
  in_stage("screen", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto key = key_of({to_hex(feats_train_hash)});
    const std::vector<std::string> outs{"screen.json"};
    const bool cached = stager.fresh("screen", key, outs);
    if (!cached) {
      write_json_file(out_dir / "screen.json",
                      reduce::screen_to_json(reduce::univariate_screen(feats_train)));
      stager.record("screen", key, outs);
    }
    note_stage("screen", seconds_since(t0), cached, feats_train.n_cols(), outs);
  });

  // reduce --------------------------------------------------------------------
  const std::string red_train_name = matrix_name("reduced_train", cfg.matrix_format);
  const std::string red_holdout_name = matrix_name("reduced_holdout", cfg.matrix_format);
  reduce::PcaGroupModel reducer;
  features::FeatureMatrix red_train, red_holdout;
  in_stage("reduce", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto key = key_of({to_hex(feats_train_hash), std::to_string(cfg.groups.use_paper),
                             std::to_string(cfg.groups.derive_threshold), cfg.matrix_format});
    const std::vector<std::string> outs{"reducer.json", "components.json", red_train_name,
                                        red_holdout_name};
    const bool cached = stager.fresh("reduce", key, outs);
    if (cached) {
      reducer = reduce::reducer_from_json(read_json_file(out_dir / "reducer.json"));
      red_train = features::load_matrix((out_dir / red_train_name).string());
      red_holdout = features::load_matrix((out_dir / red_holdout_name).string());
    } else {
      reduce::FeatureGroups groups;
      if (cfg.groups.use_paper) {
        groups = reduce::FeatureGroups::paper_default();
      } else {
        const auto pearson = reduce::pearson_matrix(feats_train);
        groups = reduce::FeatureGroups::derive(pearson, feats_train.n_cols(),
                                               cfg.groups.derive_threshold);
      }
      reducer = reduce::fit_reducer(feats_train, groups);
      red_train = reduce::apply_reducer(feats_train, reducer, cfg.threads);
      red_holdout = reduce::apply_reducer(feats_holdout, reducer, cfg.threads);
      write_json_file(out_dir / "reducer.json", reduce::reducer_to_json(reducer));
      write_json_file(out_dir / "components.json", reduce::export_components(reducer));
      features::save_matrix(red_train, (out_dir / red_train_name).string(), cfg.matrix_format);
      features::save_matrix(red_holdout, (out_dir / red_holdout_name).string(),
                            cfg.matrix_format);
      stager.record("reduce", key, outs);
    }
    note_stage("reduce", seconds_since(t0), cached, red_train.n_rows, outs);
  });
  const auto red_train_hash = hash_file((out_dir / red_train_name).string());

  // eval-window sample + extract + reduce --------------------------------------
  const std::string red_eval_name = matrix_name("reduced_eval", cfg.matrix_format);
  features::FeatureMatrix red_eval;
  if (eval_w) in_stage("eval_window", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    sampling::SamplingConfig eval_cfg = cfg.sampling;
    eval_cfg.seed = derive_seed(cfg.seed, "sample_eval");
    const std::string feats_eval_name = matrix_name("features_eval", cfg.matrix_format);
    const auto key = key_of({to_hex(edges_hash), window_to_json(*eval_w).dump(),
                             std::to_string(eval_cfg.min_degree),
                             std::to_string(eval_cfg.balance),
                             std::to_string(eval_cfg.two_band),
                             eval_cfg.max_candidates ? std::to_string(*eval_cfg.max_candidates)
                                                     : "none",
                             std::to_string(eval_cfg.seed),
                             to_hex(hash_file((out_dir / "reducer.json").string())),
                             cfg.matrix_format});
    const std::vector<std::string> outs{"eval_samples.csv", feats_eval_name, red_eval_name};
    const bool cached = stager.fresh("eval_window", key, outs);
    std::uint64_t rows = 0;
    if (cached) {
      red_eval = features::load_matrix((out_dir / red_eval_name).string());
      rows = red_eval.n_rows;
    } else {
      const graph::Snapshot feature_snap(edges, eval_w->y1);
      const graph::Snapshot label_snap(edges, eval_w->label);
      const auto eval_samples = sampling::sample_window(feature_snap, label_snap, eval_cfg);
      sampling::save_samples_csv(eval_samples, (out_dir / "eval_samples.csv").string());
      const graph::SnapshotWindow window(graph::Snapshot(edges, eval_w->y1),
                                         graph::Snapshot(edges, eval_w->y2),
                                         graph::Snapshot(edges, eval_w->y3), eval_w->label);
      const auto feats_eval = extract_with_labels(window, eval_samples, cfg.threads);
      red_eval = reduce::apply_reducer(feats_eval, reducer, cfg.threads);
      features::save_matrix(feats_eval, (out_dir / feats_eval_name).string(),
                            cfg.matrix_format);
      features::save_matrix(red_eval, (out_dir / red_eval_name).string(), cfg.matrix_format);
      stager.record("eval_window", key, outs);
      rows = red_eval.n_rows;
    }
    note_stage("eval_window", seconds_since(t0), cached, rows, outs);
  });

  // search -----------------------------------------------------------------------
  model::ForestConfig forest_cfg = cfg.model.forest;
  model::LogisticConfig logistic_cfg = cfg.model.logistic;
  if (cfg.model.search_enabled) in_stage("search", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    model::SearchSpec spec = cfg.model.search;
    spec.seed = derive_seed(cfg.seed, "search");
    json spec_echo{{"n_draws", spec.n_draws},
                   {"k_folds", spec.k_folds},
                   {"second_round", spec.second_round},
                   {"shrink_factor", spec.shrink_factor},
                   {"seed", spec.seed}};
    for (const auto& [name, d] : spec.params)
      spec_echo["params"][name] = param_dist_to_json(d);
    const auto key = key_of({to_hex(red_train_hash), spec_echo.dump(),
                             cfg.model.search_subsample_per_class
                                 ? std::to_string(*cfg.model.search_subsample_per_class)
                                 : "all",
                             cfg.model.family == model::Family::forest ? "forest"
                                                                       : "logistic"});
    const std::vector<std::string> outs{"search_trials.json"};
    const bool cached = stager.fresh("search", key, outs);
    std::uint64_t rows = 0;
    if (cached) {
      const auto trials = read_json_file(out_dir / "search_trials.json");
      if (cfg.model.family == model::Family::forest)
        forest_cfg = model::forest_config_from_json(trials.at("best").at("config"));
      else
        logistic_cfg = model::logistic_config_from_json(trials.at("best").at("config"));
      rows = trials.value("search_rows", std::uint64_t{0});
    } else {
      features::FeatureMatrix search_m;
      const features::FeatureMatrix* search_ptr = &red_train;
      if (cfg.model.search_subsample_per_class) {
        // Rebuild PairSample rows to reuse the class-balanced subsampler.
        std::vector<sampling::PairSample> rows_tmp(red_train.n_rows);
        for (std::size_t i = 0; i < red_train.n_rows; ++i)
          rows_tmp[i].label = red_train.labels[i];
        std::vector<std::uint64_t> keep;
        {
          std::vector<std::uint64_t> pos, neg;
          for (std::size_t i = 0; i < rows_tmp.size(); ++i)
            (rows_tmp[i].label ? pos : neg).push_back(i);
          const auto k = *cfg.model.search_subsample_per_class;
          if (pos.size() < k || neg.size() < k)
            throw ValidationError("search subsample: class smaller than requested k");
          std::mt19937_64 rng(derive_seed(cfg.seed, "search_subsample"));
          for (const auto* cls : {&pos, &neg})
            for (const auto i : sample_without_replacement(rng, cls->size(), k))
              keep.push_back((*cls)[i]);
          std::sort(keep.begin(), keep.end());
        }
        search_m = red_train.select_rows(keep);
        search_ptr = &search_m;
      }
      const auto result = cfg.model.family == model::Family::forest
                              ? model::random_search(*search_ptr, spec, forest_cfg, cfg.threads)
                              : model::random_search(*search_ptr, spec, logistic_cfg,
                                                     cfg.threads);
      if (cfg.model.family == model::Family::forest)
        forest_cfg = std::get<model::ForestConfig>(result.best_config);
      else
        logistic_cfg = std::get<model::LogisticConfig>(result.best_config);
      auto trials_json = model::search_result_to_json(result);
      trials_json["search_rows"] = search_ptr->n_rows;
      write_json_file(out_dir / "search_trials.json", trials_json);
      stager.record("search", key, outs);
      rows = search_ptr->n_rows;
    }
    note_stage("search", seconds_since(t0), cached, rows, outs);
  });

  // train -------------------------------------------------------------------------
  forest_cfg.seed = derive_seed(cfg.seed, "train");
  logistic_cfg.seed = derive_seed(cfg.seed, "train");
  const bool forest_family = cfg.model.family == model::Family::forest;
  const std::string model_name = forest_family ? "model.lfrf" : "model_logistic.json";
  model::ForestModel forest;
  model::LogisticModel logistic;
  in_stage("train", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto key =
        key_of({to_hex(red_train_hash),
                forest_family ? model::forest_config_to_json(forest_cfg).dump()
                              : model::logistic_config_to_json(logistic_cfg).dump(),
                forest_family ? "forest" : "logistic"});
    const std::vector<std::string> outs{model_name};
    const bool cached = stager.fresh("train", key, outs);
    if (cached) {
      if (forest_family)
        forest = model::load_model((out_dir / model_name).string());
      else
        logistic = model::load_logistic_json((out_dir / model_name).string());
    } else {
      if (forest_family) {
        forest = model::fit_forest(red_train, forest_cfg, cfg.threads);
        forest.reducer = reducer;
        model::save_model(forest, (out_dir / model_name).string());
      } else {
        logistic = model::fit_logistic(red_train, logistic_cfg);
        logistic.reducer = reducer;
        model::save_logistic_json(logistic, (out_dir / model_name).string());
      }
      stager.record("train", key, outs);
    }
    note_stage("train", seconds_since(t0), cached, red_train.n_rows, outs);
  });

  // evaluate ------------------------------------------------------------------------
  in_stage("evaluate", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    json metrics;
    metrics["family"] = forest_family ? "forest" : "logistic";
    metrics["model_config"] = forest_family
                                  ? model::forest_config_to_json(forest_cfg)
                                  : model::logistic_config_to_json(logistic_cfg);
    metrics["rows"] = {{"train", red_train.n_rows}, {"holdout", red_holdout.n_rows}};
    const auto predict = [&](const features::FeatureMatrix& m) {
      return forest_family ? forest.predict_proba(m, cfg.threads)
                           : logistic.predict_proba(m, cfg.threads);
    };
    metrics["train_auc"] = eval::auc(predict(red_train), red_train.labels).auc;
    if (red_holdout.n_rows > 0)
      metrics["holdout_auc"] = eval::auc(predict(red_holdout), red_holdout.labels).auc;
    if (eval_w) {
      metrics["rows"]["eval"] = red_eval.n_rows;
      metrics["eval_auc"] = eval::auc(predict(red_eval), red_eval.labels).auc;
    }
    write_json_file(out_dir / "metrics.json", metrics);
    man.metrics = std::move(metrics);
    note_stage("evaluate", seconds_since(t0), false,
               red_train.n_rows + red_holdout.n_rows + red_eval.n_rows,
               {"metrics.json"});
  });

  // manifest ---------------------------------------------------------------------------
  std::sort(artifacts.begin(), artifacts.end());
  artifacts.erase(std::unique(artifacts.begin(), artifacts.end()), artifacts.end());
  for (const auto& rel : artifacts) {
    const fs::path p = out_dir / rel;
    man.artifacts.push_back(
        {rel, fs::file_size(p), to_hex(hash_file(p.string()))});
  }
  write_json_file(out_dir / "manifest.json", manifest_to_json(man));
  return man;
}

json manifest_to_json(const RunManifest& m) {
  json stages = json::array();
  for (const auto& s : m.stages)
    stages.push_back({{"name", s.name},
                      {"seconds", s.seconds},
                      {"cached", s.cached},
                      {"rows_out", s.rows_out}});
  json artifacts = json::array();
  for (const auto& a : m.artifacts)
    artifacts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"fnv64", a.fnv64}});
  return {{"config_hash", m.config_hash},
          {"stages", std::move(stages)},
          {"metrics", m.metrics},
          {"artifacts", std::move(artifacts)}};
}

// --- score -----------------------------------------------------------------------------

void score(const std::string& model_path, const std::string& edge_path,
           const std::string& edge_format, std::int64_t y1, std::int64_t y2,
           std::int64_t y3, std::uint32_t min_degree, const std::string& out_path,
           unsigned threads) {
  const auto model = model::load_model(model_path);
  if (!model.reducer)
    throw ValidationError("model has no embedded reducer; cannot score raw pairs");
  if (!(y1 > y2 && y2 > y3))
    throw ValidationError("score: cutoffs must satisfy y1 > y2 > y3");

  const auto edges =
      graph::TemporalEdgeList::ingest(edge_path, resolve_edge_format(edge_format, edge_path));
  const graph::SnapshotWindow window(graph::Snapshot(edges, y1), graph::Snapshot(edges, y2),
                                     graph::Snapshot(edges, y3), y1 + 1);
  const auto cache = features::build_window_cache(window, threads);

  sampling::SamplingConfig scfg;
  scfg.min_degree = min_degree;
  sampling::CandidateStream stream(window.y1, scfg);

  struct Scored {
    NodeId u, v;
    double score;
  };
  std::vector<Scored> scored;
  std::vector<std::pair<NodeId, NodeId>> chunk;
  constexpr std::size_t kChunk = 1 << 18;
  NodeId u, v;
  bool more = true;
  while (more) {
    chunk.clear();
    while (chunk.size() < kChunk && (more = stream.next(u, v))) chunk.emplace_back(u, v);
    if (chunk.empty()) break;
    const auto feats = features::extract_window(window, chunk, cache, threads);
    const auto reduced = reduce::apply_reducer(feats, *model.reducer, threads);
    const auto scores = model.predict_proba(reduced, threads);
    for (std::size_t i = 0; i < chunk.size(); ++i)
      scored.push_back({chunk[i].first, chunk[i].second, scores[i]});
  }

  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::pair{a.u, a.v} < std::pair{b.u, b.v};
  });

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write score file: " + out_path);
  out << "u,v,score\n";
  char buf[40];
  for (const auto& s : scored) {
    std::snprintf(buf, sizeof(buf), "%.17g", s.score);
    out << s.u << ',' << s.v << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + out_path);
}

// --- synthetic generator ------------------------------------------------------------------

graph::TemporalEdgeList gen_synthetic(std::uint32_t n_nodes, std::uint64_t n_steps,
                                      GrowthRule rule, std::uint64_t seed) {
  if (n_steps > 0 && n_nodes < 2)
    throw ValidationError("synthetic graph needs at least 2 nodes");
  std::mt19937_64 rng(seed);
  std::vector<graph::TemporalEdge> edges;
  edges.reserve(n_steps);

  // Urn holds each node once plus one copy per incident edge, so draws are
  // proportional to degree + 1.
  std::vector<NodeId> urn;
  if (rule == GrowthRule::preferential_attachment && n_steps > 0) {
    urn.reserve(n_nodes + 2 * n_steps);
    for (NodeId i = 0; i < n_nodes; ++i) urn.push_back(i);
  }

  for (std::uint64_t step = 1; step <= n_steps; ++step) {
    NodeId a, b;
    if (rule == GrowthRule::preferential_attachment) {
      a = urn[uniform_below(rng, urn.size())];
      do {
        b = urn[uniform_below(rng, urn.size())];
      } while (b == a);
      urn.push_back(a);
      urn.push_back(b);
    } else {
      a = static_cast<NodeId>(uniform_below(rng, n_nodes));
      do {
        b = static_cast<NodeId>(uniform_below(rng, n_nodes));
      } while (b == a);
    }
    edges.push_back({a, b, static_cast<std::int64_t>(step)});
  }
  return graph::TemporalEdgeList::from_edges(std::move(edges));
}

}  // namespace lf::pipeline

// --- drift -----------------------------------------------------------------------------------

namespace lf::eval {

DriftReport drift_report(const graph::TemporalEdgeList& edges,
                         const std::vector<pipeline::WindowSpec>& windows,
                         const DriftConfig& cfg) {
  if (windows.empty()) throw ValidationError("drift: no windows given");
  for (std::size_t i = 0; i < windows.size(); ++i)
    windows[i].validate("drift window " + std::to_string(i));
  cfg.model.forest.validate();
  cfg.model.logistic.validate();

  struct PerWindow {
    std::vector<sampling::PairSample> samples;  // merged, split-tagged
    features::FeatureMatrix feats;              // 45 columns + labels
    std::vector<std::uint64_t> train_rows, holdout_rows;
  };
  std::vector<PerWindow> per(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    sampling::SamplingConfig scfg = cfg.sampling;
    scfg.seed = derive_seed(derive_seed(cfg.seed, "drift_sample"), i);
    const graph::Snapshot feature_snap(edges, w.y1);
    const graph::Snapshot label_snap(edges, w.label);
    auto drawn = sampling::sample_window(feature_snap, label_snap, scfg);
    auto [tr, ho] = sampling::holdout_split(
        drawn, cfg.holdout_fraction, derive_seed(derive_seed(cfg.seed, "drift_holdout"), i));
    std::vector<sampling::PairSample> merged;
    merged.reserve(tr.size() + ho.size());
    std::merge(tr.begin(), tr.end(), ho.begin(), ho.end(), std::back_inserter(merged),
               [](const sampling::PairSample& a, const sampling::PairSample& b) {
                 return std::pair{a.u, a.v} < std::pair{b.u, b.v};
               });

    const graph::SnapshotWindow window(graph::Snapshot(edges, w.y1),
                                       graph::Snapshot(edges, w.y2),
                                       graph::Snapshot(edges, w.y3), w.label);
    std::vector<std::pair<NodeId, NodeId>> pairs;
    pairs.reserve(merged.size());
    for (const auto& s : merged) pairs.emplace_back(s.u, s.v);
    per[i].feats = features::extract_window(window, pairs, cfg.threads);
    per[i].feats.labels.reserve(merged.size());
    for (const auto& s : merged) per[i].feats.labels.push_back(s.label);
    for (std::size_t r = 0; r < merged.size(); ++r)
      (merged[r].split == sampling::Split::holdout ? per[i].holdout_rows
                                                   : per[i].train_rows)
          .push_back(r);
    per[i].samples = std::move(merged);
  }

  DriftReport report;
  report.windows = windows;
  const bool forest_family = cfg.model.family == model::Family::forest;
  for (std::size_t ti = 0; ti < windows.size(); ++ti) {
    const auto train_feats = per[ti].feats.select_rows(per[ti].train_rows);
    reduce::FeatureGroups groups;
    if (cfg.groups.use_paper) {
      groups = reduce::FeatureGroups::paper_default();
    } else {
      groups = reduce::FeatureGroups::derive(reduce::pearson_matrix(train_feats),
                                             train_feats.n_cols(), cfg.groups.derive_threshold);
    }
    const auto reducer = reduce::fit_reducer(train_feats, groups);
    const auto red_train = reduce::apply_reducer(train_feats, reducer, cfg.threads);

    model::ForestModel forest;
    model::LogisticModel logistic;
    if (forest_family) {
      auto fc = cfg.model.forest;
      fc.seed = derive_seed(derive_seed(cfg.seed, "drift_train"), ti);
      forest = model::fit_forest(red_train, fc, cfg.threads);
    } else {
      auto lc = cfg.model.logistic;
      lc.seed = derive_seed(derive_seed(cfg.seed, "drift_train"), ti);
      logistic = model::fit_logistic(red_train, lc);
    }
    const auto predict = [&](const features::FeatureMatrix& m) {
      return forest_family ? forest.predict_proba(m, cfg.threads)
                           : logistic.predict_proba(m, cfg.threads);
    };

    for (std::size_t ej = 0; ej < windows.size(); ++ej) {
      DriftCell cell;
      cell.train_window = ti;
      cell.eval_window = ej;
      if (ej == ti) {
        const auto ho = per[ti].feats.select_rows(per[ti].holdout_rows);
        if (ho.n_rows == 0)
          throw ValidationError("drift: empty holdout for window " + std::to_string(ti) +
                                " (holdout_fraction too small)");
        const auto red = reduce::apply_reducer(ho, reducer, cfg.threads);
        cell.auc_value = auc(predict(red), red.labels).auc;
        cell.rows = red.n_rows;
        cell.holdout = true;
      } else {
        const auto red = reduce::apply_reducer(per[ej].feats, reducer, cfg.threads);
        cell.auc_value = auc(predict(red), red.labels).auc;
        cell.rows = red.n_rows;
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

std::pair<std::vector<pipeline::WindowSpec>, DriftConfig> drift_config_from_json(
    const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("windows") || !j["windows"].is_array() ||
      j["windows"].empty())
    throw ValidationError("drift config: non-empty 'windows' array required");
  std::vector<pipeline::WindowSpec> windows;
  for (const auto& wj : j["windows"])
    windows.push_back(pipeline::window_from_json(wj, "windows"));

  // The section shapes match the run config; parse through it with a stub
  // window and lift out the shared parts.
  json stub = j;
  stub.erase("windows");
  stub["edge_file"] = "unused";
  stub["train_window"] = {{"y1", 3}, {"y2", 2}, {"y3", 1}, {"label", 4}};
  const auto rc = pipeline::run_config_from_json(stub);

  DriftConfig cfg;
  cfg.sampling = rc.sampling;
  cfg.groups = rc.groups;
  cfg.model = rc.model;
  cfg.holdout_fraction = j.value("holdout_fraction", 0.1);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.threads = j.value("threads", 0u);
  return {std::move(windows), std::move(cfg)};
}

nlohmann::json drift_to_json(const DriftReport& r) {
  json windows = json::array();
  for (const auto& w : r.windows)
    windows.push_back({{"y1", w.y1}, {"y2", w.y2}, {"y3", w.y3}, {"label", w.label}});
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"train_window", c.train_window},
                     {"eval_window", c.eval_window},
                     {"auc", c.auc_value},
                     {"rows", c.rows},
                     {"holdout", c.holdout}});
  return {{"windows", std::move(windows)}, {"cells", std::move(cells)}};
}

std::string drift_to_csv(const DriftReport& r) {
  std::string out = "train_window,eval_window,auc,rows,holdout\n";
  char buf[64];
  for (const auto& c : r.cells) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%llu,%d\n", c.train_window,
                  c.eval_window, c.auc_value,
                  static_cast<unsigned long long>(c.rows), c.holdout ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string drift_to_table(const DriftReport& r) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-14s %-14s %10s %10s %8s\n", "train(y1)", "eval(y1)",
                "auc", "rows", "holdout");
  out += buf;
  for (const auto& c : r.cells) {
    std::snprintf(buf, sizeof(buf), "%-14lld %-14lld %10.4f %10llu %8s\n",
                  static_cast<long long>(r.windows[c.train_window].y1),
                  static_cast<long long>(r.windows[c.eval_window].y1), c.auc_value,
                  static_cast<unsigned long long>(c.rows), c.holdout ? "yes" : "no");
    out += buf;
  }
  return out;
}

}  // namespace lf::eval
