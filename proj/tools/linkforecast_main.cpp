// linkforecast: temporal-graph link prediction from timestamped edge lists.
// Subcommands cover the full pipeline plus building blocks for scripting.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "linkforecast/eval.hpp"
#include "linkforecast/pipeline.hpp"
#include "linkforecast/reduce.hpp"

using nlohmann::json;
using namespace lf;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  return j;
}

void write_output(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    std::ofstream out(*path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + *path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + *path);
  } else {
    std::cout << text;
  }
}

graph::TemporalEdgeList load_edges(const std::string& path, const std::string& format) {
  return graph::TemporalEdgeList::ingest(path,
                                         pipeline::resolve_edge_format(format, path));
}

void save_edges_csv(const graph::TemporalEdgeList& el, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# u,v,t\n";
  for (const auto& e : el.edges()) out << e.u << ',' << e.v << ',' << e.t << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

json summary_json(const graph::IngestSummary& s) {
  return {{"nodes", s.nodes},
          {"raw_records", s.raw_records},
          {"self_loops_dropped", s.self_loops_dropped},
          {"duplicate_records", s.duplicate_records}};
}

model::ParamDist param_dist_from_cli_json(const std::string& name, const json& dj) {
  const auto kind = dj.value("kind", "");
  if (kind == "uniform") return model::ParamDist::make_uniform(dj.at("lo"), dj.at("hi"));
  if (kind == "log_uniform")
    return model::ParamDist::make_log_uniform(dj.at("lo"), dj.at("hi"));
  if (kind == "int_uniform")
    return model::ParamDist::make_int_uniform(dj.at("lo"), dj.at("hi"));
  if (kind == "int_log_uniform")
    return model::ParamDist::make_int_log_uniform(dj.at("lo"), dj.at("hi"));
  if (kind == "categorical")
    return model::ParamDist::make_categorical(dj.at("values").get<std::vector<double>>());
  throw ValidationError("search parameter '" + name + "': unknown kind '" + kind + "'");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"temporal-graph link prediction toolkit"};
  app.require_subcommand(1);

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "parse an edge list, report a summary");
  struct {
    std::string input, format = "auto";
    std::optional<std::string> output;
  } ing;
  ingest->add_option("--input", ing.input, "edge list file")->required();
  ingest->add_option("--format", ing.format, "auto|csv|tsv|binary");
  ingest->add_option("--output", ing.output, "write normalized edges as LFEL binary");
  ingest->callback([&] {
    const auto el = load_edges(ing.input, ing.format);
    if (ing.output) el.save_binary(*ing.output);
    std::cout << summary_json(el.summary()).dump(2) << '\n';
  });

  // ---- snapshot-stats ----
  auto* stats = app.add_subcommand("snapshot-stats", "degree statistics at a cutoff");
  struct {
    std::string input, format = "auto";
    std::int64_t cutoff = 0;
  } st;
  stats->add_option("--input", st.input, "edge list file")->required();
  stats->add_option("--format", st.format, "auto|csv|tsv|binary");
  stats->add_option("--cutoff", st.cutoff, "snapshot cutoff timestamp")->required();
  stats->callback([&] {
    const auto el = load_edges(st.input, st.format);
    const graph::Snapshot s(el, st.cutoff);
    std::vector<std::uint32_t> degrees(s.num_nodes());
    std::uint64_t isolated = 0, degree_sum = 0;
    std::uint32_t max_degree = 0;
    for (NodeId u = 0; u < s.num_nodes(); ++u) {
      degrees[u] = s.degree(u);
      degree_sum += degrees[u];
      max_degree = std::max(max_degree, degrees[u]);
      isolated += degrees[u] == 0;
    }
    std::sort(degrees.begin(), degrees.end());
    json out{{"cutoff", st.cutoff},
             {"nodes", s.num_nodes()},
             {"edges", s.num_edges()},
             {"possible_pairs", graph::num_possible_pairs(s.num_nodes())},
             {"isolated_nodes", isolated},
             {"max_degree", max_degree},
             {"median_degree", degrees.empty() ? 0 : degrees[degrees.size() / 2]},
             {"mean_degree", s.num_nodes() == 0
                                 ? 0.0
                                 : static_cast<double>(degree_sum) /
                                       static_cast<double>(s.num_nodes())}};
    std::cout << out.dump(2) << '\n';
  });

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic temporal graph");
  struct {
    std::uint32_t nodes = 0;
    std::uint64_t steps = 0;
    std::string rule = "pa", output, edge_format = "binary";
    std::uint64_t seed = 0;
  } sy;
  synth->add_option("--nodes", sy.nodes, "node count")->required();
  synth->add_option("--steps", sy.steps, "growth steps (one edge each)")->required();
  synth->add_option("--rule", sy.rule, "pa|uniform");
  synth->add_option("--seed", sy.seed, "generator seed");
  synth->add_option("--output", sy.output, "output edge file")->required();
  synth->add_option("--edge-format", sy.edge_format, "binary|csv");
  synth->callback([&] {
    pipeline::GrowthRule rule;
    if (sy.rule == "pa")
      rule = pipeline::GrowthRule::preferential_attachment;
    else if (sy.rule == "uniform")
      rule = pipeline::GrowthRule::uniform;
    else
      throw ValidationError("unknown growth rule '" + sy.rule + "' (pa|uniform)");
    const auto el = pipeline::gen_synthetic(sy.nodes, sy.steps, rule, sy.seed);
    if (sy.edge_format == "binary")
      el.save_binary(sy.output);
    else if (sy.edge_format == "csv")
      save_edges_csv(el, sy.output);
    else
      throw ValidationError("unknown edge format '" + sy.edge_format + "' (binary|csv)");
    std::cout << summary_json(el.summary()).dump(2) << '\n';
  });

  // ---- sample ----
  auto* sample = app.add_subcommand("sample", "balanced labeled candidate sample");
  struct {
    std::string input, format = "auto", output;
    std::int64_t y1 = 0, label_cutoff = 0;
    std::uint32_t min_degree = 10;
    std::optional<std::uint64_t> max_candidates;
    double holdout = 0.0;
    std::uint64_t seed = 0;
    bool no_balance = false, two_band = false;
  } sa;
  sample->add_option("--input", sa.input, "edge list file")->required();
  sample->add_option("--format", sa.format, "auto|csv|tsv|binary");
  sample->add_option("--y1", sa.y1, "feature snapshot cutoff")->required();
  sample->add_option("--label-cutoff", sa.label_cutoff, "label snapshot cutoff")->required();
  sample->add_option("--min-degree", sa.min_degree, "candidate degree filter");
  sample->add_option("--max-candidates", sa.max_candidates, "cap the candidate stream");
  sample->add_option("--holdout", sa.holdout, "stratified holdout fraction");
  sample->add_option("--seed", sa.seed, "sampling seed");
  sample->add_flag("--no-balance", sa.no_balance, "keep every labeled candidate");
  sample->add_flag("--two-band", sa.two_band, "add the 1 <= degree < min-degree band");
  sample->add_option("--output", sa.output, "samples CSV")->required();
  sample->callback([&] {
    if (sa.label_cutoff <= sa.y1)
      throw ValidationError("--label-cutoff must lie beyond --y1");
    const auto el = load_edges(sa.input, sa.format);
    sampling::SamplingConfig cfg;
    cfg.min_degree = sa.min_degree;
    cfg.max_candidates = sa.max_candidates;
    cfg.seed = sa.seed;
    cfg.balance = !sa.no_balance;
    cfg.two_band = sa.two_band;
    const graph::Snapshot feature_snap(el, sa.y1), label_snap(el, sa.label_cutoff);
    auto rows = sampling::sample_window(feature_snap, label_snap, cfg);
    if (sa.holdout > 0.0) {
      auto [tr, ho] =
          sampling::holdout_split(rows, sa.holdout, derive_seed(sa.seed, "holdout"));
      rows.clear();
      std::merge(tr.begin(), tr.end(), ho.begin(), ho.end(), std::back_inserter(rows),
                 [](const sampling::PairSample& a, const sampling::PairSample& b) {
                   return std::pair{a.u, a.v} < std::pair{b.u, b.v};
                 });
    }
    sampling::save_samples_csv(rows, sa.output);
    std::uint64_t pos = 0;
    for (const auto& r2 : rows) pos += r2.label;
    std::cout << json{{"rows", rows.size()}, {"positives", pos}}.dump(2) << '\n';
  });

  // ---- extract ----
  auto* extract = app.add_subcommand("extract", "window feature matrix for sampled pairs");
  struct {
    std::string input, format = "auto", samples, output, split = "all";
    std::string matrix_format = "binary";
    std::int64_t y1 = 0, y2 = 0, y3 = 0;
    unsigned threads = 0;
  } ex;
  extract->add_option("--input", ex.input, "edge list file")->required();
  extract->add_option("--format", ex.format, "auto|csv|tsv|binary");
  extract->add_option("--samples", ex.samples, "samples CSV")->required();
  extract->add_option("--y1", ex.y1, "newest feature cutoff")->required();
  extract->add_option("--y2", ex.y2, "middle feature cutoff")->required();
  extract->add_option("--y3", ex.y3, "oldest feature cutoff")->required();
  extract->add_option("--split", ex.split, "all|train|holdout");
  extract->add_option("--matrix-format", ex.matrix_format, "binary|csv");
  extract->add_option("--threads", ex.threads, "worker threads (0 = auto)");
  extract->add_option("--output", ex.output, "feature matrix file")->required();
  extract->callback([&] {
    const auto el = load_edges(ex.input, ex.format);
    auto rows = sampling::load_samples_csv(ex.samples);
    if (ex.split == "train" || ex.split == "holdout") {
      const auto want =
          ex.split == "holdout" ? sampling::Split::holdout : sampling::Split::train;
      std::erase_if(rows, [&](const sampling::PairSample& r) { return r.split != want; });
    } else if (ex.split != "all") {
      throw ValidationError("--split must be all|train|holdout");
    }
    const graph::SnapshotWindow w(graph::Snapshot(el, ex.y1), graph::Snapshot(el, ex.y2),
                                  graph::Snapshot(el, ex.y3), ex.y1 + 1);
    std::vector<std::pair<NodeId, NodeId>> pairs;
    pairs.reserve(rows.size());
    for (const auto& r2 : rows) pairs.emplace_back(r2.u, r2.v);
    auto m = features::extract_window(w, pairs, ex.threads);
    m.labels.reserve(rows.size());
    for (const auto& r2 : rows) m.labels.push_back(r2.label);
    features::save_matrix(m, ex.output, ex.matrix_format);
    std::cout << json{{"rows", m.n_rows}, {"columns", m.n_cols()}}.dump(2) << '\n';
  });

  // ---- reduce ----
  auto* red = app.add_subcommand("reduce", "fit/apply grouped PCA + standardization");
  struct {
    std::string features, groups = "paper";
    double derive_threshold = 0.6;
    std::optional<std::string> reducer_out, components_out, screen_out, apply_path,
        reduced_out, reducer_in;
    std::string matrix_format = "binary";
    unsigned threads = 0;
  } re;
  red->add_option("--features", re.features, "feature matrix to fit on")->required();
  red->add_option("--groups", re.groups, "paper|derive");
  red->add_option("--derive-threshold", re.derive_threshold, "|r| clustering threshold");
  red->add_option("--reducer-in", re.reducer_in, "skip fitting, load this reducer JSON");
  red->add_option("--reducer-out", re.reducer_out, "write fitted reducer JSON");
  red->add_option("--components-out", re.components_out, "write component report JSON");
  red->add_option("--screen-out", re.screen_out, "write univariate screen JSON");
  red->add_option("--apply", re.apply_path, "matrix to transform (default: fit matrix)");
  red->add_option("--reduced-out", re.reduced_out, "write the reduced matrix");
  red->add_option("--matrix-format", re.matrix_format, "binary|csv");
  red->add_option("--threads", re.threads, "worker threads (0 = auto)");
  red->callback([&] {
    const auto m = features::load_matrix(re.features);
    reduce::PcaGroupModel reducer;
    if (re.reducer_in) {
      reducer = reduce::reducer_from_json(read_json_file(*re.reducer_in));
    } else {
      reduce::FeatureGroups groups;
      if (re.groups == "paper")
        groups = reduce::FeatureGroups::paper_default();
      else if (re.groups == "derive")
        groups = reduce::FeatureGroups::derive(reduce::pearson_matrix(m), m.n_cols(),
                                               re.derive_threshold);
      else
        throw ValidationError("--groups must be paper|derive");
      reducer = reduce::fit_reducer(m, groups);
    }
    if (re.screen_out)
      write_output(re.screen_out,
                   reduce::screen_to_json(reduce::univariate_screen(m)).dump(2) + "\n");
    if (re.reducer_out)
      write_output(re.reducer_out, reduce::reducer_to_json(reducer).dump(2) + "\n");
    if (re.components_out)
      write_output(re.components_out, reduce::export_components(reducer).dump(2) + "\n");
    if (re.reduced_out) {
      const auto target = re.apply_path ? features::load_matrix(*re.apply_path) : m;
      features::save_matrix(reduce::apply_reducer(target, reducer, re.threads),
                            *re.reduced_out, re.matrix_format);
    }
    json summary{{"output_columns", reducer.output_columns}};
    for (const auto& g : reducer.groups)
      summary["explained_variance_ratio"][g.name] = g.explained_variance_ratio;
    std::cout << summary.dump(2) << '\n';
  });

  // ---- train ----
  auto* train = app.add_subcommand("train", "fit a forest or logistic model");
  struct {
    std::string features, family = "forest", output;
    std::optional<std::string> model_config, search_config, reducer, trials_out;
    std::uint64_t seed = 0;
    unsigned threads = 0;
  } tr;
  train->add_option("--features", tr.features, "reduced labeled matrix")->required();
  train->add_option("--family", tr.family, "forest|logistic");
  train->add_option("--model-config", tr.model_config, "model config JSON file");
  train->add_option("--search", tr.search_config, "random-search spec JSON file");
  train->add_option("--reducer", tr.reducer, "reducer JSON to embed for scoring");
  train->add_option("--trials-out", tr.trials_out, "write search trial table JSON");
  train->add_option("--seed", tr.seed, "training seed");
  train->add_option("--threads", tr.threads, "worker threads (0 = auto)");
  train->add_option("--output", tr.output, "model file")->required();
  train->callback([&] {
    const auto m = features::load_matrix(tr.features);
    std::optional<reduce::PcaGroupModel> reducer;
    if (tr.reducer) reducer = reduce::reducer_from_json(read_json_file(*tr.reducer));

    const bool forest_family = tr.family == "forest";
    if (!forest_family && tr.family != "logistic")
      throw ValidationError("--family must be forest|logistic");

    model::ForestConfig fc;
    model::LogisticConfig lc;
    if (tr.model_config) {
      const auto j = read_json_file(*tr.model_config);
      if (forest_family)
        fc = model::forest_config_from_json(j);
      else
        lc = model::logistic_config_from_json(j);
    }

    if (tr.search_config) {
      const auto sj = read_json_file(*tr.search_config);
      model::SearchSpec spec;
      spec.n_draws = sj.value("n_draws", spec.n_draws);
      spec.k_folds = sj.value("k_folds", spec.k_folds);
      spec.second_round = sj.value("second_round", false);
      spec.shrink_factor = sj.value("shrink_factor", 0.5);
      spec.seed = derive_seed(tr.seed, "search");
      if (sj.contains("params"))
        for (const auto& [name, dj] : sj["params"].items())
          spec.params[name] = param_dist_from_cli_json(name, dj);

      auto search_input = m;
      if (sj.contains("subsample_per_class") && !sj["subsample_per_class"].is_null()) {
        const std::uint64_t k = sj["subsample_per_class"].get<std::uint64_t>();
        std::vector<std::uint64_t> pos, neg;
        for (std::size_t i = 0; i < m.n_rows; ++i)
          (m.labels[i] ? pos : neg).push_back(i);
        if (pos.size() < k || neg.size() < k)
          throw ValidationError("search subsample: class smaller than requested k");
        std::mt19937_64 rng(derive_seed(tr.seed, "search_subsample"));
        std::vector<std::uint64_t> keep;
        for (const auto* cls : {&pos, &neg})
          for (const auto i : sample_without_replacement(rng, cls->size(), k))
            keep.push_back((*cls)[i]);
        std::sort(keep.begin(), keep.end());
        search_input = m.select_rows(keep);
      }
      const auto result = forest_family
                              ? model::random_search(search_input, spec, fc, tr.threads)
                              : model::random_search(search_input, spec, lc, tr.threads);
      if (tr.trials_out)
        write_output(tr.trials_out, model::search_result_to_json(result).dump(2) + "\n");
      if (forest_family)
        fc = std::get<model::ForestConfig>(result.best_config);
      else
        lc = std::get<model::LogisticConfig>(result.best_config);
    }

    json out;
    if (forest_family) {
      fc.seed = derive_seed(tr.seed, "train");
      auto forest = model::fit_forest(m, fc, tr.threads);
      forest.reducer = reducer;
      model::save_model(forest, tr.output);
      out = {{"family", "forest"}, {"config", model::forest_config_to_json(fc)}};
    } else {
      lc.seed = derive_seed(tr.seed, "train");
      auto logistic = model::fit_logistic(m, lc);
      logistic.reducer = reducer;
      model::save_logistic_json(logistic, tr.output);
      out = {{"family", "logistic"},
             {"config", model::logistic_config_to_json(lc)},
             {"converged", logistic.converged}};
    }
    std::cout << out.dump(2) << '\n';
  });

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand("evaluate", "AUC of a model on a labeled matrix");
  struct {
    std::string model, features;
    std::optional<std::string> output;
    bool roc = false;
    unsigned threads = 0;
  } ev;
  evaluate->add_option("--model", ev.model, "model file (.lfrf or logistic JSON)")
      ->required();
  evaluate->add_option("--features", ev.features, "labeled matrix (raw or reduced)")
      ->required();
  evaluate->add_option("--output", ev.output, "metrics JSON (default: stdout)");
  evaluate->add_flag("--roc", ev.roc, "include ROC points");
  evaluate->add_option("--threads", ev.threads, "worker threads (0 = auto)");
  evaluate->callback([&] {
    auto m = features::load_matrix(ev.features);
    if (!m.has_labels()) throw ValidationError("evaluate: matrix has no labels");

    // Forest containers start with the LFRF magic; logistic models are JSON.
    std::ifstream probe(ev.model, std::ios::binary);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    const bool is_forest = std::string_view(magic, 4) == "LFRF";

    std::vector<double> scores;
    if (is_forest) {
      const auto forest = model::load_model(ev.model);
      if (forest.reducer && m.column_names == forest.reducer->input_columns)
        m = reduce::apply_reducer(m, *forest.reducer, ev.threads);
      scores = forest.predict_proba(m, ev.threads);
    } else {
      const auto logistic = model::load_logistic_json(ev.model);
      if (logistic.reducer && m.column_names == logistic.reducer->input_columns)
        m = reduce::apply_reducer(m, *logistic.reducer, ev.threads);
      scores = logistic.predict_proba(m, ev.threads);
    }
    const auto roc = eval::auc(scores, m.labels, ev.roc);
    json out{{"auc", roc.auc},
             {"n_pos", roc.n_pos},
             {"n_neg", roc.n_neg},
             {"rows", m.n_rows}};
    if (ev.roc) {
      json pts = json::array();
      for (const auto& [fpr, tpr] : roc.roc_points) pts.push_back({fpr, tpr});
      out["roc_points"] = std::move(pts);
    }
    write_output(ev.output, out.dump(2) + "\n");
  });

  // ---- drift ----
  auto* drift = app.add_subcommand("drift", "cross-window train/eval AUC table");
  struct {
    std::string input, format = "auto", config;
    std::optional<std::string> out_json, out_csv;
    unsigned threads = 0;
  } dr;
  drift->add_option("--input", dr.input, "edge list file")->required();
  drift->add_option("--format", dr.format, "auto|csv|tsv|binary");
  drift->add_option("--config", dr.config, "drift config JSON")->required();
  drift->add_option("--output-json", dr.out_json, "write report JSON");
  drift->add_option("--output-csv", dr.out_csv, "write report CSV");
  drift->add_option("--threads", dr.threads, "worker threads (0 = auto)");
  drift->callback([&] {
    const auto el = load_edges(dr.input, dr.format);
    auto [windows, cfg] = eval::drift_config_from_json(read_json_file(dr.config));
    if (dr.threads) cfg.threads = dr.threads;
    const auto report = eval::drift_report(el, windows, cfg);
    if (dr.out_json) write_output(dr.out_json, eval::drift_to_json(report).dump(2) + "\n");
    if (dr.out_csv) write_output(dr.out_csv, eval::drift_to_csv(report));
    std::cout << eval::drift_to_table(report);
  });

  // ---- score ----
  auto* sc = app.add_subcommand("score", "score every candidate pair of a window");
  struct {
    std::string model, input, format = "auto", output;
    std::int64_t y1 = 0, y2 = 0, y3 = 0;
    std::uint32_t min_degree = 10;
    unsigned threads = 0;
  } s;
  sc->add_option("--model", s.model, "LFRF model file with embedded reducer")->required();
  sc->add_option("--input", s.input, "edge list file")->required();
  sc->add_option("--format", s.format, "auto|csv|tsv|binary");
  sc->add_option("--y1", s.y1, "newest feature cutoff")->required();
  sc->add_option("--y2", s.y2, "middle feature cutoff")->required();
  sc->add_option("--y3", s.y3, "oldest feature cutoff")->required();
  sc->add_option("--min-degree", s.min_degree, "candidate degree filter");
  sc->add_option("--threads", s.threads, "worker threads (0 = auto)");
  sc->add_option("--output", s.output, "scored pair CSV")->required();
  sc->callback([&] {
    pipeline::score(s.model, s.input, s.format, s.y1, s.y2, s.y3, s.min_degree, s.output,
                    s.threads);
  });

  // ---- run ----
  auto* runc = app.add_subcommand("run", "full pipeline from a config file");
  struct {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> output_dir, matrix_format;
  } r;
  runc->add_option("--config", r.config, "run config JSON")->required();
  runc->add_option("--seed", r.seed, "override the config seed");
  runc->add_option("--threads", r.threads, "override the config thread count");
  runc->add_option("--output-dir", r.output_dir, "override the output directory");
  runc->add_option("--format,--matrix-format", r.matrix_format,
                   "matrix format override: csv|binary");
  runc->callback([&] {
    auto cfg = pipeline::run_config_from_json(read_json_file(r.config));
    if (r.seed) cfg.seed = *r.seed;
    if (r.threads) cfg.threads = *r.threads;
    if (r.output_dir) cfg.output_dir = *r.output_dir;
    if (r.matrix_format) cfg.matrix_format = *r.matrix_format;
    const auto man = pipeline::run(cfg);
    std::printf("%-12s %9s %7s %12s\n", "stage", "seconds", "cached", "rows");
    for (const auto& stage : man.stages)
      std::printf("%-12s %9.2f %7s %12llu\n", stage.name.c_str(), stage.seconds,
                  stage.cached ? "yes" : "no",
                  static_cast<unsigned long long>(stage.rows_out));
    std::cout << man.metrics.dump(2) << '\n';
    std::cout << "manifest: " << cfg.output_dir << "/manifest.json\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0 through here; anything else is a usage problem.
    return app.exit(e) == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
