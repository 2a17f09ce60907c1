#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <fstream>
#include <set>

#include "linkforecast/pipeline.hpp"
#include "test_util.hpp"

using namespace lf;
using namespace lf::pipeline;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const std::string& edge_path, const std::string& out_dir,
                       std::uint64_t seed) {
  RunConfig cfg;
  cfg.edge_file = edge_path;
  cfg.train_window = {4800, 4200, 3600, 6000};
  cfg.sampling.min_degree = 3;
  cfg.model.forest.n_estimators = 30;
  cfg.model.forest.min_samples_split = 4;
  cfg.model.forest.min_samples_leaf = 2;
  cfg.holdout_fraction = 0.2;
  cfg.output_dir = out_dir;
  cfg.seed = seed;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("gen_synthetic basics") {
  CHECK(gen_synthetic(100, 0, GrowthRule::preferential_attachment, 1).edges().empty());

  const auto a = gen_synthetic(300, 2000, GrowthRule::preferential_attachment, 9);
  const auto b = gen_synthetic(300, 2000, GrowthRule::preferential_attachment, 9);
  REQUIRE(a.edges().size() == b.edges().size());
  for (std::size_t i = 0; i < a.edges().size(); ++i) {
    CHECK(a.edges()[i].u == b.edges()[i].u);
    CHECK(a.edges()[i].v == b.edges()[i].v);
    CHECK(a.edges()[i].t == b.edges()[i].t);
  }
  const auto c = gen_synthetic(300, 2000, GrowthRule::preferential_attachment, 10);
  bool differs = c.edges().size() != a.edges().size();
  for (std::size_t i = 0; !differs && i < a.edges().size(); ++i)
    differs = a.edges()[i].u != c.edges()[i].u || a.edges()[i].v != c.edges()[i].v;
  CHECK(differs);

  // Timestamps are the 1-based step index.
  CHECK(a.edges().front().t == 1);
  CHECK(a.edges().back().t == 2000);
}

TEST_CASE("preferential attachment grows a heavy-tailed degree distribution") {
  const auto el = gen_synthetic(2000, 8000, GrowthRule::preferential_attachment, 4);
  const graph::Snapshot s(el, 8000);
  std::vector<std::uint32_t> degrees;
  for (NodeId u = 0; u < s.num_nodes(); ++u) degrees.push_back(s.degree(u));
  std::sort(degrees.begin(), degrees.end());
  const auto median = degrees[degrees.size() / 2];
  const auto max = degrees.back();
  CHECK(max > 5 * std::max<std::uint32_t>(median, 1));

  const auto uni = gen_synthetic(2000, 8000, GrowthRule::uniform, 4);
  const graph::Snapshot su(uni, 8000);
  std::uint32_t max_u = 0;
  for (NodeId u = 0; u < su.num_nodes(); ++u) max_u = std::max(max_u, su.degree(u));
  CHECK(max_u < max);  // uniform attachment has no hubs
}

TEST_CASE("run produces a manifest with all stages and metrics") {
  testutil::TempDir tmp("run");
  gen_synthetic(500, 6000, GrowthRule::preferential_attachment, 77)
      .save_binary(tmp.path("edges.lfel"));
  const auto cfg = small_config(tmp.path("edges.lfel"), tmp.path("out"), 5);
  const auto man = run(cfg);

  std::vector<std::string> names;
  for (const auto& s : man.stages) names.push_back(s.name);
  for (const char* want : {"ingest", "sample", "extract", "screen", "reduce", "train",
                           "evaluate"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());

  REQUIRE(man.metrics.contains("holdout_auc"));
  const double auc_val = man.metrics["holdout_auc"].get<double>();
  CHECK(auc_val > 0.5);
  CHECK(auc_val <= 1.0);

  // Every artifact exists with the recorded content hash.
  for (const auto& a : man.artifacts) {
    const auto p = fs::path(tmp.path("out")) / a.path;
    REQUIRE(fs::exists(p));
    CHECK(to_hex(hash_file(p.string())) == a.fnv64);
    CHECK(fs::file_size(p) == a.bytes);
  }

  // Key intermediates are persisted.
  for (const char* f : {"train_samples.csv", "features_train.bin", "reduced_train.bin",
                        "reducer.json", "components.json", "screen.json", "model.lfrf",
                        "metrics.json", "manifest.json"})
    CHECK(fs::exists(fs::path(tmp.path("out")) / f));
}

TEST_CASE("rerunning the same config reuses every cached stage") {
  testutil::TempDir tmp("cache");
  gen_synthetic(500, 6000, GrowthRule::preferential_attachment, 77)
      .save_binary(tmp.path("edges.lfel"));
  const auto cfg = small_config(tmp.path("edges.lfel"), tmp.path("out"), 5);
  const auto first = run(cfg);
  const auto second = run(cfg);
  for (const auto& s : second.stages)
    if (s.name != "evaluate") CHECK(s.cached);
  CHECK(first.metrics == second.metrics);

  // A different seed invalidates sampling and everything downstream.
  auto cfg2 = cfg;
  cfg2.seed = 6;
  const auto third = run(cfg2);
  for (const auto& s : third.stages)
    if (s.name == "sample" || s.name == "train") CHECK_FALSE(s.cached);
}

TEST_CASE("two fresh runs with one config are byte-identical") {
  testutil::TempDir tmp("det");
  gen_synthetic(500, 6000, GrowthRule::preferential_attachment, 31)
      .save_binary(tmp.path("edges.lfel"));
  auto cfg_a = small_config(tmp.path("edges.lfel"), tmp.path("a"), 12);
  auto cfg_b = small_config(tmp.path("edges.lfel"), tmp.path("b"), 12);
  run(cfg_a);
  run(cfg_b);
  for (const char* f : {"model.lfrf", "metrics.json", "train_samples.csv",
                        "features_train.bin", "reduced_train.bin", "reducer.json"}) {
    const auto a = testutil::read_file((fs::path(tmp.path("a")) / f).string());
    const auto b = testutil::read_file((fs::path(tmp.path("b")) / f).string());
    REQUIRE(!a.empty());
    CHECK(a == b);
  }
}

TEST_CASE("config validation fails before any work") {
  testutil::TempDir tmp("badcfg");
  gen_synthetic(100, 500, GrowthRule::preferential_attachment, 1)
      .save_binary(tmp.path("edges.lfel"));
  auto cfg = small_config(tmp.path("edges.lfel"), tmp.path("out"), 1);
  cfg.train_window = {2011, 2010, 2009, 2014};
  cfg.year_to_cutoff = {{2011, 480}, {2010, 420}, {2009, 360}};  // label year missing
  CHECK_THROWS_WITH_AS(run(cfg), doctest::Contains("2014"), ValidationError);
  CHECK_FALSE(fs::exists(tmp.path("out")));

  auto cfg2 = small_config(tmp.path("edges.lfel"), tmp.path("out2"), 1);
  cfg2.train_window = {100, 200, 50, 400};  // y1 < y2
  CHECK_THROWS_AS(run(cfg2), ValidationError);
  CHECK_FALSE(fs::exists(tmp.path("out2")));
}

TEST_CASE("year map resolves windows") {
  testutil::TempDir tmp("years");
  gen_synthetic(500, 6000, GrowthRule::preferential_attachment, 77)
      .save_binary(tmp.path("edges.lfel"));
  auto cfg = small_config(tmp.path("edges.lfel"), tmp.path("out"), 5);
  cfg.train_window = {2011, 2010, 2009, 2014};
  cfg.year_to_cutoff = {{2009, 3600}, {2010, 4200}, {2011, 4800}, {2014, 6000}};
  const auto man = run(cfg);
  CHECK(man.metrics.contains("holdout_auc"));
}

TEST_CASE("run config json round trip") {
  RunConfig cfg = small_config("edges.csv", "out", 3);
  cfg.eval_window = WindowSpec{5400, 4800, 4200, 6000};
  cfg.year_to_cutoff = {{1, 10}, {2, 20}};
  cfg.model.search_enabled = true;
  cfg.model.search.n_draws = 4;
  cfg.model.search.params["n_estimators"] = model::ParamDist::make_int_log_uniform(50, 500);
  cfg.model.search.params["min_samples_leaf"] = model::ParamDist::make_categorical({1, 5});
  cfg.model.search_subsample_per_class = 1000;
  cfg.matrix_format = "csv";

  const auto back = run_config_from_json(run_config_to_json(cfg));
  CHECK(back.edge_file == cfg.edge_file);
  CHECK(back.train_window == cfg.train_window);
  CHECK(back.eval_window == cfg.eval_window);
  CHECK(back.year_to_cutoff == cfg.year_to_cutoff);
  CHECK(back.sampling.min_degree == cfg.sampling.min_degree);
  CHECK(back.model.search_enabled);
  CHECK(back.model.search.params.size() == 2);
  CHECK(back.model.search_subsample_per_class == cfg.model.search_subsample_per_class);
  CHECK(back.matrix_format == "csv");
  CHECK(run_config_to_json(back) == run_config_to_json(cfg));
}

TEST_CASE("eval window metrics appear when configured") {
  testutil::TempDir tmp("evalw");
  gen_synthetic(500, 6000, GrowthRule::preferential_attachment, 13)
      .save_binary(tmp.path("edges.lfel"));
  auto cfg = small_config(tmp.path("edges.lfel"), tmp.path("out"), 2);
  cfg.train_window = {3600, 3000, 2400, 4800};
  cfg.eval_window = WindowSpec{4800, 4200, 3600, 6000};
  const auto man = run(cfg);
  REQUIRE(man.metrics.contains("eval_auc"));
  CHECK(man.metrics["eval_auc"].get<double>() > 0.5);
  CHECK(fs::exists(fs::path(tmp.path("out")) / "eval_samples.csv"));
  CHECK(fs::exists(fs::path(tmp.path("out")) / "reduced_eval.bin"));
}

TEST_CASE("score writes descending scored candidates from a saved model") {
  testutil::TempDir tmp("score");
  gen_synthetic(400, 5000, GrowthRule::preferential_attachment, 55)
      .save_binary(tmp.path("edges.lfel"));
  auto cfg = small_config(tmp.path("edges.lfel"), tmp.path("out"), 4);
  cfg.train_window = {3000, 2500, 2000, 4000};
  run(cfg);

  score((fs::path(tmp.path("out")) / "model.lfrf").string(), tmp.path("edges.lfel"),
        "auto", 4000, 3500, 3000, 3, tmp.path("scored.csv"), 1);

  std::ifstream in(tmp.path("scored.csv"));
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "u,v,score");
  double prev = 2.0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double s = std::stod(line.substr(c2 + 1));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(s <= prev);
    prev = s;
    ++rows;
  }
  CHECK(rows > 100);
}

TEST_CASE("score on an impossible degree filter writes only the header") {
  testutil::TempDir tmp("score0");
  gen_synthetic(200, 1500, GrowthRule::preferential_attachment, 6)
      .save_binary(tmp.path("edges.lfel"));
  auto cfg = small_config(tmp.path("edges.lfel"), tmp.path("out"), 4);
  cfg.train_window = {900, 750, 600, 1500};
  run(cfg);
  score((fs::path(tmp.path("out")) / "model.lfrf").string(), tmp.path("edges.lfel"),
        "auto", 900, 750, 600, 100000, tmp.path("scored.csv"), 1);
  CHECK(testutil::read_file(tmp.path("scored.csv")) == "u,v,score\n");
}

TEST_CASE("top score lands on a planted future edge in most seeds") {
  testutil::TempDir tmp("planted");
  int hits = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    // Featureless uniform background on nodes 0..149; the only learnable
    // structure is a set of 7-node near-cliques on nodes 150+ whose one
    // missing pair closes later. The training-era batch teaches the pattern;
    // the eval-era batch carries the planted future edges.
    const auto base = gen_synthetic(150, 3000, GrowthRule::uniform, 9000 + seed);
    std::vector<graph::TemporalEdge> edges(base.edges().begin(), base.edges().end());

    const auto add_cliquelet = [&](NodeId first, std::int64_t t_lo, std::int64_t t_hi,
                                   std::int64_t close_t) {
      std::int64_t t = t_lo;
      for (NodeId a = 0; a < 7; ++a)
        for (NodeId b = a + 1; b < 7; ++b) {
          if (a == 0 && b == 1) continue;  // the pair left open
          edges.push_back(
              {static_cast<NodeId>(first + a), static_cast<NodeId>(first + b), t});
          t = t < t_hi ? t + 1 : t_lo;
        }
      edges.push_back({first, static_cast<NodeId>(first + 1), close_t});
      return std::pair<NodeId, NodeId>{first, static_cast<NodeId>(first + 1)};
    };

    std::set<std::pair<NodeId, NodeId>> planted;
    for (int k = 0; k < 15; ++k)
      add_cliquelet(static_cast<NodeId>(150 + 7 * k), 2550 + 25 * k, 3000, 3300 + 20 * k);
    std::int64_t future = 4000;
    for (int k = 0; k < 15; ++k)
      planted.insert(
          add_cliquelet(static_cast<NodeId>(255 + 7 * k), 3550 + 25 * k, 4000, ++future));

    std::mt19937_64 noise(seed);
    for (int k = 0; k < 200; ++k) {
      const auto a = static_cast<NodeId>(uniform_below(noise, 150));
      auto b = static_cast<NodeId>(uniform_below(noise, 150));
      while (b == a) b = static_cast<NodeId>(uniform_below(noise, 150));
      edges.push_back({a, b, ++future});
    }
    const auto el = graph::TemporalEdgeList::from_edges(std::move(edges));
    const auto tag = std::to_string(seed);
    el.save_binary(tmp.path("edges_" + tag + ".lfel"));

    auto cfg = small_config(tmp.path("edges_" + tag + ".lfel"), tmp.path("out_" + tag),
                            1000 + seed);
    cfg.train_window = {3000, 2500, 2000, 4000};
    cfg.model.forest.n_estimators = 40;
    run(cfg);
    score(tmp.path("out_" + tag) + "/model.lfrf", tmp.path("edges_" + tag + ".lfel"),
          "auto", 4000, 3500, 3000, 3, tmp.path("scored_" + tag + ".csv"), 1);

    std::ifstream in(tmp.path("scored_" + tag + ".csv"));
    std::string line;
    std::getline(in, line);  // header
    REQUIRE(std::getline(in, line));
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto u = static_cast<NodeId>(std::stoul(line.substr(0, c1)));
    const auto v = static_cast<NodeId>(std::stoul(line.substr(c1 + 1, c2 - c1 - 1)));
    hits += planted.count({u, v}) > 0;
  }
  CHECK(hits >= 8);
}

TEST_CASE("feature extraction cannot see edges beyond the window") {
  // Same prefix, different futures: rows must match exactly.
  const auto full = gen_synthetic(300, 3000, GrowthRule::preferential_attachment, 8);
  std::vector<graph::TemporalEdge> prefix_edges;
  for (const auto& e : full.edges())
    if (e.t <= 2000) prefix_edges.push_back(e);
  const auto prefix = graph::TemporalEdgeList::from_edges(std::move(prefix_edges));

  const graph::SnapshotWindow w_full(graph::Snapshot(full, 2000),
                                     graph::Snapshot(full, 1500),
                                     graph::Snapshot(full, 1000), 3000);
  const graph::SnapshotWindow w_prefix(graph::Snapshot(prefix, 2000),
                                       graph::Snapshot(prefix, 1500),
                                       graph::Snapshot(prefix, 1000), 2001);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  const auto n = std::min(full.num_nodes(), prefix.num_nodes());
  for (NodeId u = 0; u + 1 < n && pairs.size() < 200; u += 3)
    pairs.emplace_back(u, u + 1);
  const auto a = features::extract_window(w_full, pairs, 1);
  const auto b = features::extract_window(w_prefix, pairs, 1);
  REQUIRE(a.values == b.values);
}

TEST_CASE("drift report covers the window grid and stays flat on stationary data") {
  // Stationary process: every edge draws its endpoints i.i.d. from one fixed
  // fitness distribution, so all windows see the same generation law.
  std::mt19937_64 rng(19);
  const std::size_t n = 600;
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 1.0 / static_cast<double>(i + 1);
    cumulative[i] = acc;
  }
  const auto draw_node = [&] {
    const double x = uniform_real(rng) * acc;
    return static_cast<NodeId>(
        std::lower_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin());
  };
  std::vector<graph::TemporalEdge> fitness_edges;
  for (std::int64_t t = 1; t <= 9000; ++t) {
    NodeId a = draw_node(), b = draw_node();
    while (b == a) b = draw_node();
    fitness_edges.push_back({a, b, t});
  }
  const auto el = graph::TemporalEdgeList::from_edges(std::move(fitness_edges));
  const std::vector<WindowSpec> windows{{3600, 3000, 2400, 5400},
                                        {7200, 6600, 6000, 9000}};
  eval::DriftConfig cfg;
  cfg.sampling.min_degree = 3;
  cfg.model.forest.n_estimators = 40;
  cfg.model.forest.min_samples_split = 4;
  cfg.model.forest.min_samples_leaf = 2;
  cfg.holdout_fraction = 0.2;
  cfg.seed = 3;
  cfg.threads = 1;

  const auto report = eval::drift_report(el, windows, cfg);
  REQUIRE(report.cells.size() == 4);
  for (const auto& c : report.cells) {
    CHECK(c.holdout == (c.train_window == c.eval_window));
    CHECK(c.auc_value > 0.5);
  }
  double lo = 1.0, hi = 0.0;
  for (const auto& c : report.cells) {
    lo = std::min(lo, c.auc_value);
    hi = std::max(hi, c.auc_value);
  }
  CHECK(hi - lo < 0.05);

  const auto j = eval::drift_to_json(report);
  CHECK(j.at("cells").size() == 4);
  const auto csv = eval::drift_to_csv(report);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(!eval::drift_to_table(report).empty());
}
