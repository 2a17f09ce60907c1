#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "linkforecast/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lf;
using namespace lf::model;
using features::FeatureMatrix;

namespace {

FeatureMatrix matrix_of(std::vector<std::string> names, std::vector<double> values,
                        std::vector<std::uint8_t> labels) {
  FeatureMatrix m;
  m.n_rows = labels.size();
  m.column_names = std::move(names);
  m.values = std::move(values);
  m.labels = std::move(labels);
  return m;
}

// Two noisy class blobs; separable enough to learn, overlapping enough to
// keep leaf fractions interesting.
FeatureMatrix blobs(std::size_t n, std::size_t p, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> vals;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::uint8_t>(uniform_below(rng, 2));
    labels.push_back(y);
    for (std::size_t c = 0; c < p; ++c)
      vals.push_back((y ? gap : -gap) * (c % 2 ? 0.5 : 1.0) + 2.0 * (uniform_real(rng) - 0.5));
  }
  std::vector<std::string> names(p);
  for (std::size_t c = 0; c < p; ++c) names[c] = "f" + std::to_string(c);
  return matrix_of(std::move(names), std::move(vals), std::move(labels));
}

double weighted_gini(double ln, double lp, double rn, double rp) {
  const auto gini = [](double m, double pos) {
    if (m == 0.0) return 0.0;
    const double a = pos / m, b = (m - pos) / m;
    return 1.0 - a * a - b * b;
  };
  return ln * gini(ln, lp) + rn * gini(rn, rp);
}

}  // namespace

TEST_CASE("default forest config carries the tuned parameters") {
  const ForestConfig cfg;
  CHECK(cfg.n_estimators == 1250);
  CHECK_FALSE(cfg.max_depth.has_value());
  CHECK(cfg.min_samples_split == 7);
  CHECK(cfg.min_samples_leaf == 5);
  CHECK_FALSE(cfg.max_features.has_value());
  CHECK(cfg.bootstrap);
}

TEST_CASE("pure-label input yields a single leaf") {
  auto m = matrix_of({"x"}, {1.0, 2.0, 3.0}, {1, 1, 1});
  ForestConfig cfg;
  cfg.min_samples_split = 2;
  cfg.min_samples_leaf = 1;
  std::mt19937_64 rng(0);
  const auto t = fit_tree(m, m.labels, cfg, rng);
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].feature == -1);
  CHECK(t.nodes[0].value == 1.0);

  m.labels = {0, 0, 0};
  const auto t0 = fit_tree(m, m.labels, cfg, rng);
  CHECK(t0.nodes[0].value == 0.0);
}

TEST_CASE("separable 1-D data gives a depth-1 tree with a midpoint threshold") {
  std::mt19937_64 data_rng(1);
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  double max_neg = -1e9, min_pos = 1e9;
  for (int i = 0; i < 100; ++i) {
    const double v = uniform_real(data_rng) * 2.0 - 1.0;
    x.push_back(v);
    y.push_back(v > 0.0 ? 1 : 0);
    if (v > 0.0)
      min_pos = std::min(min_pos, v);
    else
      max_neg = std::max(max_neg, v);
  }
  const auto m = matrix_of({"x"}, std::move(x), std::move(y));
  ForestConfig cfg;
  cfg.min_samples_split = 2;
  cfg.min_samples_leaf = 1;
  std::mt19937_64 rng(7);
  const auto t = fit_tree(m, m.labels, cfg, rng);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold > max_neg);
  CHECK(t.nodes[0].threshold < min_pos);
  CHECK(t.nodes[t.nodes[0].left].value == 0.0);
  CHECK(t.nodes[t.nodes[0].right].value == 1.0);
}

TEST_CASE("min_samples_leaf = n forces a base-rate stump") {
  const auto m = blobs(60, 2, 2.0, 3);
  ForestConfig cfg;
  cfg.min_samples_leaf = 60;
  std::mt19937_64 rng(1);
  const auto t = fit_tree(m, m.labels, cfg, rng);
  REQUIRE(t.nodes.size() == 1);
  double base = 0.0;
  for (const auto l : m.labels) base += l;
  base /= static_cast<double>(m.n_rows);
  CHECK(t.nodes[0].value == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("root split matches an exhaustive brute-force scan") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 20 + uniform_below(rng, 180);
    const auto m = blobs(n, 2, 0.8, 100 + trial);
    ForestConfig cfg;
    cfg.min_samples_split = 2;
    cfg.min_samples_leaf = 1;
    cfg.max_features = 2;  // consider every feature
    std::mt19937_64 tree_rng(trial);
    const auto t = fit_tree(m, m.labels, cfg, tree_rng);
    if (t.nodes.size() == 1) continue;

    // Brute force: every feature, every boundary between sorted values.
    double best = 1e300;
    for (std::size_t f = 0; f < 2; ++f) {
      std::vector<std::pair<double, std::uint8_t>> rows;
      for (std::size_t i = 0; i < n; ++i) rows.emplace_back(m.at(i, f), m.labels[i]);
      std::sort(rows.begin(), rows.end());
      double lp = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        lp += rows[i - 1].second;
        if (rows[i - 1].first == rows[i].first) continue;
        double tp = 0.0;
        for (const auto& r : rows) tp += r.second;
        best = std::min(best, weighted_gini(static_cast<double>(i), lp,
                                            static_cast<double>(n - i), tp - lp));
      }
    }

    const auto& root = t.nodes[0];
    double ln = 0.0, lp = 0.0, rn = 0.0, rp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.at(i, static_cast<std::size_t>(root.feature)) <= root.threshold) {
        ln += 1.0;
        lp += m.labels[i];
      } else {
        rn += 1.0;
        rp += m.labels[i];
      }
    }
    REQUIRE(weighted_gini(ln, lp, rn, rp) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("forest with one tree and no bootstrap equals a single tree") {
  const auto m = blobs(200, 3, 1.0, 9);
  ForestConfig cfg;
  cfg.n_estimators = 1;
  cfg.bootstrap = false;
  cfg.seed = 42;
  const auto forest = fit_forest(m, cfg, 1);
  std::mt19937_64 rng(derive_seed(cfg.seed, std::uint64_t{0}));
  const auto tree = fit_tree(m, m.labels, cfg, rng);
  REQUIRE(forest.trees.size() == 1);
  REQUIRE(forest.trees[0].nodes.size() == tree.nodes.size());
  const auto fp = forest.predict_proba(m, 1);
  for (std::size_t i = 0; i < m.n_rows; ++i) REQUIRE(fp[i] == tree.predict(m.row(i)));
}

TEST_CASE("forest training is deterministic and thread-count independent") {
  const auto m = blobs(300, 4, 0.7, 11);
  ForestConfig cfg;
  cfg.n_estimators = 12;
  cfg.seed = 1234;
  const auto a = fit_forest(m, cfg, 1).predict_proba(m, 1);
  const auto b = fit_forest(m, cfg, 1).predict_proba(m, 1);
  const auto c = fit_forest(m, cfg, 4).predict_proba(m, 4);
  REQUIRE(a == b);
  REQUIRE(a == c);

  ForestConfig other = cfg;
  other.seed = 4321;
  CHECK(fit_forest(m, other, 1).predict_proba(m, 1) != a);
}

TEST_CASE("predict_proba averages leaf fractions") {
  ForestModel toy;
  toy.feature_names = {"x"};
  toy.config.n_estimators = 3;
  for (const double leaf : {0.2, 0.5, 0.9}) {
    Tree t;
    t.nodes.push_back({-1, 0.0, 0, 0, leaf});
    toy.trees.push_back(std::move(t));
  }
  FeatureMatrix m = matrix_of({"x"}, {1.0, 2.0}, {0, 1});
  const auto p = toy.predict_proba(m, 1);
  CHECK(p[0] == doctest::Approx((0.2 + 0.5 + 0.9) / 3.0).epsilon(1e-15));
  CHECK(p[0] == p[1]);

  // Identical leaves pass through; a single pure tree yields {0, 1}.
  ForestModel flat;
  flat.feature_names = {"x"};
  Tree t;
  t.nodes.push_back({-1, 0.0, 0, 0, 0.8});
  flat.trees.push_back(t);
  CHECK(flat.predict_proba(m, 1)[0] == 0.8);

  ForestModel pure;
  pure.feature_names = {"x"};
  Tree split;
  split.nodes.push_back({0, 1.5, 1, 2, 0.0});
  split.nodes.push_back({-1, 0.0, 0, 0, 0.0});
  split.nodes.push_back({-1, 0.0, 0, 0, 1.0});
  pure.trees.push_back(split);
  const auto pp = pure.predict_proba(m, 1);
  CHECK(pp[0] == 0.0);
  CHECK(pp[1] == 1.0);
}

TEST_CASE("forest scores stay in [0,1] and prefix averages converge") {
  const auto train = blobs(400, 3, 0.6, 21);
  const auto test = blobs(200, 3, 0.6, 22);
  ForestConfig cfg;
  cfg.n_estimators = 200;
  cfg.seed = 5;
  const auto forest = fit_forest(train, cfg, 1);
  const auto full = forest.predict_proba(test, 1);
  for (const double s : full) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }

  const auto prefix_deviation = [&](std::size_t k) {
    ForestModel prefix = forest;
    prefix.trees.resize(k);
    const auto scores = prefix.predict_proba(test, 1);
    double dev = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) dev += std::abs(scores[i] - full[i]);
    return dev / static_cast<double>(full.size());
  };
  CHECK(prefix_deviation(200) == 0.0);
  CHECK(prefix_deviation(100) <= 0.05);
  CHECK(prefix_deviation(25) >= prefix_deviation(100));
}

TEST_CASE("logistic: heavy penalty shrinks weights to the base rate") {
  std::mt19937_64 rng(31);
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 300; ++i) {
    const double v = uniform_real(rng) * 2.0 - 1.0;
    x.push_back(v);
    y.push_back(v > 0.25 ? 1 : 0);  // ~3/8 positive
  }
  const auto m = matrix_of({"x"}, std::move(x), std::move(y));
  double base = 0.0;
  for (const auto l : m.labels) base += l;
  base /= static_cast<double>(m.n_rows);

  LogisticConfig cfg;
  cfg.alpha = 1e4;
  cfg.l1_ratio = 0.0;
  cfg.max_epochs = 5000;
  cfg.tolerance = 1e-12;
  const auto model = fit_logistic(m, cfg);
  CHECK(std::abs(model.weights[0]) < 1e-4);
  CHECK(model.predict_proba(m, 1)[0] == doctest::Approx(base).epsilon(0.01));

  LogisticConfig lasso = cfg;
  lasso.l1_ratio = 1.0;
  const auto sparse = fit_logistic(m, lasso);
  CHECK(sparse.weights[0] == 0.0);  // exact zero from the proximal step
}

TEST_CASE("logistic learns a separable direction") {
  const auto m = blobs(500, 2, 1.5, 41);
  LogisticConfig cfg;
  cfg.alpha = 1e-3;
  cfg.max_epochs = 3000;
  const auto model = fit_logistic(m, cfg);
  const auto scores = model.predict_proba(m, 1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m.n_rows; ++i)
    correct += (scores[i] > 0.5) == (m.labels[i] == 1);
  CHECK(static_cast<double>(correct) / static_cast<double>(m.n_rows) > 0.9);

  auto bad = m;
  bad.values[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_logistic(bad, cfg), ValidationError);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(51);
  const auto m = blobs(60, 4, 0.5, 52);
  const double alpha = 0.37;
  const double l1_ratio = 0.25;  // only the smooth ridge part is differentiated

  for (int point = 0; point < 10; ++point) {
    std::vector<double> w(4);
    for (auto& x : w) x = uniform_real(rng) * 2.0 - 1.0;
    const double b = uniform_real(rng) * 2.0 - 1.0;
    const auto [grad, grad_b] = logistic_smooth_gradient(m, m.labels, w, b, alpha, l1_ratio);

    const double h = 1e-6;
    for (std::size_t j = 0; j < w.size(); ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (logistic_smooth_objective(m, m.labels, wp, b, alpha, l1_ratio) -
                         logistic_smooth_objective(m, m.labels, wm, b, alpha, l1_ratio)) /
                        (2.0 * h);
      REQUIRE(std::abs(grad[j] - fd) / std::max(1e-8, std::abs(fd)) < 1e-5);
    }
    const double fdb = (logistic_smooth_objective(m, m.labels, w, b + h, alpha, l1_ratio) -
                        logistic_smooth_objective(m, m.labels, w, b - h, alpha, l1_ratio)) /
                       (2.0 * h);
    REQUIRE(std::abs(grad_b - fdb) / std::max(1e-8, std::abs(fdb)) < 1e-5);
  }
}

TEST_CASE("unpenalized gradient vanishes at the fitted optimum") {
  const auto m = blobs(300, 3, 0.4, 61);
  LogisticConfig cfg;
  cfg.alpha = 1e-12;  // effectively unpenalized
  cfg.l1_ratio = 0.0;
  cfg.max_epochs = 200000;
  cfg.tolerance = 1e-14;
  const auto model = fit_logistic(m, cfg);
  const auto [grad, grad_b] =
      logistic_smooth_gradient(m, m.labels, model.weights, model.intercept, 0.0, 0.0);
  for (const double g : grad) CHECK(std::abs(g) < 1e-6);
  CHECK(std::abs(grad_b) < 1e-6);
}

TEST_CASE("random search basics") {
  const auto m = blobs(150, 3, 1.2, 71);
  ForestConfig base;
  base.n_estimators = 10;
  base.min_samples_split = 2;
  base.min_samples_leaf = 1;

  SearchSpec spec;
  spec.n_draws = 1;
  spec.k_folds = 3;
  spec.seed = 3;
  spec.params["min_samples_leaf"] = ParamDist::make_categorical({1.0});
  const auto single = random_search(m, spec, base, 1);
  REQUIRE(single.trials.size() == 1);
  CHECK(single.best_index == 0);
  CHECK(std::get<ForestConfig>(single.best_config).min_samples_leaf == 1);

  // A degenerate stump config (min_samples_leaf = n) never wins on
  // separable data.
  SearchSpec duel;
  duel.n_draws = 8;
  duel.k_folds = 3;
  duel.seed = 17;
  duel.params["min_samples_leaf"] =
      ParamDist::make_categorical({1.0, static_cast<double>(m.n_rows)});
  const auto fought = random_search(m, duel, base, 1);
  REQUIRE(fought.trials.size() == 8);
  bool saw_good = false, saw_bad = false;
  for (const auto& t : fought.trials) {
    saw_good |= t.params.at("min_samples_leaf") == 1.0;
    saw_bad |= t.params.at("min_samples_leaf") == static_cast<double>(m.n_rows);
  }
  REQUIRE(saw_good);
  REQUIRE(saw_bad);
  CHECK(std::get<ForestConfig>(fought.best_config).min_samples_leaf == 1);

  const auto again = random_search(m, duel, base, 1);
  REQUIRE(again.trials.size() == fought.trials.size());
  for (std::size_t i = 0; i < again.trials.size(); ++i)
    CHECK(again.trials[i].mean_auc == fought.trials[i].mean_auc);
}

TEST_CASE("second round narrows around the winner") {
  const auto m = blobs(120, 2, 1.0, 81);
  ForestConfig base;
  base.n_estimators = 5;
  base.min_samples_split = 2;
  base.min_samples_leaf = 1;

  SearchSpec spec;
  spec.n_draws = 4;
  spec.k_folds = 2;
  spec.seed = 23;
  spec.second_round = true;
  spec.shrink_factor = 0.25;
  spec.params["n_estimators"] = ParamDist::make_int_uniform(2, 40);
  const auto res = random_search(m, spec, base, 1);
  REQUIRE(res.trials.size() == 8);
  double pivot = 0.0;
  double best_r1 = -1.0;
  for (const auto& t : res.trials)
    if (t.round == 0 && t.mean_auc > best_r1) {
      best_r1 = t.mean_auc;
      pivot = t.params.at("n_estimators");
    }
  const double half = (40.0 - 2.0) * 0.25 / 2.0;
  for (const auto& t : res.trials)
    if (t.round == 1) {
      CHECK(t.params.at("n_estimators") >= std::floor(std::max(2.0, pivot - half)));
      CHECK(t.params.at("n_estimators") <= std::ceil(std::min(40.0, pivot + half)));
    }

  const auto j = search_result_to_json(res);
  CHECK(j.at("trials").size() == 8);
  CHECK(j.at("best").contains("config"));
}

TEST_CASE("family cross-validation wrappers are deterministic") {
  const auto m = blobs(120, 3, 1.0, 91);
  ForestConfig fc;
  fc.n_estimators = 8;
  fc.min_samples_split = 2;
  fc.min_samples_leaf = 1;
  fc.seed = 7;
  const auto a = eval::cross_validate(m, fc, 4, 19, 1);
  const auto b = eval::cross_validate(m, fc, 4, 19, 1);
  REQUIRE(a.fold_auc.size() == 4);
  CHECK(a.fold_auc == b.fold_auc);
  double s = 0.0;
  for (const double x : a.fold_auc) s += x;
  CHECK(a.mean_auc == doctest::Approx(s / 4.0).epsilon(1e-15));

  LogisticConfig lc;
  lc.alpha = 1e-3;
  const auto l = eval::cross_validate(m, lc, 4, 19, 1);
  REQUIRE(l.fold_auc.size() == 4);
  CHECK(l.mean_auc > 0.5);
}

TEST_CASE("model save/load round trip preserves predictions exactly") {
  testutil::TempDir tmp("model");
  const auto train = blobs(1000, 4, 0.8, 101);
  const auto test = blobs(1000, 4, 0.8, 102);
  ForestConfig cfg;
  cfg.n_estimators = 15;
  cfg.seed = 77;
  auto forest = fit_forest(train, cfg, 1);

  // Attach a reducer so the embedded round trip is exercised too.
  reduce::FeatureGroups g;
  g.groups.push_back({"G1", {0, 1}});
  g.passthrough = {2, 3};
  forest.reducer = reduce::fit_reducer(train, g);

  save_model(forest, tmp.path("m.lfrf"));
  const auto back = load_model(tmp.path("m.lfrf"));
  CHECK(back.config.n_estimators == cfg.n_estimators);
  CHECK(back.feature_names == forest.feature_names);
  REQUIRE(back.reducer.has_value());
  CHECK(back.reducer->output_columns == forest.reducer->output_columns);

  const auto before = forest.predict_proba(test, 1);
  const auto after = back.predict_proba(test, 1);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) REQUIRE(before[i] == after[i]);
}

TEST_CASE("model load rejects corrupt and mismatched files") {
  testutil::TempDir tmp("badmodel");
  testutil::write_file(tmp.path("junk.lfrf"), "JUNKJUNKJUNK");
  CHECK_THROWS_WITH_AS(load_model(tmp.path("junk.lfrf")), doctest::Contains("magic"),
                       ValidationError);

  const auto m = blobs(50, 2, 1.0, 111);
  ForestConfig cfg;
  cfg.n_estimators = 2;
  cfg.min_samples_split = 2;
  cfg.min_samples_leaf = 1;
  const auto forest = fit_forest(m, cfg, 1);
  save_model(forest, tmp.path("ok.lfrf"));

  auto bytes = testutil::read_file(tmp.path("ok.lfrf"));
  bytes[4] = 9;  // version byte
  testutil::write_file(tmp.path("ver.lfrf"), bytes);
  CHECK_THROWS_WITH_AS(load_model(tmp.path("ver.lfrf")), doctest::Contains("version"),
                       ValidationError);
}

TEST_CASE("logistic model json round trip") {
  testutil::TempDir tmp("logit");
  const auto m = blobs(200, 3, 1.0, 121);
  LogisticConfig cfg;
  cfg.alpha = 1e-3;
  auto model = fit_logistic(m, cfg);
  save_logistic_json(model, tmp.path("l.json"));
  const auto back = load_logistic_json(tmp.path("l.json"));
  CHECK(back.weights == model.weights);
  CHECK(back.intercept == model.intercept);
  const auto a = model.predict_proba(m, 1);
  const auto b = back.predict_proba(m, 1);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}
