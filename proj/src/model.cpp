#include "linkforecast/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "linkforecast/common.hpp"

namespace lf::model {

void ForestConfig::validate() const {
  if (n_estimators < 1) throw ValidationError("forest: n_estimators must be >= 1");
  if (min_samples_split < 2) throw ValidationError("forest: min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ValidationError("forest: min_samples_leaf must be >= 1");
  if (max_features && *max_features < 1)
    throw ValidationError("forest: max_features must be >= 1 when set");
}

void LogisticConfig::validate() const {
  if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0))
    throw ValidationError("logistic: l1_ratio must lie in [0, 1]");
  if (!(alpha > 0.0)) throw ValidationError("logistic: alpha must be > 0");
  if (max_epochs < 1) throw ValidationError("logistic: max_epochs must be >= 1");
  if (!(tolerance > 0.0)) throw ValidationError("logistic: tolerance must be > 0");
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0)
    i = row[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
            ? nodes[i].left
            : nodes[i].right;
  return nodes[i].value;
}

namespace {

std::uint32_t effective_max_features(const ForestConfig& cfg, std::size_t p) {
  std::uint32_t k = cfg.max_features
                        ? *cfg.max_features
                        : static_cast<std::uint32_t>(std::sqrt(static_cast<double>(p)));
  if (k < 1) k = 1;
  return std::min<std::uint32_t>(k, static_cast<std::uint32_t>(p));
}

struct TreeBuilder {
  const features::FeatureMatrix& X;
  std::span<const std::uint8_t> y;
  const ForestConfig& cfg;
  std::mt19937_64& rng;
  std::uint32_t n_candidates;

  std::vector<std::uint32_t> feature_pool;
  std::vector<std::pair<double, std::uint8_t>> scratch;
  std::vector<TreeNode> nodes;

  struct Work {
    std::size_t begin, end;
    std::uint32_t depth, node;
  };

  // m * gini(pos/m) * const; minimizing the sum over children minimizes the
  // weighted impurity.
  static double gini_cost(double m, double pos) {
    const double neg = m - pos;
    return m - (pos * pos + neg * neg) / m;
  }

  Tree build(std::vector<std::uint32_t>& idx) {
    feature_pool.resize(X.n_cols());
    std::iota(feature_pool.begin(), feature_pool.end(), 0);

    nodes.clear();
    nodes.emplace_back();
    std::vector<Work> stack{{0, idx.size(), 0, 0}};
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      process(idx, w, stack);
    }
    Tree t;
    t.nodes = std::move(nodes);
    return t;
  }

  void process(std::vector<std::uint32_t>& idx, const Work& w, std::vector<Work>& stack) {
    const std::size_t m = w.end - w.begin;
    std::size_t pos = 0;
    for (std::size_t i = w.begin; i < w.end; ++i) pos += y[idx[i]];

    const bool depth_stop = cfg.max_depth && w.depth >= *cfg.max_depth;
    if (pos == 0 || pos == m || m < cfg.min_samples_split || depth_stop) {
      make_leaf(w.node, m, pos);
      return;
    }

    // Candidate features sampled without replacement, in draw order.
    for (std::uint32_t i = 0; i < n_candidates; ++i) {
      const auto j = static_cast<std::size_t>(
          i + uniform_below(rng, feature_pool.size() - i));
      std::swap(feature_pool[i], feature_pool[j]);
    }

    double best_cost = std::numeric_limits<double>::infinity();
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    for (std::uint32_t c = 0; c < n_candidates; ++c) {
      const std::uint32_t f = feature_pool[c];
      scratch.clear();
      for (std::size_t i = w.begin; i < w.end; ++i)
        scratch.emplace_back(X.at(idx[i], f), y[idx[i]]);
      std::sort(scratch.begin(), scratch.end());
      if (scratch.front().first == scratch.back().first) continue;

      double left_pos = 0.0;
      const auto total_pos = static_cast<double>(pos);
      const auto total = static_cast<double>(m);
      for (std::size_t i = 1; i < m; ++i) {
        left_pos += scratch[i - 1].second;
        if (scratch[i - 1].first == scratch[i].first) continue;
        const auto left_n = static_cast<double>(i);
        if (i < cfg.min_samples_leaf || m - i < cfg.min_samples_leaf) continue;
        const double cost = gini_cost(left_n, left_pos) +
                            gini_cost(total - left_n, total_pos - left_pos);
        if (cost < best_cost) {
          best_cost = cost;
          best_feature = static_cast<std::int32_t>(f);
          // Midpoint, pushed back onto the lower value if rounding would let
          // the upper value route left.
          double thr = scratch[i - 1].first / 2 + scratch[i].first / 2;
          if (!(thr < scratch[i].first)) thr = scratch[i - 1].first;
          best_threshold = thr;
        }
      }
    }

    if (best_feature < 0) {
      make_leaf(w.node, m, pos);
      return;
    }

    const auto mid = std::stable_partition(
        idx.begin() + static_cast<std::ptrdiff_t>(w.begin),
        idx.begin() + static_cast<std::ptrdiff_t>(w.end),
        [&](std::uint32_t row) {
          return X.at(row, static_cast<std::size_t>(best_feature)) <= best_threshold;
        });
    const auto split = static_cast<std::size_t>(mid - idx.begin());

    const auto left = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    const auto right = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    nodes[w.node].feature = best_feature;
    nodes[w.node].threshold = best_threshold;
    nodes[w.node].left = left;
    nodes[w.node].right = right;
    // Left-first preorder: keeps node layout and stream consumption
    // independent of anything but the data.
    stack.push_back({split, w.end, w.depth + 1, right});
    stack.push_back({w.begin, split, w.depth + 1, left});
  }

  void make_leaf(std::uint32_t node, std::size_t m, std::size_t pos) {
    nodes[node].feature = -1;
    nodes[node].value = static_cast<double>(pos) / static_cast<double>(m);
  }
};

Tree fit_tree_on(const features::FeatureMatrix& X, std::span<const std::uint8_t> y,
                 std::vector<std::uint32_t> idx, const ForestConfig& cfg,
                 std::mt19937_64& rng) {
  if (idx.empty()) throw ValidationError("tree fit: empty input");
  TreeBuilder builder{X, y, cfg, rng, effective_max_features(cfg, X.n_cols()), {}, {}, {}};
  return builder.build(idx);
}

}  // namespace

Tree fit_tree(const features::FeatureMatrix& X, std::span<const std::uint8_t> y,
              const ForestConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (X.n_rows == 0) throw ValidationError("tree fit: empty input");
  if (y.size() != X.n_rows) throw ValidationError("tree fit: labels do not match rows");
  std::vector<std::uint32_t> idx(X.n_rows);
  std::iota(idx.begin(), idx.end(), 0);
  return fit_tree_on(X, y, std::move(idx), cfg, rng);
}

ForestModel fit_forest(const features::FeatureMatrix& X, const ForestConfig& cfg,
                       unsigned threads) {
  cfg.validate();
  if (X.n_rows == 0) throw ValidationError("forest fit: empty input");
  if (!X.has_labels()) throw ValidationError("forest fit: matrix has no labels");

  ForestModel model;
  model.config = cfg;
  model.feature_names = X.column_names;
  model.trees.resize(cfg.n_estimators);

  const std::size_t n = X.n_rows;
  parallel_for(cfg.n_estimators, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      std::mt19937_64 rng(derive_seed(cfg.seed, t));
      std::vector<std::uint32_t> idx(n);
      if (cfg.bootstrap) {
        for (auto& i : idx) i = static_cast<std::uint32_t>(uniform_below(rng, n));
      } else {
        std::iota(idx.begin(), idx.end(), 0);
      }
      model.trees[t] = fit_tree_on(X, X.labels, std::move(idx), cfg, rng);
    }
  });
  return model;
}

std::vector<double> ForestModel::predict_proba(const features::FeatureMatrix& X,
                                               unsigned threads) const {
  if (X.n_cols() != feature_names.size())
    throw ValidationError("forest predict: expected " +
                          std::to_string(feature_names.size()) + " columns, got " +
                          std::to_string(X.n_cols()));
  std::vector<double> out(X.n_rows, 0.0);
  const double inv = 1.0 / static_cast<double>(trees.size());
  parallel_for(X.n_rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto row = X.row(r);
      double s = 0.0;
      for (const auto& t : trees) s += t.predict(row);
      out[r] = s * inv;
    }
  });
  return out;
}

// --- elastic-net logistic regression -----------------------------------------

namespace {

double log1pexp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Largest eigenvalue estimate of a small symmetric PSD matrix.
double top_eigenvalue(const std::vector<double>& a, std::size_t p) {
  std::vector<double> v(p, 1.0 / std::sqrt(static_cast<double>(p))), w(p);
  double lambda = 0.0;
  for (int it = 0; it < 256; ++it) {
    for (std::size_t i = 0; i < p; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += a[i * p + j] * v[j];
      w[i] = s;
    }
    double norm = 0.0;
    for (const double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    double delta = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      w[i] /= norm;
      delta = std::max(delta, std::abs(w[i] - v[i]));
    }
    lambda = norm;
    v = w;
    if (delta < 1e-12) break;
  }
  return lambda;
}

}  // namespace

double logistic_smooth_objective(const features::FeatureMatrix& X,
                                 std::span<const std::uint8_t> y,
                                 std::span<const double> w, double intercept,
                                 double alpha, double l1_ratio) {
  const std::size_t n = X.n_rows, p = X.n_cols();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = X.row(i);
    double z = intercept;
    for (std::size_t j = 0; j < p; ++j) z += w[j] * row[j];
    loss += log1pexp(z) - (y[i] ? z : 0.0);
  }
  loss /= static_cast<double>(n);
  double ridge = 0.0;
  for (const double x : w) ridge += x * x;
  return loss + 0.5 * alpha * (1.0 - l1_ratio) * ridge;
}

std::pair<std::vector<double>, double> logistic_smooth_gradient(
    const features::FeatureMatrix& X, std::span<const std::uint8_t> y,
    std::span<const double> w, double intercept, double alpha, double l1_ratio) {
  const std::size_t n = X.n_rows, p = X.n_cols();
  std::vector<double> grad(p, 0.0);
  double grad_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = X.row(i);
    double z = intercept;
    for (std::size_t j = 0; j < p; ++j) z += w[j] * row[j];
    const double r = sigmoid(z) - (y[i] ? 1.0 : 0.0);
    for (std::size_t j = 0; j < p; ++j) grad[j] += r * row[j];
    grad_b += r;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < p; ++j)
    grad[j] = grad[j] * inv_n + alpha * (1.0 - l1_ratio) * w[j];
  return {std::move(grad), grad_b * inv_n};
}

LogisticModel fit_logistic(const features::FeatureMatrix& X, const LogisticConfig& cfg) {
  cfg.validate();
  if (X.n_rows == 0) throw ValidationError("logistic fit: empty input");
  if (!X.has_labels()) throw ValidationError("logistic fit: matrix has no labels");
  for (const double v : X.values)
    if (!std::isfinite(v)) throw ValidationError("logistic fit: non-finite input value");

  const std::size_t n = X.n_rows, p = X.n_cols();

  // Proximal gradient with a fixed step from the smooth part's Lipschitz
  // bound: lambda_max([X 1]^T [X 1]) / (4n) + ridge weight.
  std::vector<double> gram((p + 1) * (p + 1), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = X.row(i);
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = a; b < p; ++b) gram[a * (p + 1) + b] += row[a] * row[b];
      gram[a * (p + 1) + p] += row[a];
    }
    gram[p * (p + 1) + p] += 1.0;
  }
  for (std::size_t a = 0; a <= p; ++a)
    for (std::size_t b = a + 1; b <= p; ++b) gram[b * (p + 1) + a] = gram[a * (p + 1) + b];
  // Per-block steps: the ridge term only curves the weight block, so the
  // intercept keeps the larger loss-only step.
  const double loss_lipschitz =
      1.05 * top_eigenvalue(gram, p + 1) / (4.0 * static_cast<double>(n));
  const double step_w =
      1.0 / std::max(loss_lipschitz + cfg.alpha * (1.0 - cfg.l1_ratio), 1e-12);
  const double step_b = 1.0 / std::max(loss_lipschitz, 1e-12);
  const double l1_step = step_w * cfg.alpha * cfg.l1_ratio;

  LogisticModel model;
  model.config = cfg;
  model.feature_names = X.column_names;
  model.weights.assign(p, 0.0);
  double& b = model.intercept;

  std::vector<double> grad(p);
  for (std::uint32_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = X.row(i);
      double z = b;
      for (std::size_t j = 0; j < p; ++j) z += model.weights[j] * row[j];
      const double r = sigmoid(z) - (X.labels[i] ? 1.0 : 0.0);
      for (std::size_t j = 0; j < p; ++j) grad[j] += r * row[j];
      grad_b += r;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double delta = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double g = grad[j] * inv_n + cfg.alpha * (1.0 - cfg.l1_ratio) * model.weights[j];
      const double next = soft_threshold(model.weights[j] - step_w * g, l1_step);
      delta = std::max(delta, std::abs(next - model.weights[j]));
      model.weights[j] = next;
    }
    const double next_b = b - step_b * grad_b * inv_n;
    delta = std::max(delta, std::abs(next_b - b));
    b = next_b;
    model.epochs_run = epoch + 1;
    if (delta < cfg.tolerance) {
      model.converged = true;
      break;
    }
  }
  return model;
}

std::vector<double> LogisticModel::predict_proba(const features::FeatureMatrix& X,
                                                 unsigned threads) const {
  if (X.n_cols() != feature_names.size())
    throw ValidationError("logistic predict: expected " +
                          std::to_string(feature_names.size()) + " columns, got " +
                          std::to_string(X.n_cols()));
  std::vector<double> out(X.n_rows);
  parallel_for(X.n_rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto row = X.row(r);
      double z = intercept;
      for (std::size_t j = 0; j < row.size(); ++j) z += weights[j] * row[j];
      out[r] = sigmoid(z);
    }
  });
  return out;
}

// --- random search -------------------------------------------------------------

ParamDist ParamDist::make_uniform(double lo, double hi) {
  return {Kind::uniform, lo, hi, {}};
}
ParamDist ParamDist::make_log_uniform(double lo, double hi) {
  return {Kind::log_uniform, lo, hi, {}};
}
ParamDist ParamDist::make_int_uniform(std::int64_t lo, std::int64_t hi) {
  return {Kind::int_uniform, static_cast<double>(lo), static_cast<double>(hi), {}};
}
ParamDist ParamDist::make_int_log_uniform(std::int64_t lo, std::int64_t hi) {
  return {Kind::int_log_uniform, static_cast<double>(lo), static_cast<double>(hi), {}};
}
ParamDist ParamDist::make_categorical(std::vector<double> values) {
  return {Kind::categorical, 0.0, 0.0, std::move(values)};
}

void SearchSpec::validate() const {
  if (n_draws < 1) throw ValidationError("search: n_draws must be >= 1");
  if (k_folds < 2) throw ValidationError("search: k_folds must be >= 2");
  if (!(shrink_factor > 0.0 && shrink_factor <= 1.0))
    throw ValidationError("search: shrink_factor must lie in (0, 1]");
  for (const auto& [name, d] : params) {
    switch (d.kind) {
      case ParamDist::Kind::categorical:
        if (d.values.empty())
          throw ValidationError("search: categorical '" + name + "' has no values");
        break;
      case ParamDist::Kind::log_uniform:
      case ParamDist::Kind::int_log_uniform:
        if (!(d.lo > 0.0))
          throw ValidationError("search: log-uniform '" + name + "' needs lo > 0");
        [[fallthrough]];
      default:
        if (!(d.lo <= d.hi))
          throw ValidationError("search: '" + name + "' has lo > hi");
    }
  }
}

namespace {

double draw_param(const ParamDist& d, std::mt19937_64& rng) {
  switch (d.kind) {
    case ParamDist::Kind::uniform:
      return d.lo + uniform_real(rng) * (d.hi - d.lo);
    case ParamDist::Kind::log_uniform:
      return std::exp(std::log(d.lo) + uniform_real(rng) * (std::log(d.hi) - std::log(d.lo)));
    case ParamDist::Kind::int_uniform: {
      const auto lo = static_cast<std::int64_t>(d.lo);
      const auto hi = static_cast<std::int64_t>(d.hi);
      return static_cast<double>(lo + static_cast<std::int64_t>(
                                          uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1))));
    }
    case ParamDist::Kind::int_log_uniform: {
      const double x =
          std::exp(std::log(d.lo) + uniform_real(rng) * (std::log(d.hi) - std::log(d.lo)));
      return std::clamp(std::round(x), d.lo, d.hi);
    }
    case ParamDist::Kind::categorical:
      return d.values[uniform_below(rng, d.values.size())];
  }
  throw std::logic_error("unreachable");
}

ParamDist recenter(const ParamDist& d, double center, double shrink) {
  ParamDist out = d;
  switch (d.kind) {
    case ParamDist::Kind::uniform:
    case ParamDist::Kind::int_uniform: {
      const double half = (d.hi - d.lo) * shrink / 2.0;
      out.lo = std::clamp(center - half, d.lo, d.hi);
      out.hi = std::clamp(center + half, d.lo, d.hi);
      if (d.kind == ParamDist::Kind::int_uniform) {
        out.lo = std::floor(out.lo);
        out.hi = std::ceil(out.hi);
      }
      break;
    }
    case ParamDist::Kind::log_uniform:
    case ParamDist::Kind::int_log_uniform: {
      const double half = (std::log(d.hi) - std::log(d.lo)) * shrink / 2.0;
      out.lo = std::clamp(std::exp(std::log(center) - half), d.lo, d.hi);
      out.hi = std::clamp(std::exp(std::log(center) + half), d.lo, d.hi);
      break;
    }
    case ParamDist::Kind::categorical:
      out.values = {center};
      break;
  }
  return out;
}

ForestConfig apply_params(const ForestConfig& base, const std::map<std::string, double>& p) {
  ForestConfig c = base;
  for (const auto& [name, v] : p) {
    if (name == "n_estimators")
      c.n_estimators = static_cast<std::uint32_t>(std::max(1.0, std::round(v)));
    else if (name == "max_depth")
      c.max_depth = v <= 0.0 ? std::nullopt
                             : std::optional<std::uint32_t>(
                                   static_cast<std::uint32_t>(std::round(v)));
    else if (name == "min_samples_split")
      c.min_samples_split = static_cast<std::uint32_t>(std::max(2.0, std::round(v)));
    else if (name == "min_samples_leaf")
      c.min_samples_leaf = static_cast<std::uint32_t>(std::max(1.0, std::round(v)));
    else if (name == "max_features")
      c.max_features = v <= 0.0 ? std::nullopt
                                : std::optional<std::uint32_t>(
                                      static_cast<std::uint32_t>(std::round(v)));
    else if (name == "bootstrap")
      c.bootstrap = v != 0.0;
    else
      throw ValidationError("search: unknown forest parameter '" + name + "'");
  }
  return c;
}

LogisticConfig apply_params(const LogisticConfig& base,
                            const std::map<std::string, double>& p) {
  LogisticConfig c = base;
  for (const auto& [name, v] : p) {
    if (name == "l1_ratio")
      c.l1_ratio = std::clamp(v, 0.0, 1.0);
    else if (name == "alpha")
      c.alpha = v;
    else if (name == "max_epochs")
      c.max_epochs = static_cast<std::uint32_t>(std::max(1.0, std::round(v)));
    else if (name == "tolerance")
      c.tolerance = v;
    else
      throw ValidationError("search: unknown logistic parameter '" + name + "'");
  }
  return c;
}

template <class Config>
SearchResult random_search_impl(const features::FeatureMatrix& X, const SearchSpec& spec,
                                const Config& base, Family family, unsigned threads) {
  spec.validate();
  base.validate();
  if (!X.has_labels()) throw ValidationError("search: matrix has no labels");
  if (X.n_rows < spec.k_folds) throw ValidationError("search: fewer rows than folds");

  const auto fold =
      eval::stratified_fold_assignment(X.labels, spec.k_folds, derive_seed(spec.seed, "folds"));
  // Fold matrices are fixed across trials; build them once.
  std::vector<features::FeatureMatrix> train_m(spec.k_folds), test_m(spec.k_folds);
  for (std::uint32_t f = 0; f < spec.k_folds; ++f) {
    std::vector<std::uint64_t> tr, te;
    for (std::size_t i = 0; i < X.n_rows; ++i) (fold[i] == f ? te : tr).push_back(i);
    train_m[f] = X.select_rows(tr);
    test_m[f] = X.select_rows(te);
  }

  SearchResult result;
  result.family = family;
  result.best_mean_auc = -1.0;

  auto run_round = [&](std::uint32_t round, const std::map<std::string, ParamDist>& dists) {
    for (std::uint32_t t = 0; t < spec.n_draws; ++t) {
      const std::uint64_t trial_seed =
          derive_seed(spec.seed, (std::uint64_t{round} << 32) | t);
      std::mt19937_64 rng(trial_seed);
      Trial trial;
      trial.round = round;
      trial.index = t;
      for (const auto& [name, dist] : dists) trial.params[name] = draw_param(dist, rng);

      Config cfg = apply_params(base, trial.params);
      for (std::uint32_t f = 0; f < spec.k_folds; ++f) {
        Config fold_cfg = cfg;
        fold_cfg.seed = derive_seed(trial_seed, f);
        std::vector<double> scores;
        if constexpr (std::is_same_v<Config, ForestConfig>) {
          scores = fit_forest(train_m[f], fold_cfg, threads).predict_proba(test_m[f], threads);
        } else {
          scores = fit_logistic(train_m[f], fold_cfg).predict_proba(test_m[f], threads);
        }
        trial.fold_auc.push_back(eval::auc(scores, test_m[f].labels).auc);
      }
      double sum = 0.0;
      for (const double a : trial.fold_auc) sum += a;
      trial.mean_auc = sum / static_cast<double>(trial.fold_auc.size());

      if (trial.mean_auc > result.best_mean_auc) {
        result.best_mean_auc = trial.mean_auc;
        result.best_params = trial.params;
        result.best_round = round;
        result.best_index = t;
        result.best_config = cfg;
      }
      result.trials.push_back(std::move(trial));
    }
  };

  run_round(0, spec.params);
  if (spec.second_round && !spec.params.empty()) {
    // Re-centered around the round-1 winner, clamped to the original bounds.
    const auto pivot = result.best_params;
    std::map<std::string, ParamDist> narrowed;
    for (const auto& [name, dist] : spec.params)
      narrowed[name] = recenter(dist, pivot.at(name), spec.shrink_factor);
    run_round(1, narrowed);
  }
  return result;
}

}  // namespace

SearchResult random_search(const features::FeatureMatrix& X, const SearchSpec& spec,
                           const ForestConfig& base, unsigned threads) {
  return random_search_impl(X, spec, base, Family::forest, threads);
}

SearchResult random_search(const features::FeatureMatrix& X, const SearchSpec& spec,
                           const LogisticConfig& base, unsigned threads) {
  return random_search_impl(X, spec, base, Family::logistic, threads);
}

nlohmann::json search_result_to_json(const SearchResult& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"round", t.round},
                      {"index", t.index},
                      {"params", t.params},
                      {"fold_auc", t.fold_auc},
                      {"mean_auc", t.mean_auc}});
  nlohmann::json best{{"params", r.best_params},
                      {"mean_auc", r.best_mean_auc},
                      {"round", r.best_round},
                      {"index", r.best_index}};
  if (r.family == Family::forest)
    best["config"] = forest_config_to_json(std::get<ForestConfig>(r.best_config));
  else
    best["config"] = logistic_config_to_json(std::get<LogisticConfig>(r.best_config));
  return {{"family", r.family == Family::forest ? "forest" : "logistic"},
          {"best", std::move(best)},
          {"trials", std::move(trials)}};
}

// --- serialization ---------------------------------------------------------------

nlohmann::json forest_config_to_json(const ForestConfig& c) {
  nlohmann::json j{{"n_estimators", c.n_estimators},
                   {"min_samples_split", c.min_samples_split},
                   {"min_samples_leaf", c.min_samples_leaf},
                   {"bootstrap", c.bootstrap},
                   {"seed", c.seed}};
  j["max_depth"] = c.max_depth ? nlohmann::json(*c.max_depth) : nlohmann::json();
  j["max_features"] = c.max_features ? nlohmann::json(*c.max_features) : nlohmann::json();
  return j;
}

ForestConfig forest_config_from_json(const nlohmann::json& j) {
  ForestConfig c;
  c.n_estimators = j.value("n_estimators", c.n_estimators);
  if (j.contains("max_depth") && !j["max_depth"].is_null())
    c.max_depth = j["max_depth"].get<std::uint32_t>();
  c.min_samples_split = j.value("min_samples_split", c.min_samples_split);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  if (j.contains("max_features") && !j["max_features"].is_null())
    c.max_features = j["max_features"].get<std::uint32_t>();
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json logistic_config_to_json(const LogisticConfig& c) {
  return {{"l1_ratio", c.l1_ratio},
          {"alpha", c.alpha},
          {"max_epochs", c.max_epochs},
          {"tolerance", c.tolerance},
          {"seed", c.seed}};
}

LogisticConfig logistic_config_from_json(const nlohmann::json& j) {
  LogisticConfig c;
  c.l1_ratio = j.value("l1_ratio", c.l1_ratio);
  c.alpha = j.value("alpha", c.alpha);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

namespace {

constexpr char kModelMagic[4] = {'L', 'F', 'R', 'F'};
constexpr std::uint8_t kModelVersion = 1;

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_raw(std::istream& in, T& v, const std::string& path) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ValidationError(path + ": truncated model file");
}

}  // namespace

void save_model(const ForestModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file: " + path);

  nlohmann::json header{{"config", forest_config_to_json(m.config)},
                        {"feature_names", m.feature_names}};
  if (m.reducer) {
    const auto rj = reduce::reducer_to_json(*m.reducer);
    header["reducer"] = rj;
    header["reducer_hash"] = to_hex(fnv1a64(rj.dump()));
  }
  const std::string hs = header.dump();

  out.write(kModelMagic, 4);
  write_raw(out, kModelVersion);
  write_raw(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  write_raw(out, static_cast<std::uint32_t>(m.trees.size()));
  for (const auto& t : m.trees) {
    write_raw(out, static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& nd : t.nodes) {
      write_raw(out, nd.feature);
      if (nd.feature >= 0) {
        write_raw(out, nd.threshold);
        write_raw(out, nd.left);
        write_raw(out, nd.right);
      } else {
        write_raw(out, nd.value);
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw ValidationError(path + ": not an LFRF model file (bad magic)");
  std::uint8_t version;
  read_raw(in, version, path);
  if (version != kModelVersion)
    throw ValidationError(path + ": unsupported model file version " +
                          std::to_string(version));

  std::uint32_t header_len;
  read_raw(in, header_len, path);
  std::string hs(header_len, '\0');
  in.read(hs.data(), header_len);
  if (!in) throw ValidationError(path + ": truncated model file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad model header: " + e.what());
  }

  ForestModel m;
  m.config = forest_config_from_json(header.at("config"));
  m.feature_names = header.at("feature_names").get<std::vector<std::string>>();
  if (header.contains("reducer") && !header["reducer"].is_null()) {
    m.reducer = reduce::reducer_from_json(header["reducer"]);
    const auto want = header.value("reducer_hash", "");
    const auto got = to_hex(fnv1a64(reduce::reducer_to_json(*m.reducer).dump()));
    if (!want.empty() && want != got)
      throw ValidationError(path + ": reducer hash mismatch");
  }

  std::uint32_t n_trees;
  read_raw(in, n_trees, path);
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    std::uint32_t n_nodes;
    read_raw(in, n_nodes, path);
    t.nodes.resize(n_nodes);
    for (auto& nd : t.nodes) {
      read_raw(in, nd.feature, path);
      if (nd.feature >= 0) {
        read_raw(in, nd.threshold, path);
        read_raw(in, nd.left, path);
        read_raw(in, nd.right, path);
        if (nd.left >= n_nodes || nd.right >= n_nodes)
          throw ValidationError(path + ": corrupt model file (child index out of range)");
        if (static_cast<std::size_t>(nd.feature) >= m.feature_names.size())
          throw ValidationError(path + ": corrupt model file (feature index out of range)");
      } else {
        read_raw(in, nd.value, path);
      }
    }
    if (t.nodes.empty())
      throw ValidationError(path + ": corrupt model file (empty tree)");
  }
  return m;
}

void save_logistic_json(const LogisticModel& m, const std::string& path) {
  nlohmann::json j{{"format", "lf-logistic"},
                   {"version", 1},
                   {"config", logistic_config_to_json(m.config)},
                   {"feature_names", m.feature_names},
                   {"weights", m.weights},
                   {"intercept", m.intercept},
                   {"epochs_run", m.epochs_run},
                   {"converged", m.converged}};
  if (m.reducer) j["reducer"] = reduce::reducer_to_json(*m.reducer);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

LogisticModel load_logistic_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad logistic model file: " + e.what());
  }
  if (j.value("format", "") != "lf-logistic" || j.value("version", 0) != 1)
    throw ValidationError(path + ": not a supported logistic model file");
  LogisticModel m;
  m.config = logistic_config_from_json(j.at("config"));
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.epochs_run = j.value("epochs_run", 0u);
  m.converged = j.value("converged", false);
  if (j.contains("reducer")) m.reducer = reduce::reducer_from_json(j["reducer"]);
  return m;
}

}  // namespace lf::model

// Family-specific cross-validation wrappers live here so the eval header
// stays free of model dependencies.
namespace lf::eval {

CvReport cross_validate(const features::FeatureMatrix& m, const model::ForestConfig& cfg,
                        std::uint32_t k, std::uint64_t seed, unsigned threads) {
  cfg.validate();
  return cross_validate(m, k, seed,
                        [&](const features::FeatureMatrix& train,
                            const features::FeatureMatrix& test, std::uint64_t fold_seed) {
                          model::ForestConfig fc = cfg;
                          fc.seed = derive_seed(cfg.seed, fold_seed);
                          return model::fit_forest(train, fc, threads)
                              .predict_proba(test, threads);
                        });
}

CvReport cross_validate(const features::FeatureMatrix& m, const model::LogisticConfig& cfg,
                        std::uint32_t k, std::uint64_t seed, unsigned threads) {
  cfg.validate();
  return cross_validate(m, k, seed,
                        [&](const features::FeatureMatrix& train,
                            const features::FeatureMatrix& test, std::uint64_t fold_seed) {
                          model::LogisticConfig lc = cfg;
                          lc.seed = derive_seed(cfg.seed, fold_seed);
                          return model::fit_logistic(train, lc).predict_proba(test, threads);
                        });
}

}  // namespace lf::eval
