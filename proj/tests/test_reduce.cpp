#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "linkforecast/reduce.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lf;
using namespace lf::reduce;
using features::FeatureMatrix;

namespace {

FeatureMatrix make_matrix(std::vector<std::string> names, std::vector<double> values,
                          std::vector<std::uint8_t> labels = {}) {
  FeatureMatrix m;
  m.n_rows = values.size() / names.size();
  m.column_names = std::move(names);
  m.values = std::move(values);
  m.labels = std::move(labels);
  return m;
}

FeatureGroups one_group(std::size_t n_cols) {
  FeatureGroups g;
  FeatureGroups::Group grp;
  grp.name = "G1";
  for (std::uint32_t c = 0; c < n_cols; ++c) grp.cols.push_back(c);
  g.groups.push_back(std::move(grp));
  return g;
}

// Sample covariance of a column-major-agnostic row matrix, for oracle use.
std::vector<double> sample_covariance(const FeatureMatrix& m) {
  const std::size_t n = m.n_rows, p = m.n_cols();
  std::vector<double> mean(p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) mean[c] += m.at(r, c);
  for (auto& x : mean) x /= static_cast<double>(n);
  std::vector<double> cov(p * p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        cov[i * p + j] += (m.at(r, i) - mean[i]) * (m.at(r, j) - mean[j]);
  for (auto& x : cov) x /= static_cast<double>(n - 1);
  return cov;
}

}  // namespace

TEST_CASE("default groups partition the 45-column layout") {
  const auto g = FeatureGroups::paper_default();
  g.validate(45);
  CHECK(g.groups.size() == 7);
  CHECK(g.passthrough.size() == 12);
  CHECK(g.groups[4].cols.size() == 9);  // ratio-index block
  CHECK(g.groups[6].cols.size() == 9);  // weighted-sum block
  std::size_t total = g.passthrough.size();
  for (const auto& grp : g.groups) total += grp.cols.size();
  CHECK(total == 45);

  FeatureGroups broken = g;
  broken.passthrough.pop_back();
  CHECK_THROWS_AS(broken.validate(45), ValidationError);
  broken = g;
  broken.passthrough.push_back(0);
  CHECK_THROWS_AS(broken.validate(45), ValidationError);
}

TEST_CASE("univariate screen: independent column has near-zero MI") {
  std::mt19937_64 rng(1);
  const std::size_t n = 10000;
  std::vector<double> vals;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    vals.push_back(uniform_real(rng));
    labels.push_back(static_cast<std::uint8_t>(uniform_below(rng, 2)));
  }
  const auto m = make_matrix({"noise"}, std::move(vals), std::move(labels));
  const auto report = univariate_screen(m);
  REQUIRE(report.size() == 1);
  CHECK(report[0].mutual_information < 0.01);
  CHECK(report[0].chi_squared_valid);
}

TEST_CASE("univariate screen: label-equal column carries ln 2 nats") {
  std::mt19937_64 rng(2);
  std::vector<double> vals;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < 10000; ++i) {
    const auto y = static_cast<std::uint8_t>(uniform_below(rng, 2));
    labels.push_back(y);
    vals.push_back(static_cast<double>(y));
  }
  const auto m = make_matrix({"copy"}, std::move(vals), std::move(labels));
  const auto report = univariate_screen(m);
  CHECK(report[0].mutual_information == doctest::Approx(std::log(2.0)).epsilon(0.05));
  CHECK(report[0].chi_squared > 9000.0);  // ~n for a perfect association
}

TEST_CASE("univariate screen: constant column is flagged") {
  const auto m = make_matrix({"const"}, std::vector<double>(100, 3.25),
                             std::vector<std::uint8_t>(100, 1));
  const auto report = univariate_screen(m);
  CHECK(report[0].mutual_information == 0.0);
  CHECK_FALSE(report[0].chi_squared_valid);
  CHECK(!report[0].note.empty());
}

TEST_CASE("pearson matrix properties") {
  std::mt19937_64 rng(3);
  const std::size_t n = 500;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = uniform_real(rng);
    vals.push_back(x);
    vals.push_back(-x);
    vals.push_back(x + 1e-9 * uniform_real(rng));
    vals.push_back(7.0);
  }
  std::vector<std::string> warnings;
  const auto m = make_matrix({"x", "negx", "noisy", "const"}, std::move(vals));
  const auto r = pearson_matrix(m, &warnings);
  const std::size_t p = 4;
  for (std::size_t i = 0; i < p; ++i) CHECK(r[i * p + i] == 1.0);
  CHECK(r[0 * p + 1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r[0 * p + 2] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r[0 * p + 3] == 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      CHECK(r[i * p + j] == r[j * p + i]);
      CHECK(std::abs(r[i * p + j]) <= 1.0);
    }
  REQUIRE(warnings.size() == 1);
}

TEST_CASE("first component matches the Jacobi oracle on random groups") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + uniform_below(rng, 8);             // <= 9 columns
    const std::size_t n = 50 + uniform_below(rng, 9951);         // <= 10^4 rows
    // Correlated structure: latent signal plus per-column noise.
    std::vector<double> vals;
    vals.reserve(n * p);
    std::vector<double> scale(p), bias(p);
    for (std::size_t c = 0; c < p; ++c) {
      scale[c] = 0.5 + 2.0 * uniform_real(rng);
      bias[c] = uniform_real(rng) * 4.0 - 2.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double z = uniform_real(rng) * 2.0 - 1.0;
      for (std::size_t c = 0; c < p; ++c)
        vals.push_back(bias[c] + scale[c] * z + 0.3 * (uniform_real(rng) - 0.5));
    }
    std::vector<std::string> names(p);
    for (std::size_t c = 0; c < p; ++c) names[c] = "c" + std::to_string(c);
    const auto m = make_matrix(std::move(names), std::move(vals));

    const auto model = fit_reducer(m, one_group(p));
    REQUIRE(model.groups.size() == 1);
    const auto& got = model.groups[0];

    const auto cov = sample_covariance(m);
    const auto eig = oracle::jacobi_eigen(cov, p);
    auto want = eig.vectors[0];
    oracle::normalize_sign(want);

    double norm = 0.0;
    for (const double x : got.component) norm += x * x;
    REQUIRE(std::abs(norm - 1.0) < 1e-9);
    for (std::size_t c = 0; c < p; ++c)
      REQUIRE(got.component[c] == doctest::Approx(want[c]).epsilon(0).scale(1).epsilon(1e-9));

    double trace = 0.0;
    for (const double lambda : eig.values) trace += lambda;
    REQUIRE(got.explained_variance_ratio ==
            doctest::Approx(eig.values[0] / trace).epsilon(1e-9));

    // All component ratios from the oracle sum to 1.
    double ratio_sum = 0.0;
    for (const double lambda : eig.values) ratio_sum += lambda / trace;
    REQUIRE(ratio_sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("collinear group explains everything") {
  std::mt19937_64 rng(5);
  std::vector<double> vals;
  for (int i = 0; i < 500; ++i) {
    const double z = uniform_real(rng);
    vals.push_back(2.0 * z);
    vals.push_back(-z);
    vals.push_back(0.5 * z + 1.0);
  }
  const auto m = make_matrix({"a", "b", "c"}, std::move(vals));
  const auto model = fit_reducer(m, one_group(3));
  CHECK(model.groups[0].explained_variance_ratio == doctest::Approx(1.0).epsilon(1e-9));
  // Coefficients proportional to the collinear direction (2, -1, 0.5).
  const auto& comp = model.groups[0].component;
  CHECK(comp[1] / comp[0] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(comp[2] / comp[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(comp[0] > 0.0);  // sign convention: dominant coefficient positive
}

TEST_CASE("independent unit-variance columns approach ratio 1/3") {
  std::mt19937_64 rng(6);
  const std::size_t n = 100000;
  std::vector<double> vals;
  vals.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      vals.push_back(uniform_real(rng) * 2.0 * std::sqrt(3.0));  // variance 1
  const auto m = make_matrix({"a", "b", "c"}, std::move(vals));
  const auto model = fit_reducer(m, one_group(3));
  CHECK(model.groups[0].explained_variance_ratio == doctest::Approx(1.0 / 3.0).epsilon(0.06));
}

TEST_CASE("zero-variance group errors with its name") {
  const auto m = make_matrix({"a", "b"}, std::vector<double>(200, 5.0));
  CHECK_THROWS_WITH_AS(fit_reducer(m, one_group(2)), doctest::Contains("G1"),
                       ValidationError);
  const auto one_row = make_matrix({"a", "b"}, {1.0, 2.0});
  CHECK_THROWS_AS(fit_reducer(one_row, one_group(2)), ValidationError);
}

TEST_CASE("apply standardizes the fit data to mean 0 sd 1") {
  std::mt19937_64 rng(7);
  const std::size_t n = 4000;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = uniform_real(rng);
    vals.push_back(3.0 * z + uniform_real(rng) * 0.1);
    vals.push_back(-z + uniform_real(rng) * 0.1 + 5.0);
    vals.push_back(uniform_real(rng) * 4.0);  // passthrough
  }
  FeatureGroups g;
  g.groups.push_back({"G1", {0, 1}});
  g.passthrough = {2};
  auto m = make_matrix({"a", "b", "keep"}, std::move(vals));
  m.labels.assign(n, 0);  // labels must be ignored by fit and carried by apply
  for (std::size_t i = 0; i < n; i += 3) m.labels[i] = 1;

  const auto model = fit_reducer(m, g);
  REQUIRE(model.output_columns.size() == 2);
  CHECK(model.output_columns[0] == "PCA-G1");
  CHECK(model.output_columns[1] == "keep");
  CHECK(model.fitted_on == n);

  const auto red = apply_reducer(m, model, 1);
  REQUIRE(red.n_rows == n);
  REQUIRE(red.n_cols() == 2);
  CHECK(red.labels == m.labels);
  for (std::size_t c = 0; c < red.n_cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += red.at(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = red.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }

  // Single-row apply: no refitting, finite output.
  const auto one = m.select_rows(std::vector<std::uint64_t>{0});
  const auto red_one = apply_reducer(one, model, 1);
  REQUIRE(red_one.n_rows == 1);
  for (const double x : red_one.values) CHECK(std::isfinite(x));

  auto wrong = m;
  wrong.column_names[0] = "renamed";
  CHECK_THROWS_AS(apply_reducer(wrong, model, 1), ValidationError);
}

TEST_CASE("projection equals an explicit dot product") {
  // Tiny fit whose component can be applied by hand.
  std::vector<double> vals{1.0, 2.0, 10.0, 3.0, 6.0, 20.0, 5.0, 10.0, 30.0, 7.0, 14.0, 40.0};
  auto m = make_matrix({"a", "b", "p"}, std::move(vals));
  FeatureGroups g;
  g.groups.push_back({"G1", {0, 1}});
  g.passthrough = {2};
  const auto model = fit_reducer(m, g);
  const auto& pg = model.groups[0];

  const auto red = apply_reducer(m, model, 1);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    const double proj = pg.component[0] * (m.at(r, 0) - pg.mean[0]) +
                        pg.component[1] * (m.at(r, 1) - pg.mean[1]);
    const double want = (proj - model.standardize_mean[0]) / model.standardize_sd[0];
    REQUIRE(red.at(r, 0) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("apply is permutation-equivariant and fit is row-order invariant") {
  std::mt19937_64 rng(8);
  const std::size_t n = 300;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = uniform_real(rng);
    vals.push_back(z);
    vals.push_back(2.0 * z + 0.05 * uniform_real(rng));
  }
  const auto m = make_matrix({"a", "b"}, std::move(vals));
  std::vector<std::uint64_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 shuffle_rng(9);
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1], perm[uniform_below(shuffle_rng, i)]);
  const auto shuffled = m.select_rows(perm);

  const auto model_a = fit_reducer(m, one_group(2));
  const auto model_b = fit_reducer(shuffled, one_group(2));
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(model_a.groups[0].component[c] ==
          doctest::Approx(model_b.groups[0].component[c]).epsilon(1e-9));

  const auto red = apply_reducer(m, model_a, 1);
  const auto red_shuffled = apply_reducer(shuffled, model_a, 1);
  for (std::size_t i = 0; i < n; ++i)
    REQUIRE(red_shuffled.at(i, 0) == red.at(perm[i], 0));
}

TEST_CASE("export and serialization round trip") {
  std::mt19937_64 rng(10);
  std::vector<double> vals;
  for (int i = 0; i < 200; ++i) {
    const double z = uniform_real(rng);
    vals.push_back(z + 0.01 * uniform_real(rng));
    vals.push_back(3.0 * z + 0.01 * uniform_real(rng));
    vals.push_back(uniform_real(rng));
  }
  FeatureGroups g;
  g.groups.push_back({"G1", {0, 1}});
  g.passthrough = {2};
  const auto m = make_matrix({"a", "b", "c"}, std::move(vals));
  const auto model = fit_reducer(m, g);

  const auto exported = export_components(model);
  REQUIRE(exported.at("groups").size() == 1);
  double norm = 0.0;
  for (const auto& cj : exported["groups"][0]["first_component"])
    norm += cj["coefficient"].get<double>() * cj["coefficient"].get<double>();
  CHECK(std::abs(norm - 1.0) < 1e-12);

  const auto j = reducer_to_json(model);
  const auto back = reducer_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.input_columns == model.input_columns);
  CHECK(back.output_columns == model.output_columns);
  CHECK(back.standardize_mean == model.standardize_mean);
  CHECK(back.standardize_sd == model.standardize_sd);
  REQUIRE(back.groups.size() == model.groups.size());
  CHECK(back.groups[0].component == model.groups[0].component);
  CHECK(back.groups[0].mean == model.groups[0].mean);

  const auto red_a = apply_reducer(m, model, 1);
  const auto red_b = apply_reducer(m, back, 1);
  REQUIRE(red_a.values == red_b.values);

  CHECK_THROWS_AS(reducer_from_json(nlohmann::json{{"format", "nope"}}), ValidationError);
}

TEST_CASE("derived groups cluster correlated columns") {
  std::mt19937_64 rng(11);
  const std::size_t n = 2000;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = uniform_real(rng);
    const double b = uniform_real(rng);
    vals.push_back(a);
    vals.push_back(a + 0.05 * uniform_real(rng));
    vals.push_back(b);
    vals.push_back(b + 0.05 * uniform_real(rng));
    vals.push_back(uniform_real(rng));  // independent
  }
  const auto m = make_matrix({"a1", "a2", "b1", "b2", "solo"}, std::move(vals));
  const auto r = pearson_matrix(m);
  const auto g = FeatureGroups::derive(r, 5, 0.6);
  g.validate(5);
  REQUIRE(g.groups.size() == 2);
  CHECK(g.groups[0].cols == std::vector<std::uint32_t>{0, 1});
  CHECK(g.groups[1].cols == std::vector<std::uint32_t>{2, 3});
  CHECK(g.passthrough == std::vector<std::uint32_t>{4});
}
