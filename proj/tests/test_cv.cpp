#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vifreg/cv.hpp"
#include "vifreg/dataset.hpp"
#include "vifreg/errors.hpp"
#include "vifreg/rng.hpp"

using namespace vifreg;

#ifndef TESTS_DATA_DIR
#error "TESTS_DATA_DIR must be defined by the build"
#endif

namespace {
const std::string kToy = std::string(TESTS_DATA_DIR) + "/toy.csv";

Dataset synthetic(int n, int p, unsigned seed) {
  Dataset d;
  d.X = Matrix(n, p);
  d.y = Vector(n);
  d.response_name = "y";
  Rng rng(seed);
  for (int j = 0; j < p; ++j) d.names.push_back("v" + std::to_string(j));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.X(i, j) = rng.normal();
    d.y[i] = 5.0 + 2.0 * d.X(i, 0) - 1.5 * d.X(i, 1) + 0.5 * rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("fold_assignment is a balanced, deterministic partition") {
  const int n = 47, folds = 10;
  const std::vector<int> a = fold_assignment(n, folds, 3);
  REQUIRE(static_cast<int>(a.size()) == n);
  std::vector<int> count(folds, 0);
  for (int f : a) {
    REQUIRE(f >= 0);
    REQUIRE(f < folds);
    count[f] += 1;
  }
  const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
  CHECK(*hi - *lo <= 1);
  CHECK(a == fold_assignment(n, folds, 3));
  CHECK(a != fold_assignment(n, folds, 4));
}

TEST_CASE("cross_validate scores held-out rows on the raw scale") {
  const Dataset d = synthetic(240, 8, 77);
  CvSpec cv;
  cv.folds = 6;
  cv.seed = 5;
  SelectionOptions opt;
  opt.seed = 5;
  const CvReport rep =
      cross_validate(d, Method::robust, cv, opt, StandardizeMode::classical);
  REQUIRE(rep.fold_metric.size() == 6);
  for (double v : rep.fold_metric) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }
  // MAPE of a decent fit sits near the median |N(0, 0.5)| = 0.34, far from
  // the response spread (sd ~ 2.6): the fit must be predictive.
  CHECK(rep.median_metric < 1.0);
  CHECK(rep.mean_metric < 1.5);
  // The full fit reports the two planted columns by name.
  CHECK(std::count(rep.selected_names.begin(), rep.selected_names.end(), "v0") == 1);
  CHECK(std::count(rep.selected_names.begin(), rep.selected_names.end(), "v1") == 1);
  CHECK(rep.wall_seconds >= 0.0);

  // Determinism: the same spec reproduces the same numbers.
  const CvReport again =
      cross_validate(d, Method::robust, cv, opt, StandardizeMode::classical);
  CHECK(rep.fold_metric == again.fold_metric);
  CHECK(rep.mean_metric == again.mean_metric);
}

TEST_CASE("cross_validate supports the MSE metric and classical method") {
  const Dataset d = synthetic(180, 5, 13);
  CvSpec cv;
  cv.folds = 5;
  cv.metric = CvSpec::Metric::MSE;
  SelectionOptions opt;
  const CvReport rep =
      cross_validate(d, Method::classical, cv, opt, StandardizeMode::classical);
  REQUIRE(rep.fold_metric.size() == 5);
  // MSE of a good fit is near 0.25; the null model would sit near 6.5.
  CHECK(rep.median_metric < 1.0);
}

TEST_CASE("cross_validate works end to end on the ingested toy file") {
  const IngestReport ing = ingest(kToy, "y");
  CvSpec cv;
  cv.folds = 3;
  SelectionOptions opt;
  for (const StandardizeMode mode :
       {StandardizeMode::classical, StandardizeMode::robust}) {
    const CvReport rep = cross_validate(ing.data, Method::robust, cv, opt, mode);
    REQUIRE(rep.fold_metric.size() == 3);
    for (double v : rep.fold_metric) CHECK(std::isfinite(v));
    CHECK(rep.median_metric < 2.0);  // planted signal: within reach of noise sd
  }
}

TEST_CASE("cross_validate rejects bad fold counts") {
  const Dataset d = synthetic(40, 3, 1);
  CvSpec cv;
  cv.folds = 1;
  SelectionOptions opt;
  CHECK_THROWS_AS(
      cross_validate(d, Method::robust, cv, opt, StandardizeMode::classical),
      ConfigError);
  cv.folds = 41;  // more folds than rows
  CHECK_THROWS_AS(
      cross_validate(d, Method::robust, cv, opt, StandardizeMode::classical),
      ConfigError);
}

TEST_CASE("order_stability tallies sizes and per-column frequency") {
  const Dataset d = synthetic(200, 6, 29);
  SelectionOptions opt;
  const StabilityReport rep = order_stability(d, Method::robust, 5, 99, opt,
                                              StandardizeMode::classical);
  CHECK(rep.n_orders == 5);
  int total = 0;
  for (const auto& [size, cnt] : rep.size_histogram) {
    CHECK(size >= 0);
    total += cnt;
  }
  CHECK(total == 5);
  for (const auto& [name, cnt] : rep.selection_frequency) {
    CHECK(std::count(d.names.begin(), d.names.end(), name) == 1);
    CHECK(cnt >= 0);
    CHECK(cnt <= 5);
  }
  // The strong planted signal survives any scan order.
  REQUIRE(rep.selection_frequency.count("v0") == 1);
  CHECK(rep.selection_frequency.at("v0") == 5);
}
