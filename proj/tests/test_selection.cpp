#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vifreg/errors.hpp"
#include "vifreg/rng.hpp"
#include "vifreg/robust.hpp"
#include "vifreg/selection.hpp"

using namespace vifreg;

namespace {

double naive_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("normal_cdf and two_sided_p hit textbook values") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-10));
  CHECK(normal_cdf(-1.5) == doctest::Approx(1.0 - normal_cdf(1.5)).epsilon(1e-14));
  CHECK(two_sided_p(0.0) == 1.0);
  CHECK(two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(two_sided_p(-2.0) == two_sided_p(2.0));
  CHECK(two_sided_p(30.0) > 0.0);  // no premature underflow in the deep tail
  CHECK(two_sided_p(30.0) < 1e-100);
}

TEST_CASE("compute_ec matches frozen quadrature values") {
  // Oracles frozen from an independent high-resolution Gauss-Legendre run.
  CHECK(std::abs(compute_ec(4.685) - 0.9499973500690461) < 1e-9);
  CHECK(std::abs(compute_ec(6.0) - 0.9810310664153172) < 1e-9);
  CHECK(std::abs(compute_ec(100.0) - 0.9999997599520868) < 1e-9);
  CHECK(compute_ec(4.685) > 0.94);
  CHECK(compute_ec(4.685) < 0.96);
  CHECK(compute_ec(100.0) > 0.999);
  CHECK(compute_ec(100.0) < 1.0);
  // Efficiency increases toward 1 as the cutoff loosens.
  CHECK(compute_ec(4.685) < compute_ec(6.0));
  CHECK(compute_ec(6.0) < compute_ec(100.0));
  CHECK_THROWS_AS(compute_ec(0.0), ConfigError);
  CHECK_THROWS_AS(compute_ec(-1.0), ConfigError);
}

TEST_CASE("alpha-investing ledger follows the pinned arithmetic") {
  AlphaInvesting st;  // wealth 0.5, payout 0.05, step 1, last_rejection 0
  CHECK(current_alpha(st) == 0.25);

  SUBCASE("a rejection pays out and resets the clock") {
    const double spent = alpha_step(st, true);
    CHECK(spent == 0.25);
    CHECK(st.wealth == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(st.last_rejection == 1);
    CHECK(st.step == 2);
    CHECK(current_alpha(st) == doctest::Approx(0.275).epsilon(1e-15));
  }

  SUBCASE("a failure charges alpha/(1-alpha)") {
    const double spent = alpha_step(st, false);
    CHECK(spent == 0.25);
    CHECK(st.wealth == doctest::Approx(0.5 - 0.25 / 0.75).epsilon(1e-15));
    CHECK(st.last_rejection == 0);
    CHECK(st.step == 2);
    CHECK(current_alpha(st) ==
          doctest::Approx((0.5 - 0.25 / 0.75) / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("evaluate_candidate matches the literal formula with unit weights") {
  Rng data_rng(21);
  const int n = 240;
  Matrix Xs(n, 2);
  Xs.col(0).setOnes();
  Vector y(n), z(n);
  for (int i = 0; i < n; ++i) {
    Xs(i, 1) = data_rng.normal();
    z[i] = data_rng.normal();
    y[i] = 1.0 + 0.5 * Xs(i, 1) + 0.4 * z[i] + data_rng.normal();
  }
  const Vector ones = Vector::Ones(n);
  const double ec = 0.93;
  Rng rng(7);
  const CandidateResult cr =
      evaluate_candidate(Xs, ones, y, z, ones, ec, n, rng, 0.25);

  // Hand-computed statistic: plain OLS stage residuals, full-sample rho.
  const Matrix G = Xs.transpose() * Xs;
  const Vector beta = G.ldlt().solve(Xs.transpose() * y);
  const Vector r = y - Xs * beta;
  const double zz = z.squaredNorm();
  const double gamma = z.dot(r) / zz;
  const Vector d = r - gamma * z;
  const double sigma = std::sqrt(d.squaredNorm() / n);
  const Vector hz = Xs * G.ldlt().solve(Xs.transpose() * z);
  const double rho = 1.0 - z.dot(hz) / zz;
  const double t = gamma * std::sqrt(zz * ec / rho) / sigma;

  CHECK(cr.gamma_w == doctest::Approx(gamma).epsilon(1e-10));
  CHECK(cr.sigma_hat == doctest::Approx(sigma).epsilon(1e-10));
  CHECK(cr.rho_w == doctest::Approx(rho).epsilon(1e-8));
  CHECK(cr.t_w == doctest::Approx(t).epsilon(1e-8));
  CHECK(cr.p_value == doctest::Approx(two_sided_p(t)).epsilon(1e-8));
  CHECK(cr.accepted == (cr.p_value < 0.25));
}

TEST_CASE("evaluate_candidate: zero response gives a zero statistic") {
  const int n = 60;
  Matrix Xs = Matrix::Ones(n, 1);
  Vector z(n);
  Rng data_rng(5);
  for (int i = 0; i < n; ++i) z[i] = data_rng.normal();
  Rng rng(1);
  const CandidateResult cr = evaluate_candidate(
      Xs, Vector::Ones(n), Vector::Zero(n), z, Vector::Ones(n), 1.0, n, rng,
      0.25);
  CHECK(cr.gamma_w == 0.0);
  CHECK(cr.t_w == 0.0);
  CHECK(cr.p_value == 1.0);
  CHECK(!cr.accepted);
}

TEST_CASE("evaluate_candidate rejects a zero-norm candidate") {
  const int n = 40;
  Rng rng(2);
  CHECK_THROWS_AS(evaluate_candidate(Matrix::Ones(n, 1), Vector::Ones(n),
                                     Vector::Random(n), Vector::Zero(n),
                                     Vector::Ones(n), 1.0, n, rng, 0.25),
                  DegenerateCandidate);
}

TEST_CASE("run_selection replays the wealth ledger exactly") {
  Rng data_rng(99);
  const int n = 250, p = 25;
  Matrix X(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = data_rng.normal();
    y[i] = 0.6 * X(i, 2) - 0.5 * X(i, 11) + data_rng.normal();
  }
  SelectionOptions opt;
  opt.seed = 17;
  const SelectionResult res = run_selection(X, y, opt);

  REQUIRE(res.trace.size() == static_cast<std::size_t>(p));
  AlphaInvesting ledger;
  ledger.wealth = opt.initial_wealth;
  ledger.payout = opt.payout;
  std::vector<int> accepted;
  for (const CandidateResult& tr : res.trace) {
    CHECK(tr.alpha_j == current_alpha(ledger));
    const double spent = alpha_step(ledger, tr.accepted);
    CHECK(spent == tr.alpha_j);
    CHECK(tr.wealth_after == ledger.wealth);
    CHECK(ledger.wealth > 0.0);
    if (tr.accepted) accepted.push_back(tr.index);
  }
  CHECK(accepted == res.selected);
  // The planted signals are found.
  CHECK(std::count(res.selected.begin(), res.selected.end(), 2) == 1);
  CHECK(std::count(res.selected.begin(), res.selected.end(), 11) == 1);
}

TEST_CASE("run_selection is deterministic for a fixed seed") {
  Rng data_rng(123);
  const int n = 200, p = 12;
  Matrix X(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = data_rng.normal();
    y[i] = 0.7 * X(i, 0) + data_rng.normal();
  }
  SelectionOptions opt;
  opt.seed = 4242;
  opt.subsample_m = 100;  // exercise the subsampled-rho path
  const SelectionResult a = run_selection(X, y, opt);
  const SelectionResult b = run_selection(X, y, opt);
  CHECK(a.selected == b.selected);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t j = 0; j < a.trace.size(); ++j) {
    const bool both_nan =
        std::isnan(a.trace[j].t_w) && std::isnan(b.trace[j].t_w);
    CHECK((both_nan || a.trace[j].t_w == b.trace[j].t_w));
  }
  REQUIRE(a.beta.size() == b.beta.size());
  CHECK((a.beta - b.beta).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("run_selection decisions are invariant to rescaling the response") {
  Rng data_rng(321);
  const int n = 300, p = 15;
  Matrix X(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = data_rng.normal();
    y[i] = 0.5 * X(i, 4) - 0.4 * X(i, 9) + data_rng.normal();
    if (i % 37 == 0) y[i] += 12.0;  // a few stray rows
  }
  SelectionOptions opt;
  opt.seed = 8;
  const SelectionResult base = run_selection(X, y, opt);
  const SelectionResult scaled = run_selection(X, (10.0 * y.array()).matrix(), opt);
  CHECK(base.selected == scaled.selected);
  REQUIRE(base.trace.size() == scaled.trace.size());
  for (std::size_t j = 0; j < base.trace.size(); ++j) {
    if (std::isnan(base.trace[j].t_w)) {
      CHECK(std::isnan(scaled.trace[j].t_w));
    } else {
      CHECK(scaled.trace[j].t_w ==
            doctest::Approx(base.trace[j].t_w).epsilon(1e-9));
    }
  }
  CHECK(scaled.sigma == doctest::Approx(10.0 * base.sigma).epsilon(1e-9));
}

TEST_CASE("run_selection on a constant response selects nothing") {
  Rng data_rng(55);
  const int n = 150, p = 8;
  Matrix X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = data_rng.normal();
  }
  SelectionOptions opt;
  for (const Method m : {Method::robust, Method::classical}) {
    opt.method = m;
    const SelectionResult res = run_selection(X, Vector::Ones(n) * 3.0, opt);
    CHECK(res.selected.empty());
    for (const CandidateResult& tr : res.trace) {
      // The exact-fit scale floor keeps the statistic at rounding level, so
      // every p-value sits at (numerically) one and nothing can be accepted.
      CHECK(tr.p_value > 0.99);
      CHECK(!tr.accepted);
    }
  }
}

TEST_CASE("run_selection finds a t=6 covariate and matches a hand-run scan") {
  // One candidate whose implied statistic sits near 6; the robust stage is
  // recomputed here from first principles (no library calls on the oracle
  // side except the weight kernels and the independently tested IRLS-free
  // arithmetic).
  Rng data_rng(777);
  const int n = 500;
  Matrix X(n, 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = data_rng.normal();
    y[i] = 0.27 * X(i, 0) + data_rng.normal();
  }
  SelectionOptions opt;
  opt.seed = 3;
  opt.force_full_sample = true;
  const SelectionResult res = run_selection(X, y, opt);
  REQUIRE(res.trace.size() == 1);

  // Oracle, step by step. Stage = intercept only, so the initial estimate is
  // the plain mean, the stage scale is the MAD of the centered response, and
  // the stage weights are the biweight at those standardized residuals.
  RobustnessConfig cfg;
  const double mean_y = y.mean();
  std::vector<double> cent(n), adev(n);
  for (int i = 0; i < n; ++i) cent[i] = y[i] - mean_y;
  const double med_c = naive_median(cent);
  for (int i = 0; i < n; ++i) adev[i] = std::abs(cent[i] - med_c);
  const double sigma0 = 1.483 * naive_median(adev);
  Vector w0(n);
  for (int i = 0; i < n; ++i) {
    w0[i] = tukey_weight(cent[i] / sigma0, cfg.c_tukey);
  }
  // Weighted-LS refit of the intercept and the cached residual pair.
  const double beta_s = w0.dot(y) / w0.sum();
  const Vector r = y.array() - beta_s;
  const Vector sqw = w0.cwiseSqrt();
  const Vector rw = sqw.cwiseProduct(r);
  // Candidate weighted with the stage weights.
  const Vector z = X.col(0);
  const Vector zw = sqw.cwiseProduct(z);
  const double zz = zw.squaredNorm();
  const double gamma = zw.dot(rw) / zz;
  const Vector d = r - gamma * z;
  const double s2 =
      (w0.array() * w0.array() * d.array().square()).sum() / w0.sum();
  // Full-sample collinearity against the weighted intercept column.
  const double xz = sqw.dot(zw);
  const double rho = 1.0 - xz * xz / (w0.sum() * zz);
  const double ec = compute_ec(cfg.c_tukey);
  const double t_oracle = gamma * std::sqrt(zz * ec / rho) / std::sqrt(s2);

  CHECK(res.trace[0].t_w == doctest::Approx(t_oracle).epsilon(1e-10));
  CHECK(res.trace[0].t_w > 4.0);  // comfortably past the alpha_1 = 0.25 bar
  CHECK(res.trace[0].accepted);
  REQUIRE(res.selected == std::vector<int>{0});
  // The refit slope is near the truth.
  REQUIRE(res.beta.size() == 2);
  CHECK(res.beta[1] == doctest::Approx(0.27).epsilon(0.35));
}

TEST_CASE("forcing the classical ingredients leaves only the efficiency factor") {
  Rng data_rng(2024);
  const int n = 300, p = 6;
  Matrix X(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = data_rng.normal();
    y[i] = 1.2 * X(i, 0) - 0.9 * X(i, 3) + 0.5 * data_rng.normal();
  }
  SelectionOptions rob;
  rob.method = Method::robust;
  rob.force_unit_weights = true;
  rob.force_rms_scale = true;
  rob.force_full_sample = true;
  rob.seed = 1;
  SelectionOptions cls = rob;
  cls.method = Method::classical;

  const SelectionResult r_rob = run_selection(X, y, rob);
  const SelectionResult r_cls = run_selection(X, y, cls);
  const double root_ec = std::sqrt(compute_ec(rob.robustness.c_tukey));

  REQUIRE(r_rob.selected == r_cls.selected);
  REQUIRE(r_rob.trace.size() == r_cls.trace.size());
  for (std::size_t j = 0; j < r_rob.trace.size(); ++j) {
    if (std::isnan(r_cls.trace[j].t_w)) continue;
    CHECK(r_rob.trace[j].t_w ==
          doctest::Approx(root_ec * r_cls.trace[j].t_w).epsilon(1e-8));
    CHECK(r_rob.trace[j].gamma_w ==
          doctest::Approx(r_cls.trace[j].gamma_w).epsilon(1e-12));
    CHECK(r_rob.trace[j].sigma_hat ==
          doctest::Approx(r_cls.trace[j].sigma_hat).epsilon(1e-12));
  }
  // The final refit t-values inherit the same factor.
  REQUIRE(r_rob.t_values.size() == r_cls.t_values.size());
  for (Eigen::Index l = 0; l < r_rob.t_values.size(); ++l) {
    CHECK(r_rob.t_values[l] ==
          doctest::Approx(root_ec * r_cls.t_values[l]).epsilon(1e-8));
  }
}

TEST_CASE("a duplicate of a selected column is flagged degenerate") {
  Rng data_rng(31);
  const int n = 200;
  Matrix X(n, 2);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = data_rng.normal();
    X(i, 1) = X(i, 0);
    y[i] = 1.5 * X(i, 0) + 0.5 * data_rng.normal();
  }
  SelectionOptions opt;
  opt.force_full_sample = true;
  const SelectionResult res = run_selection(X, y, opt);
  REQUIRE(res.trace.size() == 2);
  CHECK(res.trace[0].accepted);
  CHECK(res.trace[1].degenerate);
  CHECK(!res.trace[1].accepted);
  CHECK(res.trace[1].p_value == 1.0);
  CHECK(std::isnan(res.trace[1].t_w));
  CHECK(res.selected == std::vector<int>{0});
}

TEST_CASE("early_exit skips candidates once the budget underflows") {
  Rng data_rng(61);
  const int n = 80, p = 5;
  Matrix X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = data_rng.normal();
  }
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = data_rng.normal();
  SelectionOptions opt;
  opt.initial_wealth = 1e-13;
  opt.early_exit = true;
  const SelectionResult res = run_selection(X, y, opt);
  CHECK(res.selected.empty());
  REQUIRE(res.trace.size() == static_cast<std::size_t>(p));
  for (const CandidateResult& tr : res.trace) {
    CHECK(tr.degenerate);
    CHECK(std::isnan(tr.t_w));
  }
}

TEST_CASE("run_selection validates its arguments") {
  Matrix X = Matrix::Random(20, 2);
  Vector y = Vector::Random(19);
  SelectionOptions opt;
  CHECK_THROWS_AS(run_selection(X, y, opt), DimensionMismatch);
  CHECK_THROWS_AS(run_selection(Matrix(20, 0), Vector::Random(20), opt),
                  DimensionMismatch);
  SelectionOptions bad_m;
  bad_m.subsample_m = 0;
  CHECK_THROWS_AS(run_selection(X, Vector::Random(20), bad_m), ConfigError);
  SelectionOptions bad_w;
  bad_w.initial_wealth = 0.0;
  CHECK_THROWS_AS(run_selection(X, Vector::Random(20), bad_w), ConfigError);
}

TEST_CASE("select_robust and select_classical route through the dataset") {
  Rng data_rng(44);
  const int n = 150;
  Dataset data;
  data.X = Matrix(n, 3);
  data.y = Vector(n);
  data.names = {"a", "b", "c"};
  data.response_name = "y";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) data.X(i, j) = data_rng.normal();
    data.y[i] = 2.0 * data.X(i, 1) + data_rng.normal();
  }
  SelectionOptions opt;
  opt.seed = 5;
  const SelectionResult rob = select_robust(data, opt);
  const SelectionResult cls = select_classical(data, opt);
  CHECK(std::count(rob.selected.begin(), rob.selected.end(), 1) == 1);
  CHECK(std::count(cls.selected.begin(), cls.selected.end(), 1) == 1);
}
