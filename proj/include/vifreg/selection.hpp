#pragma once

#include <cstdint>
#include <vector>

#include "vifreg/robust.hpp"
#include "vifreg/types.hpp"

namespace vifreg {

// Standard normal CDF, accurate to ~1e-14 absolute (via erfc).
double normal_cdf(double x);

// Two-sided tail probability 2*(1 - Phi(|t|)), computed without cancellation.
double two_sided_p(double t);

// Efficiency factor of the biweight at cutoff c relative to least squares at
// the normal model:
//   e_c = [I (5u^4 - 6u^2 + 1) dPhi]^2 / I r^2 (u^2 - 1)^4 dPhi,  u = r/c,
// both integrals over [-c, c]. Adaptive quadrature, absolute error <= 1e-10,
// memoized per cutoff.
double compute_ec(double c);

// Sequential testing budget. Wealth grows by `payout` on each rejection of
// the null (i.e. each accepted covariate) and shrinks by alpha/(1-alpha)
// otherwise.
struct AlphaInvesting {
  double wealth = 0.50;
  double payout = 0.05;
  int last_rejection = 0;  // index of the most recent rejection
  int step = 1;            // 1-based test counter
};

// The level available for the current test: wealth / (1 + step - last_rejection).
double current_alpha(const AlphaInvesting& st);

// Applies one test outcome to the ledger and advances the step counter.
// Returns the alpha that was spent/invested at this step.
double alpha_step(AlphaInvesting& st, bool rejected);

// One scanned candidate. For a degenerate candidate (weighted norm ~ 0 or
// weighted-collinear with the stage) the statistic fields are NaN, the
// p-value is 1 and the test is charged as a non-rejection.
struct CandidateResult {
  int index = -1;
  double gamma_w = 0.0;
  double sigma_hat = 0.0;
  double rho_w = 0.0;
  double t_w = 0.0;
  double p_value = 1.0;
  double alpha_j = 0.0;
  bool accepted = false;
  double wealth_after = 0.0;
  bool degenerate = false;
  bool marginal_converged = true;
};

enum class Method { robust, classical };

class Rng;  // defined in rng.hpp

// Five-step evaluation of one candidate column z against the current stage:
//   1. weighted residuals of the stage fit under w_stage (raw residuals
//      r_raw, weighted residuals rw = sqrt(w_stage) .* r_raw);
//   2. weighted candidate zw = sqrt(w_candidate) .* z and the slope
//      gamma = zw'rw / zw'zw of the residuals on zw;
//   3. variance component sigma^2 = sum(w_candidate .* w_stage .* d^2)
//      / sum(w_stage) with d = r_raw - gamma * z: the slope numerator is
//      sum(z sqrt(w_candidate w_stage) e), and because the weights are
//      functions of the residuals the doubly-weighted squared residuals are
//      what its variance actually averages;
//   4. rho = 1 - (explained fraction of zw over the weighted stage columns),
//      estimated on a fresh subsample of size subsample_m (all rows when
//      subsample_m >= n);
//   5. T = rho^-1/2 * gamma / sqrt(sigma^2 / (zw'zw * e_c)), full-sample
//      norms. With all weights equal to one, sigma^2 is exactly the mean
//      squared residual, so this reduces to the unweighted statistic.
// `alpha` is the level the decision is tested at. Throws DegenerateCandidate
// for a zero-norm or stage-collinear candidate.
CandidateResult evaluate_candidate(const Matrix& Xs, const Vector& w_stage,
                                   const Vector& y, const Vector& z,
                                   const Vector& w_candidate, double e_c,
                                   int subsample_m, Rng& rng, double alpha);

struct SelectionOptions {
  Method method = Method::robust;
  int subsample_m = 200;       // rows used for the collinearity estimate
  std::uint64_t seed = 1;
  double initial_wealth = 0.50;
  double payout = 0.05;
  RobustnessConfig robustness{};
  // Weight the candidate column with its own marginal-fit weights instead of
  // the current stage weights (research switch). Stage weights are the
  // default: they carry no dependence on the candidate, which keeps the
  // statistic calibrated -- marginal weights are fit on the candidate itself,
  // and the fitted slope correlates sqrt(w) with z enough to visibly inflate
  // the null statistic.
  bool marginal_weights_for_z = false;
  // Stop scanning once alpha underflows 1e-12 (off: scan all candidates).
  bool early_exit = false;
  // Test hooks: force individual classical ingredients inside the robust
  // engine; used by the statistic-reduction identity checks.
  bool force_unit_weights = false;
  bool force_full_sample = false;
  bool force_rms_scale = false;
};

struct SelectionResult {
  std::vector<int> selected;  // accepted column indices in acceptance order
  Vector beta;                // final refit: intercept first, then selected
  Vector t_values;            // aligned with beta
  double sigma = 0.0;         // residual scale of the final refit
  std::vector<CandidateResult> trace;  // one entry per candidate column
  double wall_seconds = 0.0;
};

// Single streamwise pass over the columns of X in their given order.
// X must not contain an intercept column and should be standardized.
SelectionResult run_selection(const Matrix& X, const Vector& y,
                              const SelectionOptions& opt);

SelectionResult select_robust(const Dataset& data, const SelectionOptions& opt);
SelectionResult select_classical(const Dataset& data, const SelectionOptions& opt);

}  // namespace vifreg
