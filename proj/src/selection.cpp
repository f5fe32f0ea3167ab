#include "vifreg/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>

#include "vifreg/errors.hpp"
#include "vifreg/linalg.hpp"
#include "vifreg/rng.hpp"

namespace vifreg {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kRhoFloor = 1e-10;

// ---------------------------------------------------------------------------
// Efficiency integral.

double phi_pdf(double r) {
  return 0.39894228040143267794 * std::exp(-0.5 * r * r);
}

// psi'(r) for the biweight (up to the 1/c^... scaling that cancels in e_c):
// derivative integrand of the numerator.
double ec_numerator_f(double r, double c) {
  const double u2 = (r / c) * (r / c);
  return (5.0 * u2 * u2 - 6.0 * u2 + 1.0) * phi_pdf(r);
}

double ec_denominator_f(double r, double c) {
  const double t = (r / c) * (r / c) - 1.0;
  const double t2 = t * t;
  return r * r * t2 * t2 * phi_pdf(r);
}

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa,
                            double fm, double fb, double whole, double tol,
                            int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// ---------------------------------------------------------------------------
// Selection engine internals.

struct EngineMode {
  bool unit_weights;   // all observation weights pinned to 1
  bool rms_scale;      // root-mean-square residual scale instead of MAD
  double efficiency;   // e_c in the statistic's variance denominator
};

EngineMode resolve_mode(const SelectionOptions& opt) {
  EngineMode m{};
  if (opt.method == Method::classical) {
    m.unit_weights = true;
    m.rms_scale = true;
    m.efficiency = 1.0;
  } else {
    m.unit_weights = opt.force_unit_weights;
    m.rms_scale = opt.force_rms_scale;
    m.efficiency = compute_ec(opt.robustness.c_tukey);
  }
  return m;
}

double rms(const Vector& v) {
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

// Residual scale with a floor so an exact fit yields a huge statistic rather
// than a division by zero.
double scale_with_floor(const Vector& v, bool use_rms, double y_mag) {
  const double floor_val = 1e-12 * (1.0 + y_mag);
  if (use_rms) return std::max(rms(v), floor_val);
  try {
    return robust_scale(v);
  } catch (const ZeroScale&) {
    return floor_val;
  }
}

// Stage model: estimate, per-row weights, scale, and the cached residual
// vectors all candidates in this stage are scored against.
struct Stage {
  Matrix Xs;       // n x q design, intercept first
  Matrix margW;    // n x (q-1) marginal weights of the selected columns
  Vector beta0;
  Vector w0;       // stage observation weights
  double sigma0 = 1.0;
  Vector sqrt_w0;
  Vector rw;       // weighted residuals of the weighted-LS stage refit
  Vector r_raw;    // the same residuals on the raw (unweighted) scale
};

// Steps 2-5 against a precomputed stage (step 1 is the cached residual pair).
// Fills the statistic fields of a CandidateResult; decision fields stay
// default.
//
// Variance estimate: the slope numerator is sum(z_i sqrt(wij_i w0_i) e_i), so
// its variance is driven by the doubly-weighted residuals wij*w0*e^2 -- the
// weights are functions of the residuals, which couples the two factors (a
// plain scale estimate times a weight mass misses that coupling and deflates
// the statistic). We therefore estimate the residual variance component as
//
//   sigma*^2 = sum(wij * w0 * d^2) / sum(w0),   d = r_raw - gamma * z,
//
// and use T = rho^{-1/2} * gamma / sqrt(sigma*^2 / (sum(wij z^2) * e_c)).
// With all weights equal to one, sigma*^2 is exactly the mean squared
// residual, so this reduces to the unweighted statistic bit-for-bit.
CandidateResult evaluate_core(const Matrix& Xs, const Vector& w0,
                              const Vector& sqrt_w0, const Vector& rw,
                              const Vector& r_raw, const Vector& z,
                              const Vector& wij, double e_c, int subsample_m,
                              Rng& rng, bool force_full, double y_mag) {
  const auto n = Xs.rows();
  const auto q = Xs.cols();

  Vector zw = wij.cwiseSqrt().cwiseProduct(z);
  const double zz = zw.squaredNorm();
  if (zz < 1e-12 * static_cast<double>(n)) {
    throw DegenerateCandidate("candidate weighted norm ~ 0");
  }
  const double gamma = zw.dot(rw) / zz;

  const double w_mass = w0.sum();
  if (w_mass < 1e-12 * static_cast<double>(n)) {
    throw DegenerateCandidate("stage weights have vanished");
  }

  const Vector d = r_raw - gamma * z;
  const double var_comp =
      (wij.array() * w0.array() * d.array().square()).sum() / w_mass;
  const double floor_val = 1e-12 * (1.0 + y_mag);
  const double sigma = std::max(std::sqrt(var_comp), floor_val);

  // Collinearity factor on a fresh subsample; the stage columns carry the
  // stage weights, the candidate its own.
  Eigen::Index m_eff = std::min<Eigen::Index>(
      n, std::max<Eigen::Index>(subsample_m, 2 * q));
  if (force_full) m_eff = n;

  double r2;
  if (m_eff >= n) {
    const Matrix Xw = sqrt_w0.asDiagonal() * Xs;
    r2 = projection_quadform(Xw, zw);
  } else {
    const std::vector<int> idx = rng.sample_without_replacement(
        static_cast<int>(n), static_cast<int>(m_eff));
    Matrix Xw_sub(m_eff, q);
    Vector zw_sub(m_eff);
    for (Eigen::Index r = 0; r < m_eff; ++r) {
      const int row = idx[static_cast<std::size_t>(r)];
      Xw_sub.row(r) = Xs.row(row) * sqrt_w0[row];
      zw_sub[r] = zw[row];
    }
    r2 = projection_quadform(Xw_sub, zw_sub);
  }
  const double rho = 1.0 - r2;
  if (rho <= kRhoFloor) {
    throw DegenerateCandidate("candidate weighted-collinear with stage (rho ~ 0)");
  }

  CandidateResult cr;
  cr.gamma_w = gamma;
  cr.sigma_hat = sigma;
  cr.rho_w = rho;
  cr.t_w = gamma * std::sqrt(zz * e_c / rho) / sigma;
  cr.p_value = two_sided_p(cr.t_w);
  return cr;
}

void recompute_stage(Stage& st, const Vector& y, const EngineMode& mode,
                     const RobustnessConfig& cfg, double y_mag) {
  const auto n = st.Xs.rows();
  if (mode.unit_weights) {
    st.beta0 = weighted_ls(st.Xs, y, Vector::Ones(n));
    st.w0 = Vector::Ones(n);
    const Vector resid = y - st.Xs * st.beta0;
    st.sigma0 = std::max(rms(resid), 1e-12 * (1.0 + y_mag));
  } else {
    InitialEstimate est = initial_estimator(y, st.Xs, st.margW, cfg);
    if (cfg.refine_steps > 0) {
      est.beta = refine(y, st.Xs, est.beta, cfg, cfg.refine_steps);
      const Vector resid = y - st.Xs * est.beta;
      est.scale = scale_with_floor(resid, false, y_mag);
      for (Eigen::Index i = 0; i < n; ++i) {
        est.weights[i] = tukey_weight(resid[i] / est.scale, cfg.c_tukey);
      }
    }
    st.beta0 = est.beta;
    st.w0 = est.weights;
    st.sigma0 = est.scale;
  }
  st.sqrt_w0 = st.w0.cwiseSqrt();
  const Vector beta_s = weighted_ls(st.Xs, y, st.w0);
  st.r_raw = y - st.Xs * beta_s;
  st.rw = st.sqrt_w0.cwiseProduct(st.r_raw);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double two_sided_p(double t) { return std::erfc(std::abs(t) * kInvSqrt2); }

double compute_ec(double c) {
  if (!(c > 0.0)) throw ConfigError("compute_ec: cutoff must be positive");
  static std::map<double, double> cache;
  static std::mutex cache_mutex;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(c);
    if (it != cache.end()) return it->second;
  }
  // Both integrands are even: integrate [0, c] and double. The upper limit
  // is capped at 10 because the Gaussian factor leaves < 1e-21 of mass
  // beyond it -- far below the quadrature tolerance -- while a very large c
  // would otherwise put all three initial Simpson nodes where the integrand
  // (which vanishes at 0 and underflows past ~40) is zero, ending the
  // refinement before it ever sees the bump near r = 2.
  const double upper = std::min(c, 10.0);
  const double num =
      2.0 * adaptive_simpson([c](double r) { return ec_numerator_f(r, c); },
                             0.0, upper, 5e-11);
  const double den =
      2.0 * adaptive_simpson([c](double r) { return ec_denominator_f(r, c); },
                             0.0, upper, 5e-11);
  const double value = num * num / den;
  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(c, value);
  return value;
}

double current_alpha(const AlphaInvesting& st) {
  return st.wealth / (1.0 + st.step - st.last_rejection);
}

double alpha_step(AlphaInvesting& st, bool rejected) {
  const double alpha = current_alpha(st);
  if (rejected) {
    st.wealth += st.payout;
    st.last_rejection = st.step;
  } else {
    st.wealth -= alpha / (1.0 - alpha);
  }
  st.step += 1;
  return alpha;
}

SelectionResult run_selection(const Matrix& X, const Vector& y,
                              const SelectionOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n) throw DimensionMismatch("run_selection: X/y row mismatch");
  if (p < 1) throw DimensionMismatch("run_selection: need at least one candidate");
  if (opt.subsample_m < 1) throw ConfigError("run_selection: subsample_m must be >= 1");
  if (!(opt.initial_wealth > 0.0) || !(opt.payout > 0.0)) {
    throw ConfigError("run_selection: wealth and payout must be positive");
  }

  const EngineMode mode = resolve_mode(opt);
  const RobustnessConfig& cfg = opt.robustness;
  const double y_mag = y.size() ? y.array().abs().maxCoeff() : 0.0;

  Stage st;
  st.Xs = Matrix::Ones(n, 1);
  st.margW = Matrix(n, 0);
  recompute_stage(st, y, mode, cfg, y_mag);

  AlphaInvesting inv;
  inv.wealth = opt.initial_wealth;
  inv.payout = opt.payout;

  Rng rng(opt.seed);

  SelectionResult out;
  out.trace.reserve(p);

  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (Eigen::Index j = 0; j < p; ++j) {
    CandidateResult cr;
    cr.index = static_cast<int>(j);
    cr.alpha_j = current_alpha(inv);

    if (opt.early_exit && cr.alpha_j < 1e-12) {
      // Budget exhausted: remaining candidates are charged as skips so the
      // trace stays one entry per column.
      cr.gamma_w = nan;
      cr.sigma_hat = nan;
      cr.rho_w = nan;
      cr.t_w = nan;
      cr.p_value = 1.0;
      cr.degenerate = true;
      alpha_step(inv, false);
      cr.wealth_after = inv.wealth;
      out.trace.push_back(cr);
      continue;
    }

    try {
      // Candidate weights: the stage weights by default (no marginal IRLS in
      // the scan); the candidate's own marginal-fit weights behind the
      // research switch.
      Vector wij;
      MarginalFit mf;
      bool have_marginal = false;
      if (mode.unit_weights) {
        wij = Vector::Ones(n);
      } else if (opt.marginal_weights_for_z) {
        mf = marginal_m_fit(y, X.col(j), cfg);
        cr.marginal_converged = mf.converged;
        have_marginal = true;
        wij = mf.weights;
      } else {
        wij = st.w0;
      }

      const CandidateResult stats = evaluate_core(
          st.Xs, st.w0, st.sqrt_w0, st.rw, st.r_raw, X.col(j), wij,
          mode.efficiency, opt.subsample_m, rng, opt.force_full_sample, y_mag);
      cr.gamma_w = stats.gamma_w;
      cr.sigma_hat = stats.sigma_hat;
      cr.rho_w = stats.rho_w;
      cr.t_w = stats.t_w;
      cr.p_value = stats.p_value;
      cr.accepted = cr.p_value < cr.alpha_j;

      if (cr.accepted) {
        // Grow the stage: append the raw column and its marginal weights
        // (fit now if the scan did not need them), then re-estimate the
        // stage model over all selected columns.
        const auto q_new = st.Xs.cols() + 1;
        st.Xs.conservativeResize(Eigen::NoChange, q_new);
        st.Xs.col(q_new - 1) = X.col(j);
        st.margW.conservativeResize(n, q_new - 1);
        if (mode.unit_weights) {
          st.margW.col(q_new - 2).setOnes();
        } else {
          if (!have_marginal) {
            mf = marginal_m_fit(y, X.col(j), cfg);
            cr.marginal_converged = mf.converged;
          }
          st.margW.col(q_new - 2) = mf.weights;
        }
        recompute_stage(st, y, mode, cfg, y_mag);
        out.selected.push_back(static_cast<int>(j));
      }
    } catch (const DegenerateCandidate&) {
      cr.gamma_w = nan;
      cr.sigma_hat = nan;
      cr.rho_w = nan;
      cr.t_w = nan;
      cr.p_value = 1.0;
      cr.accepted = false;
      cr.degenerate = true;
    }

    alpha_step(inv, cr.accepted);
    cr.wealth_after = inv.wealth;
    out.trace.push_back(cr);
  }

  // Final refit on the selected design with the final stage weights.
  const Vector w_final = mode.unit_weights ? Vector::Ones(n) : st.w0;
  out.beta = weighted_ls(st.Xs, y, w_final);
  const Vector sw = w_final.cwiseSqrt();
  const Vector rw_final = sw.cwiseProduct(y - st.Xs * out.beta);
  out.sigma = scale_with_floor(rw_final, mode.rms_scale, y_mag);

  // t-values from Var(beta_l) = sigma^2 [(Xw'Xw)^-1]_ll / e_c.
  const Matrix Xw = sw.asDiagonal() * st.Xs;
  const Matrix cov = (Xw.transpose() * Xw).inverse();
  out.t_values.resize(out.beta.size());
  for (Eigen::Index l = 0; l < out.beta.size(); ++l) {
    const double se = out.sigma * std::sqrt(std::max(cov(l, l), 0.0) /
                                            mode.efficiency);
    out.t_values[l] = se > 0 ? out.beta[l] / se : 0.0;
  }

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

CandidateResult evaluate_candidate(const Matrix& Xs, const Vector& w_stage,
                                   const Vector& y, const Vector& z,
                                   const Vector& w_candidate, double e_c,
                                   int subsample_m, Rng& rng, double alpha) {
  const Vector beta_s = weighted_ls(Xs, y, w_stage);
  const Vector r_raw = y - Xs * beta_s;
  const Vector rw = w_stage.cwiseSqrt().cwiseProduct(r_raw);
  const double y_mag = y.size() ? y.array().abs().maxCoeff() : 0.0;
  CandidateResult cr =
      evaluate_core(Xs, w_stage, w_stage.cwiseSqrt(), rw, r_raw, z,
                    w_candidate, e_c, subsample_m, rng,
                    /*force_full=*/false, y_mag);
  cr.alpha_j = alpha;
  cr.accepted = cr.p_value < alpha;
  return cr;
}

SelectionResult select_robust(const Dataset& data, const SelectionOptions& opt) {
  SelectionOptions o = opt;
  o.method = Method::robust;
  return run_selection(data.X, data.y, o);
}

SelectionResult select_classical(const Dataset& data,
                                 const SelectionOptions& opt) {
  SelectionOptions o = opt;
  o.method = Method::classical;
  return run_selection(data.X, data.y, o);
}

}  // namespace vifreg
