#pragma once

#include "vifreg/types.hpp"

namespace vifreg {

// Tuning constants and iteration controls for the robust fits.
struct RobustnessConfig {
  double c_tukey = 4.685;   // 95% efficiency cutoff for the biweight
  double c_huber = 1.345;   // 95% efficiency cutoff for Huber weights
  double irls_tol = 1e-8;   // max absolute coefficient change at convergence
  int irls_max_iter = 50;
  int refine_steps = 0;     // extra reweighting steps after the initial fit
};

// Median of v (average of the two middle order statistics for even length).
double median(const Vector& v);

// 1.483 * median(|v_i - median(v)|). Throws ZeroScale when the result is 0.
double mad(const Vector& v);

// mad() with the fallback policy applied: when the MAD collapses to zero,
// use 1.4826 * mean absolute deviation about the median instead; if that is
// also zero the input is constant and ZeroScale is thrown.
double robust_scale(const Vector& v);

// Tukey biweight: ((r/c)^2 - 1)^2 for |r| <= c, else 0.
inline double tukey_weight(double r, double c) {
  const double u = r / c;
  if (u < -1.0 || u > 1.0) return 0.0;
  const double t = u * u - 1.0;
  return t * t;
}

// Huber weight: min{1, c/|r|}, with value 1 at r = 0.
inline double huber_weight(double r, double c) {
  const double a = r < 0 ? -r : r;
  return a <= c ? 1.0 : c / a;
}

// Result of a marginal (single-covariate) M-fit.
struct MarginalFit {
  double intercept = 0.0;
  double slope = 0.0;
  double scale = 1.0;   // MAD of the raw residuals at convergence
  Vector weights;       // biweight at the converged standardized residuals
  bool converged = true;
};

// Huber IRLS fit of y on (1, x). The returned per-observation weights use
// the biweight form evaluated at the converged standardized residuals, which
// is what the selector's weighted candidate columns are built from.
// Throws ZeroScale for a degenerate response, RankDeficient for constant x.
MarginalFit marginal_m_fit(const Vector& y, const Vector& x,
                           const RobustnessConfig& cfg);

// Stage estimate driving the selector: coefficients, per-row stage weights,
// and the robust residual scale.
struct InitialEstimate {
  Vector beta;     // length q, intercept first
  Vector weights;  // w_i = biweight(residual_i / scale)
  double scale;
};

// Coordinate-weighted closed-form initial estimator. Xs is the stage design
// (leading intercept column); marg_w holds one weight column per non-intercept
// column of Xs (the intercept implicitly carries unit weights):
//   beta0 = (Xw0' Xw0)^-1 (Xw2' y),  Xw0 = [1, sqrt(w_ij) x_ij],
//                                    Xw2 = [1, w_ij x_ij].
// Then residuals r = y - Xs beta0, scale = 1.483 med|r - med(r)|, and the
// stage weights are biweight(r_i / scale).
InitialEstimate initial_estimator(const Vector& y, const Matrix& Xs,
                                  const Matrix& marg_w,
                                  const RobustnessConfig& cfg);

// Iterative refinement: `steps` rounds of recomputing biweights at the
// current residuals (scale = MAD of those residuals) followed by weighted
// LS. steps = 0 returns beta unchanged.
Vector refine(const Vector& y, const Matrix& Xs, const Vector& beta,
              const RobustnessConfig& cfg, int steps);

}  // namespace vifreg
