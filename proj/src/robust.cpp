#include "vifreg/robust.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vifreg/errors.hpp"
#include "vifreg/linalg.hpp"

namespace vifreg {

namespace {

constexpr double kMadFactor = 1.483;   // consistency at the normal model
constexpr double kMeanAdFactor = 1.4826;

double median_inplace(std::vector<double>& buf) {
  const std::size_t n = buf.size();
  auto mid = buf.begin() + n / 2;
  std::nth_element(buf.begin(), mid, buf.end());
  if (n % 2 == 1) return *mid;
  // Even length: the lower middle is the max of the first half.
  const double hi = *mid;
  const double lo = *std::max_element(buf.begin(), mid);
  return 0.5 * (lo + hi);
}

// Median and 1.483*med|v - med| in one pass over a scratch buffer.
struct LocationScale {
  double med;
  double mad;  // already scaled by 1.483
};

LocationScale location_scale(const double* v, std::size_t n,
                             std::vector<double>& scratch) {
  scratch.assign(v, v + n);
  const double med = median_inplace(scratch);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = std::abs(v[i] - med);
  const double raw = median_inplace(scratch);
  return {med, kMadFactor * raw};
}

}  // namespace

double median(const Vector& v) {
  std::vector<double> buf(v.data(), v.data() + v.size());
  return median_inplace(buf);
}

double mad(const Vector& v) {
  if (v.size() < 2) throw DimensionMismatch("mad: need length >= 2");
  std::vector<double> scratch;
  const auto ls = location_scale(v.data(), static_cast<std::size_t>(v.size()),
                                 scratch);
  if (ls.mad <= 0.0) throw ZeroScale("mad: zero scale (half of the values coincide with the median)");
  return ls.mad;
}

double robust_scale(const Vector& v) {
  if (v.size() < 2) throw DimensionMismatch("robust_scale: need length >= 2");
  std::vector<double> scratch;
  const auto ls = location_scale(v.data(), static_cast<std::size_t>(v.size()),
                                 scratch);
  if (ls.mad > 0.0) return ls.mad;
  const double mean_ad =
      (v.array() - ls.med).abs().mean() * kMeanAdFactor;
  if (mean_ad > 0.0) return mean_ad;
  throw ZeroScale("robust_scale: input is constant");
}

MarginalFit marginal_m_fit(const Vector& y, const Vector& x,
                           const RobustnessConfig& cfg) {
  const auto n = y.size();
  if (x.size() != n) throw DimensionMismatch("marginal_m_fit: x/y length mismatch");
  if (n < 3) throw DimensionMismatch("marginal_m_fit: need n >= 3");

  // Ordinary LS start for the 2-parameter model, via centered sums.
  const double xbar = x.mean();
  const double ybar = y.mean();
  const double sxx = (x.array() - xbar).square().sum();
  if (sxx <= 0.0) throw RankDeficient("marginal_m_fit: constant covariate");
  double b1 = (x.array() - xbar).cwiseProduct(y.array() - ybar).sum() / sxx;
  double b0 = ybar - b1 * xbar;

  // An (almost) exact fit makes every scale estimate collapse; the floor
  // turns the standardized residuals into ~0 so all weights become 1, which
  // is the sensible reading of a perfectly explained response.
  const double scale_floor = 1e-12 * (1.0 + y.array().abs().maxCoeff());
  std::vector<double> scratch;
  Vector r(n), w(n);
  double scale = 1.0;
  bool converged = false;

  for (int iter = 0; iter < cfg.irls_max_iter; ++iter) {
    r = y - b0 * Vector::Ones(n) - b1 * x;
    auto ls = location_scale(r.data(), static_cast<std::size_t>(n), scratch);
    if (ls.mad <= 0.0) {
      // Half the residuals tie at the median; fall back to the mean absolute
      // deviation so a few repeated values do not kill the fit.
      ls.mad = (r.array() - ls.med).abs().mean() * kMeanAdFactor;
    }
    scale = std::max(ls.mad, scale_floor);

    // One weighted LS step with Huber weights at current residuals.
    double sw = 0, swx = 0, swxx = 0, swy = 0, swxy = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double wi = huber_weight(r[i] / scale, cfg.c_huber);
      w[i] = wi;
      const double xi = x[i], yi = y[i];
      sw += wi;
      swx += wi * xi;
      swxx += wi * xi * xi;
      swy += wi * yi;
      swxy += wi * xi * yi;
    }
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0) throw RankDeficient("marginal_m_fit: weighted design degenerate");
    const double nb1 = (sw * swxy - swx * swy) / det;
    const double nb0 = (swy - swx * nb1) / sw;
    const double step = std::max(std::abs(nb0 - b0), std::abs(nb1 - b1));
    b0 = nb0;
    b1 = nb1;
    if (step < cfg.irls_tol) {
      converged = true;
      break;
    }
  }

  // Residuals/scale at the final coefficients; weights switch to the
  // biweight form used downstream by the selector.
  r = y - b0 * Vector::Ones(n) - b1 * x;
  auto ls = location_scale(r.data(), static_cast<std::size_t>(n), scratch);
  if (ls.mad <= 0.0) {
    ls.mad = (r.array() - ls.med).abs().mean() * kMeanAdFactor;
  }
  scale = std::max(ls.mad, scale_floor);

  MarginalFit fit;
  fit.intercept = b0;
  fit.slope = b1;
  fit.scale = scale;
  fit.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    fit.weights[i] = tukey_weight(r[i] / scale, cfg.c_tukey);
  }
  fit.converged = converged;
  return fit;
}

InitialEstimate initial_estimator(const Vector& y, const Matrix& Xs,
                                  const Matrix& marg_w,
                                  const RobustnessConfig& cfg) {
  const auto n = Xs.rows();
  const auto q = Xs.cols();
  if (y.size() != n) throw DimensionMismatch("initial_estimator: y length mismatch");
  if (marg_w.cols() != q - 1 || (q > 1 && marg_w.rows() != n)) {
    throw DimensionMismatch("initial_estimator: need one weight column per non-intercept column");
  }

  // Xw0 = [1, sqrt(w) x], Xw2 = [1, w x]; the intercept keeps unit weights.
  Matrix Xw0 = Xs;
  Matrix Xw2 = Xs;
  for (Eigen::Index j = 1; j < q; ++j) {
    Xw0.col(j) = marg_w.col(j - 1).cwiseSqrt().cwiseProduct(Xs.col(j));
    Xw2.col(j) = marg_w.col(j - 1).cwiseProduct(Xs.col(j));
  }

  const Matrix G = Xw0.transpose() * Xw0;
  const Vector rhs = Xw2.transpose() * y;
  Eigen::LLT<Matrix> llt(G);
  Vector beta;
  if (llt.info() == Eigen::Success && llt.rcond() >= 1e-12) {
    beta = llt.solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(G);
    qr.setThreshold(1e-12);
    if (qr.rank() < q) {
      throw RankDeficient("initial_estimator: weighted Gram matrix singular");
    }
    beta = qr.solve(rhs);
  }

  InitialEstimate est;
  est.beta = beta;
  const Vector resid = y - Xs * beta;

  std::vector<double> scratch;
  auto ls = location_scale(resid.data(), static_cast<std::size_t>(n), scratch);
  double scale = ls.mad;
  if (scale <= 0.0) {
    const double mean_ad =
        (resid.array() - ls.med).abs().mean() * kMeanAdFactor;
    scale = mean_ad > 0.0 ? mean_ad
                          : 1e-12 * (1.0 + y.array().abs().maxCoeff());
  }
  est.scale = scale;
  est.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    est.weights[i] = tukey_weight(resid[i] / scale, cfg.c_tukey);
  }
  return est;
}

Vector refine(const Vector& y, const Matrix& Xs, const Vector& beta,
              const RobustnessConfig& cfg, int steps) {
  Vector b = beta;
  for (int k = 0; k < steps; ++k) {
    const Vector resid = y - Xs * b;
    const double scale = robust_scale(resid);
    Vector w(resid.size());
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      w[i] = tukey_weight(resid[i] / scale, cfg.c_tukey);
    }
    b = weighted_ls(Xs, y, w);
  }
  return b;
}

}  // namespace vifreg
