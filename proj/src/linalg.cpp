#include "vifreg/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <string>

#include "vifreg/errors.hpp"

namespace vifreg {

namespace {

constexpr double kRcondFloor = 1e-12;

void check_dims(const Matrix& X, const Vector& y, const Vector& w) {
  if (X.rows() != y.size() || X.rows() != w.size()) {
    throw DimensionMismatch("weighted_ls: X has " + std::to_string(X.rows()) +
                            " rows, y has " + std::to_string(y.size()) +
                            ", w has " + std::to_string(w.size()));
  }
  if (X.rows() < X.cols() || X.cols() < 1) {
    throw DimensionMismatch("weighted_ls: need n >= q >= 1, got n=" +
                            std::to_string(X.rows()) +
                            " q=" + std::to_string(X.cols()));
  }
}

Matrix apply_row_scaling(const Matrix& X, const Vector& s) {
  return s.asDiagonal() * X;
}

}  // namespace

Vector weighted_ls(const Matrix& X, const Vector& y, const Vector& w) {
  check_dims(X, y, w);
  const Vector sw = w.cwiseSqrt();
  const Matrix Xw = apply_row_scaling(X, sw);
  const Vector yw = sw.cwiseProduct(y);

  // Fast path: Cholesky on the Gram matrix, cheapest when q << n.
  const Matrix G = Xw.transpose() * Xw;
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() == Eigen::Success && llt.rcond() >= kRcondFloor) {
    return llt.solve(Xw.transpose() * yw);
  }

  // Fallback: column-pivoted QR handles near-collinear designs.
  Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
  qr.setThreshold(kRcondFloor);
  if (qr.rank() < X.cols()) {
    throw RankDeficient("weighted_ls: weighted design has rank " +
                        std::to_string(qr.rank()) + " < " +
                        std::to_string(X.cols()));
  }
  return qr.solve(yw);
}

Vector weighted_residuals(const Matrix& X, const Vector& y, const Vector& w) {
  const Vector beta = weighted_ls(X, y, w);
  const Vector sw = w.cwiseSqrt();
  return sw.cwiseProduct(y - X * beta);
}

double projection_quadform(const Matrix& Xs, const Vector& zs) {
  if (Xs.rows() != zs.size()) {
    throw DimensionMismatch("projection_quadform: Xs has " +
                            std::to_string(Xs.rows()) + " rows, z has " +
                            std::to_string(zs.size()));
  }
  const double znorm2 = zs.squaredNorm();
  if (znorm2 < 1e-12 * static_cast<double>(zs.size())) {
    throw DegenerateCandidate(
        "projection_quadform: candidate norm too small (z'z=" +
        std::to_string(znorm2) + ")");
  }

  // ||Q_r' z||^2 where Q_r spans the column space of Xs; rank-aware so
  // collinear stage columns do not inflate the projection.
  Eigen::ColPivHouseholderQR<Matrix> qr(Xs);
  qr.setThreshold(kRcondFloor);
  const auto rank = qr.rank();
  if (rank == 0) return 0.0;
  Vector qtz = qr.householderQ().transpose() * zs;
  const double proj2 = qtz.head(rank).squaredNorm();
  return std::clamp(proj2 / znorm2, 0.0, 1.0);
}

}  // namespace vifreg
