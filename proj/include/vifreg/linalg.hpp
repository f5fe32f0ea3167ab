#pragma once

#include "vifreg/types.hpp"

namespace vifreg {

// Weighted least squares: beta = (Xw' Xw)^-1 Xw' yw with Xw = diag(sqrt(w)) X
// and yw = diag(sqrt(w)) y. Solved by Cholesky on the weighted Gram matrix
// with a rank-revealing QR fallback near singularity.
// Throws DimensionMismatch or RankDeficient.
Vector weighted_ls(const Matrix& X, const Vector& y, const Vector& w);

// Weighted residuals r = yw - Xw beta = diag(sqrt(w)) (y - X beta) with beta
// from weighted_ls on the same inputs.
Vector weighted_residuals(const Matrix& X, const Vector& y, const Vector& w);

// z' H z / z' z where H is the orthogonal projector onto the column space of
// Xs; the fraction of z's variance explained by Xs. Result clamped to [0, 1].
// Throws DegenerateCandidate when z' z < 1e-12 * rows.
double projection_quadform(const Matrix& Xs, const Vector& zs);

}  // namespace vifreg
