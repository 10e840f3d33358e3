#pragma once

#include <gmpxx.h>

#include <vector>

namespace padiclf {

using QVec = std::vector<mpq_class>;
using QMat = std::vector<QVec>; // row-major

QMat q_identity(size_t n);
QMat q_mul(const QMat& A, const QMat& B);
QVec q_apply(const QMat& A, const QVec& x);

// In-place reduced row echelon form; returns pivot column indices.
std::vector<size_t> rref(QMat& A);

// Basis of the right kernel of A (ncols columns).
std::vector<QVec> kernel_basis(QMat A, size_t ncols);

// Coordinates of target in the span of basis (vectors of equal length);
// throws if target lies outside the span.
QVec coords_in_span(const std::vector<QVec>& basis, const QVec& target);

mpq_class q_det(QMat A);

// Characteristic polynomial det(xI - A), coefficients ascending.
QVec charpoly(const QMat& A);

// Evaluate a polynomial (ascending coefficients) at an integer.
mpq_class poly_eval(const QVec& poly, const mpz_class& x);

// Basis of ker (A - a I)^power.
std::vector<QVec> generalized_kernel(const QMat& A, const mpq_class& a, size_t power);

// Scale to integral entries with content 1 (first nonzero entry positive).
std::vector<mpz_class> primitive_integral(const QVec& v);

} // namespace padiclf
