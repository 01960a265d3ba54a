#pragma once

#include <span>
#include <vector>

#include "tsmt/numerics/array.hpp"

namespace tsmt {

struct TrendSolve {
  std::vector<double> trend;
  bool warning = false;  // series too short to filter; returned unchanged
};

/// Minimiser of sum (x - trend)^2 + lambda * sum (second difference of trend)^2,
/// i.e. the solution of (I + lambda D^T D) trend = x, via a banded LDL^T
/// factorisation of the symmetric pentadiagonal system.
TrendSolve pentadiagonal_solve(double lambda, std::span<const double> x);

/// Dense Gaussian elimination with partial pivoting; a is n x n row-major.
std::vector<double> dense_solve(Array a, std::vector<double> b);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Array vectors;               // column j is the eigenvector of values[j]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Array& s);

/// PSD square root through the eigendecomposition; eigenvalues in (-1e-8, 0)
/// are clamped to zero, more negative ones throw.
Array symmetric_sqrt(const Array& s);

/// trace((S1 S2)^{1/2}) computed as trace((S1^{1/2} S2 S1^{1/2})^{1/2}).
/// Inputs must be square, equally sized and symmetric within 1e-8.
double symmetric_sqrt_product(const Array& s1, const Array& s2);

}  // namespace tsmt
