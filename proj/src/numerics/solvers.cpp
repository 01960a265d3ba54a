#include "tsmt/numerics/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tsmt {

TrendSolve pentadiagonal_solve(double lambda, std::span<const double> x) {
  const std::size_t n = x.size();
  if (lambda < 0.0) throw std::invalid_argument("pentadiagonal_solve: lambda must be >= 0");
  if (n < 3) return {std::vector<double>(x.begin(), x.end()), true};

  // Bands of I + lambda D^T D, accumulated from the rows [1, -2, 1] of D.
  std::vector<double> d(n, 1.0), e(n - 1, 0.0), f(n - 2, 0.0);
  constexpr double c[3] = {1.0, -2.0, 1.0};
  for (std::size_t r = 0; r + 2 < n; ++r) {
    for (std::size_t a = 0; a < 3; ++a) {
      d[r + a] += lambda * c[a] * c[a];
      if (a + 1 < 3) e[r + a] += lambda * c[a] * c[a + 1];
    }
    f[r] += lambda * c[0] * c[2];
  }

  // Banded LDL^T: l1[i] = L(i, i-1), l2[i] = L(i, i-2).
  std::vector<double> diag(n), l1(n, 0.0), l2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 2) l2[i] = f[i - 2] / diag[i - 2];
    if (i >= 1) {
      double v = e[i - 1];
      if (i >= 2) v -= l2[i] * diag[i - 2] * l1[i - 1];
      l1[i] = v / diag[i - 1];
    }
    double di = d[i];
    if (i >= 1) di -= l1[i] * l1[i] * diag[i - 1];
    if (i >= 2) di -= l2[i] * l2[i] * diag[i - 2];
    diag[i] = di;
  }

  // Solve for the cyclical part c = x - trend from (I + lambda D^T D) c = lambda D^T D x,
  // so inputs in the null space of D come back unchanged bit for bit.
  std::vector<double> t(n, 0.0);
  for (std::size_t r = 0; r + 2 < n; ++r) {
    const double dx = lambda * (x[r] - 2.0 * x[r + 1] + x[r + 2]);
    for (std::size_t a = 0; a < 3; ++a) t[r + a] += c[a] * dx;
  }
  for (std::size_t i = 1; i < n; ++i) {
    t[i] -= l1[i] * t[i - 1];
    if (i >= 2) t[i] -= l2[i] * t[i - 2];
  }
  for (std::size_t i = 0; i < n; ++i) t[i] /= diag[i];
  for (std::size_t i = n; i-- > 0;) {
    if (i + 1 < n) t[i] -= l1[i + 1] * t[i + 1];
    if (i + 2 < n) t[i] -= l2[i + 2] * t[i + 2];
  }
  for (std::size_t i = 0; i < n; ++i) t[i] = x[i] - t[i];
  return {std::move(t), false};
}

std::vector<double> dense_solve(Array a, std::vector<double> b) {
  const std::size_t n = b.size();
  if (a.rank() != 2 || a.dim(0) != n || a.dim(1) != n) {
    throw std::invalid_argument("dense_solve: shape mismatch " + shape_string(a.shape()) + " vs rhs [" +
                                std::to_string(n) + "]");
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(piv, col))) piv = r;
    if (a.at(piv, col) == 0.0) throw std::runtime_error("dense_solve: singular matrix");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a.at(piv, c), a.at(col, c));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a.at(r, col) / a.at(col, col);
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a.at(r, c) -= factor * a.at(col, c);
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a.at(i, c) * x[c];
    x[i] = s / a.at(i, i);
  }
  return x;
}

namespace {

void require_square(const Array& s, const char* what) {
  if (s.rank() != 2 || s.dim(0) != s.dim(1)) {
    throw std::invalid_argument(std::string(what) + ": expected a square matrix, got " + shape_string(s.shape()));
  }
}

void require_symmetric(const Array& s, const char* what) {
  require_square(s, what);
  const std::size_t n = s.dim(0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s.at(i, j) - s.at(j, i)) > 1e-8) {
        throw std::invalid_argument(std::string(what) + ": matrix is not symmetric at (" + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");
      }
}

double clamp_eigenvalue(double v, double scale) {
  // Eigenvalues within round-off of zero are zero; their square roots would
  // otherwise inflate eps-sized noise to sqrt(eps).
  if (std::abs(v) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) return 0.0;
  if (v >= 0.0) return v;
  if (v > -1e-8 * std::max(1.0, scale)) return 0.0;
  throw std::invalid_argument("symmetric_sqrt: matrix is not positive semi-definite (eigenvalue " +
                              std::to_string(v) + ")");
}

Array matmul_plain(const Array& a, const Array& b) {
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Array c({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      for (std::size_t j = 0; j < m; ++j) c.at(i, j) += aip * b.at(p, j);
    }
  return c;
}

}  // namespace

SymmetricEigen symmetric_eigen(const Array& s) {
  require_square(s, "symmetric_eigen");
  const std::size_t n = s.dim(0);
  Array a = s;
  Array v({n, n});
  for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

  double total = 0.0;
  for (double x : a.values()) total += x * x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - sn * akq;
          a.at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - sn * aqk;
          a.at(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - sn * vkq;
          v.at(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a.at(x, x) < a.at(y, y); });
  SymmetricEigen out{std::vector<double>(n), Array({n, n})};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a.at(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors.at(k, j) = v.at(k, order[j]);
  }
  return out;
}

Array symmetric_sqrt(const Array& s) {
  require_symmetric(s, "symmetric_sqrt");
  const std::size_t n = s.dim(0);
  const SymmetricEigen eig = symmetric_eigen(s);
  const double scale = n ? std::max(std::abs(eig.values.front()), std::abs(eig.values.back())) : 0.0;
  Array r({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    const double root = std::sqrt(clamp_eigenvalue(eig.values[j], scale));
    if (root == 0.0) continue;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) r.at(a, b) += root * eig.vectors.at(a, j) * eig.vectors.at(b, j);
  }
  return r;
}

double symmetric_sqrt_product(const Array& s1, const Array& s2) {
  require_symmetric(s1, "symmetric_sqrt_product");
  require_symmetric(s2, "symmetric_sqrt_product");
  require_same_shape(s1.shape(), s2.shape(), "symmetric_sqrt_product");
  const Array root = symmetric_sqrt(s1);
  Array m = matmul_plain(matmul_plain(root, s2), root);
  const std::size_t n = m.dim(0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (m.at(i, j) + m.at(j, i));
      m.at(i, j) = m.at(j, i) = avg;
    }
  const SymmetricEigen eig = symmetric_eigen(m);
  const double scale = n ? std::max(std::abs(eig.values.front()), std::abs(eig.values.back())) : 0.0;
  double trace = 0.0;
  for (double v : eig.values) trace += std::sqrt(clamp_eigenvalue(v, scale));
  return trace;
}

}  // namespace tsmt
