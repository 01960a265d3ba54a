#include "tsmt/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsmt::kernels {

namespace {

// Work below this many multiply-adds is not worth a parallel region.
constexpr std::size_t kParallelThreshold = 1 << 15;

// C row i = A row i * B, with A row-major m x k (or k x m when trans_a).
inline void gemm_row_nn(const Gemm& g, const double* a, const double* b, double* c, std::size_t i) {
  double* crow = c + i * g.n;
  if (!g.accumulate) std::fill(crow, crow + g.n, 0.0);
  for (std::size_t p = 0; p < g.k; ++p) {
    const double aip = g.trans_a ? a[p * g.m + i] : a[i * g.k + p];
    const double* brow = b + p * g.n;
    for (std::size_t j = 0; j < g.n; ++j) crow[j] += aip * brow[j];
  }
}

// C row i against B stored n x k: dot products over contiguous rows.
inline void gemm_row_nt(const Gemm& g, const double* arow_base, const double* b, double* c,
                        std::size_t i) {
  const double* arow = arow_base + i * g.k;
  double* crow = c + i * g.n;
  for (std::size_t j = 0; j < g.n; ++j) {
    const double* brow = b + j * g.k;
    double s = g.accumulate ? crow[j] : 0.0;
    for (std::size_t p = 0; p < g.k; ++p) s += arow[p] * brow[p];
    crow[j] = s;
  }
}

std::vector<double> transpose_copy(const double* a, std::size_t rows, std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
  return t;
}

template <bool Parallel>
void gemm_impl(const Gemm& g, const double* a, const double* b, double* c) {
  const auto m = static_cast<std::ptrdiff_t>(g.m);
  const bool par = Parallel && g.m > 1 && g.m * g.n * g.k >= kParallelThreshold;
  if (!g.trans_b) {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t i = 0; i < m; ++i) gemm_row_nn(g, a, b, c, static_cast<std::size_t>(i));
    return;
  }
  // A B^T: use row dot products; an A^T operand is materialised first.
  std::vector<double> at;
  const double* abase = a;
  if (g.trans_a) {
    at = transpose_copy(a, g.k, g.m);
    abase = at.data();
  }
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) gemm_row_nt(g, abase, b, c, static_cast<std::size_t>(i));
}

inline void softmax_row(double* x, std::size_t cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    x[j] = std::exp(x[j] - mx);
    sum += x[j];
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < cols; ++j) x[j] *= inv;
}

inline void log_softmax_row(double* x, std::size_t cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < cols; ++j) sum += std::exp(x[j] - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t j = 0; j < cols; ++j) x[j] -= lse;
}

template <bool Parallel, typename RowFn>
void for_rows(double* x, std::size_t rows, std::size_t cols, RowFn fn) {
  const auto r = static_cast<std::ptrdiff_t>(rows);
  const bool par = Parallel && rows > 1 && rows * cols >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < r; ++i) fn(x + static_cast<std::size_t>(i) * cols, cols);
}

}  // namespace

void gemm(const Gemm& g, const double* a, const double* b, double* c) {
  gemm_impl<true>(g, a, b, c);
}

void softmax_rows(double* x, std::size_t rows, std::size_t cols) {
  for_rows<true>(x, rows, cols, softmax_row);
}

void log_softmax_rows(double* x, std::size_t rows, std::size_t cols) {
  for_rows<true>(x, rows, cols, log_softmax_row);
}

void attend_one(const double* q, const double* keys, const double* values, std::size_t len,
                std::size_t dim, std::size_t stride, double scale, double* scores, double* out) {
  for (std::size_t s = 0; s < len; ++s) {
    const double* krow = keys + s * stride;
    double dot = 0.0;
    for (std::size_t p = 0; p < dim; ++p) dot += q[p] * krow[p];
    scores[s] = dot * scale;
  }
  softmax_row(scores, len);
  std::fill(out, out + dim, 0.0);
  for (std::size_t s = 0; s < len; ++s) {
    const double w = scores[s];
    const double* vrow = values + s * stride;
    for (std::size_t p = 0; p < dim; ++p) out[p] += w * vrow[p];
  }
}

namespace serial {

void gemm(const Gemm& g, const double* a, const double* b, double* c) {
  gemm_impl<false>(g, a, b, c);
}

void softmax_rows(double* x, std::size_t rows, std::size_t cols) {
  for_rows<false>(x, rows, cols, softmax_row);
}

void log_softmax_rows(double* x, std::size_t rows, std::size_t cols) {
  for_rows<false>(x, rows, cols, log_softmax_row);
}

}  // namespace serial

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tsmt::kernels
