#pragma once

#include <cstddef>

namespace tsmt::kernels {

// Row-major GEMM: C (m x n) = op(A) * op(B) (+ C when accumulate).
// op(A) is m x k; with trans_a, A is stored k x m. Same for B (k x n / n x k).
// Every output element is reduced over k in ascending order, so the serial
// and parallel variants produce bitwise identical results.
struct Gemm {
  std::size_t m = 0, n = 0, k = 0;
  bool trans_a = false;
  bool trans_b = false;
  bool accumulate = false;
};

void gemm(const Gemm& g, const double* a, const double* b, double* c);

/// Row-wise softmax of an (rows x cols) block in place.
void softmax_rows(double* x, std::size_t rows, std::size_t cols);

/// Row-wise log-softmax of an (rows x cols) block in place.
void log_softmax_rows(double* x, std::size_t rows, std::size_t cols);

/// Single-query attention against `len` cached key/value rows of width `dim`
/// (row stride `stride`). Writes `dim` outputs; `scores` needs `len` slots.
void attend_one(const double* q, const double* keys, const double* values, std::size_t len,
                std::size_t dim, std::size_t stride, double scale, double* scores, double* out);

namespace serial {

void gemm(const Gemm& g, const double* a, const double* b, double* c);
void softmax_rows(double* x, std::size_t rows, std::size_t cols);
void log_softmax_rows(double* x, std::size_t rows, std::size_t cols);

}  // namespace serial

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace tsmt::kernels
