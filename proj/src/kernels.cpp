#include "stance/kernels.hpp"

#include <atomic>
#include <cstdint>
#include <string>

#include "stance/error.hpp"

namespace stance::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::Parallel};

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 1u << 15;

void check(bool ok, const char* kernel) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, std::string(kernel) + ": operand shapes disagree");
}

inline void nt_row(ConstMatrixView a, ConstMatrixView b, MatrixView c, std::size_t i) {
  const std::size_t k = a.cols;
  const double* ai = a.data + i * k;
  double* ci = c.data + i * c.cols;
  for (std::size_t j = 0; j < b.rows; ++j) {
    const double* bj = b.data + j * k;
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] += s;
  }
}

inline void nn_row(ConstMatrixView a, ConstMatrixView b, MatrixView c, std::size_t i) {
  const std::size_t n = b.cols;
  const double* ai = a.data + i * a.cols;
  double* ci = c.data + i * n;
  for (std::size_t p = 0; p < a.cols; ++p) {
    const double aip = ai[p];
    const double* bp = b.data + p * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
  }
}

// Row r of C = sum over i of A[i][r] * B[i][:], accumulated in increasing i.
inline void tn_row(ConstMatrixView a, ConstMatrixView b, MatrixView c, std::size_t r) {
  const std::size_t n = b.cols;
  double* cr = c.data + r * n;
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double air = a(i, r);
    const double* bi = b.data + i * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) cr[j] += air * bi[j];
  }
}

template <typename RowFn>
void run_serial(std::size_t rows, RowFn&& fn) {
  for (std::size_t r = 0; r < rows; ++r) fn(r);
}

template <typename RowFn>
void run_parallel(std::size_t rows, std::size_t work, RowFn&& fn) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (work >= kParallelThreshold)
  for (std::int64_t r = 0; r < n; ++r) fn(static_cast<std::size_t>(r));
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() { return g_backend.load(std::memory_order_relaxed); }

namespace serial {

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  check(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "gemm_nt");
  run_serial(a.rows, [&](std::size_t i) { nt_row(a, b, c, i); });
}

void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  check(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "gemm_nn");
  run_serial(a.rows, [&](std::size_t i) { nn_row(a, b, c, i); });
}

void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  check(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "gemm_tn");
  run_serial(a.cols, [&](std::size_t r) { tn_row(a, b, c, r); });
}

}  // namespace serial

namespace parallel {

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  check(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "gemm_nt");
  run_parallel(a.rows, a.rows * a.cols * b.rows,
               [&](std::size_t i) { nt_row(a, b, c, i); });
}

void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  check(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "gemm_nn");
  run_parallel(a.rows, a.rows * a.cols * b.cols,
               [&](std::size_t i) { nn_row(a, b, c, i); });
}

void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  check(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "gemm_tn");
  run_parallel(a.cols, a.rows * a.cols * b.cols,
               [&](std::size_t r) { tn_row(a, b, c, r); });
}

}  // namespace parallel

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  backend() == Backend::Serial ? serial::gemm_nt(a, b, c) : parallel::gemm_nt(a, b, c);
}
void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  backend() == Backend::Serial ? serial::gemm_nn(a, b, c) : parallel::gemm_nn(a, b, c);
}
void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  backend() == Backend::Serial ? serial::gemm_tn(a, b, c) : parallel::gemm_tn(a, b, c);
}

}  // namespace stance::kernels
