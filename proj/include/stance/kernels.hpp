#pragma once

// Dense kernels behind the recurrent network. Each kernel exists twice:
// `serial` is the reference loop nest, `parallel` splits the output rows
// across OpenMP threads. Both call the same per-row routine, so for a given
// input they produce bitwise-identical results regardless of thread count.
//
// All kernels accumulate: C += op(A) * op(B).

#include <cstddef>

#include "stance/matrix.hpp"

namespace stance::kernels {

enum class Backend { Serial, Parallel };

// Process-wide selection used by the network code. Defaults to Parallel.
void set_backend(Backend backend);
Backend backend();

// Scoped override, restores the previous backend on destruction.
class BackendGuard {
 public:
  explicit BackendGuard(Backend b) : previous_(backend()) { set_backend(b); }
  ~BackendGuard() { set_backend(previous_); }
  BackendGuard(const BackendGuard&) = delete;
  BackendGuard& operator=(const BackendGuard&) = delete;

 private:
  Backend previous_;
};

namespace serial {
// C (m x n) += A (m x k) * B^T, B is (n x k).
void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c);
// C (m x n) += A (m x k) * B, B is (k x n).
void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c);
// C (k x n) += A^T * B, A is (m x k), B is (m x n).
void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c);
}  // namespace serial

namespace parallel {
void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c);
void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c);
void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c);
}  // namespace parallel

// Dispatch on backend().
void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c);
void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c);
void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c);

}  // namespace stance::kernels
