#pragma once

#include <cstddef>

namespace skelrob::num {

// Small dense kernels behind the graph ops. Plain loops, shaped so the
// compiler vectorizes them; accumulation order is fixed for determinism.

// C[M,N] (+)= A[M,K] * B[K,N]
void gemm_nn(const double* A, const double* B, double* C, int M, int K, int N,
             bool accumulate);

// C[K,N] (+)= sum_m A[m,k] * B[m,n]   (A is [M,K], B is [M,N])
void gemm_tn(const double* A, const double* B, double* C, int M, int K, int N,
             bool accumulate);

// C[M,N] (+)= sum_k A[m,k] * B[n,k]   (A is [M,K], B is [N,K])
void gemm_nt(const double* A, const double* B, double* C, int M, int N, int K,
             bool accumulate);

} // namespace skelrob::num
