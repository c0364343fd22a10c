#include "skelrob/blas.hpp"

#include <algorithm>

namespace skelrob::num {

void gemm_nn(const double* A, const double* B, double* C, int M, int K, int N,
             bool accumulate) {
    for (int m = 0; m < M; ++m) {
        double* c = C + static_cast<size_t>(m) * N;
        if (!accumulate) std::fill(c, c + N, 0.0);
        const double* a = A + static_cast<size_t>(m) * K;
        for (int k = 0; k < K; ++k) {
            const double av = a[k];
            const double* b = B + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

void gemm_tn(const double* A, const double* B, double* C, int M, int K, int N,
             bool accumulate) {
    if (!accumulate) std::fill(C, C + static_cast<size_t>(K) * N, 0.0);
    for (int m = 0; m < M; ++m) {
        const double* a = A + static_cast<size_t>(m) * K;
        const double* b = B + static_cast<size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const double av = a[k];
            double* c = C + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

void gemm_nt(const double* A, const double* B, double* C, int M, int N, int K,
             bool accumulate) {
    for (int m = 0; m < M; ++m) {
        const double* a = A + static_cast<size_t>(m) * K;
        double* c = C + static_cast<size_t>(m) * N;
        for (int n = 0; n < N; ++n) {
            const double* b = B + static_cast<size_t>(n) * K;
            // four independent partial sums so the dot product vectorizes
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            int k = 0;
            for (; k + 4 <= K; k += 4) {
                s0 += a[k] * b[k];
                s1 += a[k + 1] * b[k + 1];
                s2 += a[k + 2] * b[k + 2];
                s3 += a[k + 3] * b[k + 3];
            }
            double s = (s0 + s1) + (s2 + s3);
            for (; k < K; ++k) s += a[k] * b[k];
            c[n] = accumulate ? c[n] + s : s;
        }
    }
}

} // namespace skelrob::num
