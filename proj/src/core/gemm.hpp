#pragma once

#include <cstdint>

namespace ts {

// Row-major matrix product: C[m,n] = A[m,k] * B[k,n], or += when accumulate.
// Each C row is produced by exactly one thread with a fixed accumulation
// order, so results are bitwise reproducible for any thread count.
template <class T>
void gemm_nn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c,
             bool accumulate);

// C[m,n] = A[m,k] * B[n,k]^T
template <class T>
void gemm_nt(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c,
             bool accumulate);

// C[m,n] = A[k,m]^T * B[k,n]
template <class T>
void gemm_tn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c,
             bool accumulate);

// dst[cols,rows] = src[rows,cols]^T
template <class T>
void transpose(int64_t rows, int64_t cols, const T* src, T* dst);

extern template void gemm_nn<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
extern template void gemm_nn<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
extern template void gemm_nt<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
extern template void gemm_nt<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
extern template void gemm_tn<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
extern template void gemm_tn<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
extern template void transpose<float>(int64_t, int64_t, const float*, float*);
extern template void transpose<double>(int64_t, int64_t, const double*, double*);

}  // namespace ts
