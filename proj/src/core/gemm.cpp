#include "core/gemm.hpp"

#include <algorithm>
#include <vector>

#include "core/parallel.hpp"

namespace ts {

namespace {

template <class T>
void rows_nn(int64_t i0, int64_t i1, int64_t n, int64_t k, const T* a,
             const T* b, T* c, bool accumulate) {
  for (int64_t i = i0; i < i1; ++i) {
    T* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    const T* arow = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

template <class T>
void gemm_nn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  if (m <= 0 || n <= 0 || k <= 0) return;
  if (m < 2 || m * n * k < (int64_t(1) << 15)) {
    rows_nn(0, m, n, k, a, b, c, accumulate);
    return;
  }
  parallel_for(m, [&](int64_t i0, int64_t i1) {
    rows_nn(i0, i1, n, k, a, b, c, accumulate);
  });
}

template <class T>
void transpose(int64_t rows, int64_t cols, const T* src, T* dst) {
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

template <class T>
void gemm_nt(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  std::vector<T> bt(static_cast<size_t>(k * n));
  transpose(n, k, b, bt.data());
  gemm_nn(m, n, k, a, bt.data(), c, accumulate);
}

template <class T>
void gemm_tn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  std::vector<T> at(static_cast<size_t>(m * k));
  transpose(k, m, a, at.data());
  gemm_nn(m, n, k, at.data(), b, c, accumulate);
}

template void gemm_nn<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
template void gemm_nn<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
template void gemm_nt<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
template void gemm_nt<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
template void gemm_tn<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
template void gemm_tn<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
template void transpose<float>(int64_t, int64_t, const float*, float*);
template void transpose<double>(int64_t, int64_t, const double*, double*);

}  // namespace ts
