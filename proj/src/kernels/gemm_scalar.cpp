#include "dcmr/kernels/gemm.hpp"

#include <algorithm>

namespace dcmr::kernels::scalar {

template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
  for (int i = 0; i < M; ++i) {
    T* c = C + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const T a = A[static_cast<std::size_t>(i) * K + k];
      const T* b = B + static_cast<std::size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    const T* a = A + static_cast<std::size_t>(i) * K;
    for (int j = 0; j < N; ++j) {
      const T* b = B + static_cast<std::size_t>(j) * K;
      T s = 0;
      for (int k = 0; k < K; ++k) s += a[k] * b[k];
      T& c = C[static_cast<std::size_t>(i) * N + j];
      c = accumulate ? c + s : s;
    }
  }
}

template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
  for (int k = 0; k < K; ++k) {
    const T* b = B + static_cast<std::size_t>(k) * N;
    for (int i = 0; i < M; ++i) {
      const T a = A[static_cast<std::size_t>(k) * M + i];
      T* c = C + static_cast<std::size_t>(i) * N;
      for (int j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template void gemm_nn<float>(int, int, int, const float*, const float*, float*, bool);
template void gemm_nn<double>(int, int, int, const double*, const double*, double*, bool);
template void gemm_nt<float>(int, int, int, const float*, const float*, float*, bool);
template void gemm_nt<double>(int, int, int, const double*, const double*, double*, bool);
template void gemm_tn<float>(int, int, int, const float*, const float*, float*, bool);
template void gemm_tn<double>(int, int, int, const double*, const double*, double*, bool);
template void axpy<float>(std::size_t, float, const float*, float*);
template void axpy<double>(std::size_t, double, const double*, double*);

}  // namespace dcmr::kernels::scalar
