#include "dcmr/kernels/gemm.hpp"

#include <algorithm>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define DCMR_AVX2 __attribute__((target("avx2,fma")))
#define DCMR_HAVE_X86 1
#endif

namespace dcmr::kernels::avx2 {

#ifdef DCMR_HAVE_X86

namespace {

// A(i, k) = A[i * row_stride + k * col_stride]; covers both A and A^T.
struct StridedA {
  const float* p;
  std::size_t row_stride;
  std::size_t col_stride;
  float operator()(int i, int k) const { return p[i * row_stride + k * col_stride]; }
};

template <int R, int V>
DCMR_AVX2 inline void nn_block(int i, int j, int N, int K, StridedA A, const float* B, float* C) {
  __m256 acc[R][V];
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < V; ++v) acc[r][v] = _mm256_loadu_ps(C + static_cast<std::size_t>(i + r) * N + j + 8 * v);
  for (int k = 0; k < K; ++k) {
    const float* b = B + static_cast<std::size_t>(k) * N + j;
    __m256 bv[V];
    for (int v = 0; v < V; ++v) bv[v] = _mm256_loadu_ps(b + 8 * v);
    for (int r = 0; r < R; ++r) {
      const __m256 a = _mm256_set1_ps(A(i + r, k));
      for (int v = 0; v < V; ++v) acc[r][v] = _mm256_fmadd_ps(a, bv[v], acc[r][v]);
    }
  }
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < V; ++v) _mm256_storeu_ps(C + static_cast<std::size_t>(i + r) * N + j + 8 * v, acc[r][v]);
}

template <int V>
DCMR_AVX2 void nn_column_panel(int M, int j, int N, int K, StridedA A, const float* B, float* C) {
  int i = 0;
  for (; i + 4 <= M; i += 4) nn_block<4, V>(i, j, N, K, A, B, C);
  for (; i < M; ++i) nn_block<1, V>(i, j, N, K, A, B, C);
}

DCMR_AVX2 void nn_strided(int M, int N, int K, StridedA A, const float* B, float* C, bool accumulate) {
  if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, 0.0f);
  int j = 0;
  for (; j + 16 <= N; j += 16) nn_column_panel<2>(M, j, N, K, A, B, C);
  for (; j + 8 <= N; j += 8) nn_column_panel<1>(M, j, N, K, A, B, C);
  if (j == N) return;
  for (int i = 0; i < M; ++i) {
    float* c = C + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const float a = A(i, k);
      const float* b = B + static_cast<std::size_t>(k) * N;
      for (int jj = j; jj < N; ++jj) c[jj] += a * b[jj];
    }
  }
}

DCMR_AVX2 inline float hsum(__m256 v) {
  __m128 lo = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

template <int R, int Q>
DCMR_AVX2 inline void nt_block(int i, int j, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
  __m256 acc[R][Q];
  for (int r = 0; r < R; ++r)
    for (int q = 0; q < Q; ++q) acc[r][q] = _mm256_setzero_ps();
  int k = 0;
  for (; k + 8 <= K; k += 8) {
    __m256 bv[Q];
    for (int q = 0; q < Q; ++q) bv[q] = _mm256_loadu_ps(B + static_cast<std::size_t>(j + q) * K + k);
    for (int r = 0; r < R; ++r) {
      const __m256 a = _mm256_loadu_ps(A + static_cast<std::size_t>(i + r) * K + k);
      for (int q = 0; q < Q; ++q) acc[r][q] = _mm256_fmadd_ps(a, bv[q], acc[r][q]);
    }
  }
  for (int r = 0; r < R; ++r) {
    const float* a = A + static_cast<std::size_t>(i + r) * K;
    for (int q = 0; q < Q; ++q) {
      const float* b = B + static_cast<std::size_t>(j + q) * K;
      float s = hsum(acc[r][q]);
      for (int kk = k; kk < K; ++kk) s += a[kk] * b[kk];
      float& c = C[static_cast<std::size_t>(i + r) * N + j + q];
      c = accumulate ? c + s : s;
    }
  }
}

template <int R>
DCMR_AVX2 void nt_row_panel(int i, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
  int j = 0;
  for (; j + 4 <= N; j += 4) nt_block<R, 4>(i, j, N, K, A, B, C, accumulate);
  for (; j < N; ++j) nt_block<R, 1>(i, j, N, K, A, B, C, accumulate);
}

}  // namespace

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
  nn_strided(M, N, K, StridedA{A, static_cast<std::size_t>(K), 1}, B, C, accumulate);
}

void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
  nn_strided(M, N, K, StridedA{A, 1, static_cast<std::size_t>(M)}, B, C, accumulate);
}

void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
  int i = 0;
  for (; i + 2 <= M; i += 2) nt_row_panel<2>(i, N, K, A, B, C, accumulate);
  for (; i < M; ++i) nt_row_panel<1>(i, N, K, A, B, C, accumulate);
}

DCMR_AVX2 void axpy(std::size_t n, float a, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

#else  // no x86: the dispatcher never selects these

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, bool acc) {
  scalar::gemm_nn(M, N, K, A, B, C, acc);
}
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, bool acc) {
  scalar::gemm_tn(M, N, K, A, B, C, acc);
}
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, bool acc) {
  scalar::gemm_nt(M, N, K, A, B, C, acc);
}
void axpy(std::size_t n, float a, const float* x, float* y) { scalar::axpy(n, a, x, y); }

#endif

}  // namespace dcmr::kernels::avx2
