#pragma once

// Dense inner loops of the denoiser. Every routine has a portable scalar
// reference in `kernels::scalar` and, for float, an AVX2/FMA variant in
// `kernels::avx2`. The unqualified entry points dispatch at runtime.
//
// All matrices are row-major and contiguous. When `accumulate` is false the
// output is overwritten, otherwise the product is added to it.

#include <cstddef>
#include <string_view>

namespace dcmr::kernels {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);
bool cpu_supports_avx2();
/// Best backend the CPU supports, unless DCMR_SIMD=scalar is set.
Backend default_backend();
Backend active_backend();
/// Throws InvalidInput when the CPU cannot run `b`.
void set_backend(Backend b);

/// C[M,N] (+)= A[M,K] * B[K,N]
void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C, bool accumulate);
/// C[M,N] (+)= A[M,K] * B[N,K]^T
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C, bool accumulate);
/// C[M,N] (+)= A[K,M]^T * B[K,N]
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C, bool accumulate);
/// y += a * x
void axpy(std::size_t n, float a, const float* x, float* y);
void axpy(std::size_t n, double a, const double* x, double* y);

namespace scalar {
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate);
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate);
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate);
template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y);
}  // namespace scalar

namespace avx2 {
void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
void axpy(std::size_t n, float a, const float* x, float* y);
}  // namespace avx2

}  // namespace dcmr::kernels
