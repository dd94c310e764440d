#include <atomic>
#include <cstdlib>
#include <string>

#include "dcmr/error.hpp"
#include "dcmr/kernels/gemm.hpp"

namespace dcmr::kernels {

namespace {

using GemmF = void (*)(int, int, int, const float*, const float*, float*, bool);
using AxpyF = void (*)(std::size_t, float, const float*, float*);

struct Table {
  GemmF nn, nt, tn;
  AxpyF axpy;
};

constexpr Table kScalar{&scalar::gemm_nn<float>, &scalar::gemm_nt<float>, &scalar::gemm_tn<float>,
                        &scalar::axpy<float>};
constexpr Table kAvx2{&avx2::gemm_nn, &avx2::gemm_nt, &avx2::gemm_tn, &avx2::axpy};

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{default_backend()};
  return b;
}

const Table& table() { return current().load(std::memory_order_relaxed) == Backend::avx2 ? kAvx2 : kScalar; }

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

Backend default_backend() {
  if (const char* env = std::getenv("DCMR_SIMD"); env && std::string(env) == "scalar") return Backend::scalar;
  return cpu_supports_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend active_backend() { return current().load(); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !cpu_supports_avx2()) throw InvalidInput("CPU does not support AVX2/FMA");
  current().store(b);
}

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, bool acc) {
  table().nn(M, N, K, A, B, C, acc);
}
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, bool acc) {
  table().nt(M, N, K, A, B, C, acc);
}
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, bool acc) {
  table().tn(M, N, K, A, B, C, acc);
}
void axpy(std::size_t n, float a, const float* x, float* y) { table().axpy(n, a, x, y); }

// Double precision is used for gradient checking only; it stays on the reference path.
void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C, bool acc) {
  scalar::gemm_nn(M, N, K, A, B, C, acc);
}
void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C, bool acc) {
  scalar::gemm_nt(M, N, K, A, B, C, acc);
}
void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C, bool acc) {
  scalar::gemm_tn(M, N, K, A, B, C, acc);
}
void axpy(std::size_t n, double a, const double* x, double* y) { scalar::axpy(n, a, x, y); }

}  // namespace dcmr::kernels
