#pragma once

// Dense double-precision inner loops used by the tensor layer.
//
// Every kernel has a portable scalar reference and, where the CPU supports it,
// an AVX2+FMA variant. The active table is picked once at first use from CPUID
// and can be pinned with COSD_SIMD=scalar|avx2 (or force_simd() in tests).
// Variants agree to rounding, not bit-for-bit: the vector paths reassociate
// sums. A single process always uses one table, so runs stay reproducible.

#include <cstddef>
#include <string_view>

namespace cosd::kernels {

enum class SimdLevel { Scalar, Avx2 };

struct KernelTable {
  SimdLevel level;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a * b elementwise
  void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);

  // Row-major GEMMs accumulating into C.
  //   gemm_nn: C[m,n] += A[m,k]   * B[k,n]
  //   gemm_tn: C[m,n] += A[k,m]^T * B[k,n]
  //   gemm_nt: C[m,n] += A[m,k]   * B[n,k]^T
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
};

const KernelTable& scalar_table();
// Returns nullptr when the build or the host lacks the instruction set.
const KernelTable* avx2_table();

bool cpu_has_avx2();

// The table every tensor op goes through.
const KernelTable& active();
void force_simd(SimdLevel level);

std::string_view to_string(SimdLevel level);

}  // namespace cosd::kernels
