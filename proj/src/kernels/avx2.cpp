// Compiled with -mavx2 -mfma. Only reached after a CPUID check.

#include "cosd/kernels.hpp"

#if defined(COSD_HAVE_AVX2)

#include <immintrin.h>

namespace cosd::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

// C row block [j, j+16) accumulated in registers over the full k loop.
// a_at(p) yields the A scalar multiplying row p of B.
template <class AAt>
inline void row_block16(const AAt& a_at, std::size_t k, const double* b, std::size_t ldb,
                        double* crow) {
  __m256d c0 = _mm256_loadu_pd(crow);
  __m256d c1 = _mm256_loadu_pd(crow + 4);
  __m256d c2 = _mm256_loadu_pd(crow + 8);
  __m256d c3 = _mm256_loadu_pd(crow + 12);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d av = _mm256_set1_pd(a_at(p));
    const double* brow = b + p * ldb;
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
    c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
    c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
  }
  _mm256_storeu_pd(crow, c0);
  _mm256_storeu_pd(crow + 4, c1);
  _mm256_storeu_pd(crow + 8, c2);
  _mm256_storeu_pd(crow + 12, c3);
}

template <class AAt>
inline void row_block4(const AAt& a_at, std::size_t k, const double* b, std::size_t ldb,
                       double* crow) {
  __m256d c0 = _mm256_loadu_pd(crow);
  for (std::size_t p = 0; p < k; ++p) {
    c0 = _mm256_fmadd_pd(_mm256_set1_pd(a_at(p)), _mm256_loadu_pd(b + p * ldb), c0);
  }
  _mm256_storeu_pd(crow, c0);
}

template <class AAt>
inline void row_tail(const AAt& a_at, std::size_t k, const double* b, std::size_t ldb,
                     double* crow, std::size_t width) {
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a_at(p);
    const double* brow = b + p * ldb;
    for (std::size_t j = 0; j < width; ++j) crow[j] += av * brow[j];
  }
}

template <class AAt>
inline void gemm_row(const AAt& a_at, std::size_t n, std::size_t k, const double* b,
                     double* crow) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) row_block16(a_at, k, b + j, n, crow + j);
  for (; j + 4 <= n; j += 4) row_block4(a_at, k, b + j, n, crow + j);
  if (j < n) row_tail(a_at, k, b + j, n, crow + j, n - j);
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    gemm_row([arow](std::size_t p) { return arow[p]; }, n, k, b, c + i * n);
  }
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* acol = a + i;
    gemm_row([acol, m](std::size_t p) { return acol[p * m]; }, n, k, b, c + i * n);
  }
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d av = _mm256_loadu_pd(arow + p);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + p), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; p < k; ++p) {
        r0 += arow[p] * b0[p];
        r1 += arow[p] * b1[p];
        r2 += arow[p] * b2[p];
        r3 += arow[p] * b3[p];
      }
      crow[j] += r0;
      crow[j + 1] += r1;
      crow[j + 2] += r2;
      crow[j + 3] += r3;
    }
    for (; j < n; ++j) crow[j] += dot_avx2(arow, b + j * k, k);
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{SimdLevel::Avx2, dot_avx2,     axpy_avx2,   hadamard_avx2,
                                 gemm_nn_avx2,    gemm_tn_avx2, gemm_nt_avx2};
  return cpu_has_avx2() ? &table : nullptr;
}

}  // namespace cosd::kernels

#else

namespace cosd::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace cosd::kernels

#endif
