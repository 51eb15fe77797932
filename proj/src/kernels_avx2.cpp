#include "tbound/kernels.hpp"

#include "tbound/error.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define TBOUND_HAVE_X86 1
#else
#define TBOUND_HAVE_X86 0
#endif

namespace tbound::simd {

#if TBOUND_HAVE_X86

namespace {

#define TB_AVX2 __attribute__((target("avx2")))

TB_AVX2 void stencil_apply(const StencilView& a, const double* x, double* y, std::size_t begin,
                           std::size_t end) {
  std::size_t n = begin;
  for (; n + 4 <= end; n += 4) {
    __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(a.diag + n), _mm256_loadu_pd(x + n));
    for (int o = 0; o < kHalfStencil; ++o) {
      const std::ptrdiff_t off = a.offset[o];
      const double* c = a.coeff[o];
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(c + n), _mm256_loadu_pd(x + n + off)));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(c + n - off),
                                             _mm256_loadu_pd(x + n - off)));
    }
    _mm256_storeu_pd(y + n, acc);
  }
  scalar_kernels().stencil_apply(a, x, y, n, end);
}

TB_AVX2 double dot(const double* a, const double* b, std::size_t begin, std::size_t end) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t n = begin;
  for (; n + 4 <= end; n += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + n), _mm256_loadu_pd(b + n)));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; n < end; ++n) s = s + a[n] * b[n];
  return s;
}

TB_AVX2 void axpy(double alpha, const double* x, double* y, std::size_t begin, std::size_t end) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t n = begin;
  for (; n + 4 <= end; n += 4)
    _mm256_storeu_pd(y + n, _mm256_add_pd(_mm256_loadu_pd(y + n),
                                          _mm256_mul_pd(va, _mm256_loadu_pd(x + n))));
  for (; n < end; ++n) y[n] = y[n] + alpha * x[n];
}

TB_AVX2 void xpay(const double* x, double beta, double* y, std::size_t begin, std::size_t end) {
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t n = begin;
  for (; n + 4 <= end; n += 4)
    _mm256_storeu_pd(y + n, _mm256_add_pd(_mm256_loadu_pd(x + n),
                                          _mm256_mul_pd(vb, _mm256_loadu_pd(y + n))));
  for (; n < end; ++n) y[n] = x[n] + beta * y[n];
}

TB_AVX2 void scale(const double* w, const double* r, double* z, std::size_t begin,
                   std::size_t end) {
  std::size_t n = begin;
  for (; n + 4 <= end; n += 4)
    _mm256_storeu_pd(z + n, _mm256_mul_pd(_mm256_loadu_pd(w + n), _mm256_loadu_pd(r + n)));
  for (; n < end; ++n) z[n] = w[n] * r[n];
}

#undef TB_AVX2

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Isa::avx2, stencil_apply, dot, axpy, xpay, scale};
  if (!isa_supported(Isa::avx2)) throw InvalidInput("AVX2 kernels requested but CPU lacks AVX2");
  return table;
}

#else

const KernelTable& avx2_kernels() {
  throw InvalidInput("AVX2 kernels are not available on this architecture");
}

#endif

}  // namespace tbound::simd
