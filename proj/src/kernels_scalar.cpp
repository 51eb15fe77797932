#include "tbound/kernels.hpp"

namespace tbound::simd {

namespace {

void stencil_apply(const StencilView& a, const double* x, double* y, std::size_t begin,
                   std::size_t end) {
  for (std::size_t n = begin; n < end; ++n) {
    double acc = a.diag[n] * x[n];
    for (int o = 0; o < kHalfStencil; ++o) {
      const std::ptrdiff_t off = a.offset[o];
      const double* c = a.coeff[o];
      acc = acc + c[n] * x[n + off];
      acc = acc + c[n - off] * x[n - off];
    }
    y[n] = acc;
  }
}

double dot(const double* a, const double* b, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t n = begin; n < end; ++n) s = s + a[n] * b[n];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t begin, std::size_t end) {
  for (std::size_t n = begin; n < end; ++n) y[n] = y[n] + alpha * x[n];
}

void xpay(const double* x, double beta, double* y, std::size_t begin, std::size_t end) {
  for (std::size_t n = begin; n < end; ++n) y[n] = x[n] + beta * y[n];
}

void scale(const double* w, const double* r, double* z, std::size_t begin, std::size_t end) {
  for (std::size_t n = begin; n < end; ++n) z[n] = w[n] * r[n];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, stencil_apply, dot, axpy, xpay, scale};
  return table;
}

}  // namespace tbound::simd
