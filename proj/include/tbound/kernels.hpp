#pragma once

// Inner loops of the PCG solver, scalar reference + AVX2.
//
// All kernels work on a flat index range [begin, end) of padded node arrays.
// The stencil and the elementwise kernels use separate multiply and add (no
// FMA), so AVX2 and scalar results are bitwise identical.  dot() uses four
// lanes in the AVX2 variant and therefore differs from the scalar sum by
// rounding only.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace tbound::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);
Isa parse_isa(std::string_view name);  // "scalar" | "avx2"; throws ConfigError

bool isa_supported(Isa isa);
// Best supported ISA, unless TBOUND_KERNELS=scalar|avx2|auto overrides it.
Isa detect_isa();

// 27-point symmetric stencil: diagonal plus 13 forward couplings.  The
// coupling between n and n + offset[o] is stored at coeff[o][n].
inline constexpr int kHalfStencil = 13;

struct StencilView {
  const double* diag = nullptr;
  std::array<const double*, kHalfStencil> coeff{};
  std::array<std::ptrdiff_t, kHalfStencil> offset{};
};

struct KernelTable {
  Isa isa;
  // y[n] = A x [n]
  void (*stencil_apply)(const StencilView& a, const double* x, double* y, std::size_t begin,
                        std::size_t end);
  double (*dot)(const double* a, const double* b, std::size_t begin, std::size_t end);
  // y += alpha x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t begin, std::size_t end);
  // y = x + beta y
  void (*xpay)(const double* x, double beta, double* y, std::size_t begin, std::size_t end);
  // z = w * r
  void (*scale)(const double* w, const double* r, double* z, std::size_t begin, std::size_t end);
};

const KernelTable& scalar_kernels();
// Throws InvalidInput when the CPU lacks AVX2 (or on non-x86 builds).
const KernelTable& avx2_kernels();
const KernelTable& kernels_for(Isa isa);

}  // namespace tbound::simd
