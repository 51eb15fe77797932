#include "tbound/kernels.hpp"

#include <cstdlib>

#include "tbound/error.hpp"

namespace tbound::simd {

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  throw ConfigError("unknown kernel set '" + std::string(name) + "' (expected scalar|avx2|auto)");
}

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect_isa() {
  if (const char* env = std::getenv("TBOUND_KERNELS")) {
    const std::string_view v(env);
    if (!v.empty() && v != "auto") {
      const Isa want = parse_isa(v);
      if (!isa_supported(want)) throw ConfigError("TBOUND_KERNELS=" + std::string(v) + " not supported on this CPU");
      return want;
    }
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

const KernelTable& kernels_for(Isa isa) {
  return isa == Isa::avx2 ? avx2_kernels() : scalar_kernels();
}

}  // namespace tbound::simd
