#include <atomic>
#include <cstdlib>
#include <string>

#include "eigenspline/error.hpp"
#include "eigenspline/simd.hpp"

namespace eigenspline::simd {

namespace {

bool cpu_has_avx2() {
#if defined(EIGENSPLINE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("EIGENSPLINE_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa) {
  return isa == Isa::scalar || cpu_has_avx2();
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw UnsupportedError("ISA " + std::string(to_string(isa)) +
                           " not available on this CPU or build");
  }
  active().store(isa, std::memory_order_relaxed);
}

void kernel_row(Isa isa, KernelKind kind, double x, std::span<const double> zs,
                std::span<double> out) {
  if (out.size() < zs.size()) throw ArgumentError("kernel_row: output too short");
#if defined(EIGENSPLINE_HAVE_AVX2)
  if (isa == Isa::avx2) {
    if (!isa_supported(Isa::avx2)) throw UnsupportedError("AVX2 not available");
    avx2::kernel_row(kind, x, zs.data(), out.data(), zs.size());
    return;
  }
#else
  if (isa == Isa::avx2) throw UnsupportedError("built without AVX2 support");
#endif
  scalar::kernel_row(kind, x, zs.data(), out.data(), zs.size());
}

void kernel_row(KernelKind kind, double x, std::span<const double> zs,
                std::span<double> out) {
  kernel_row(active_isa(), kind, x, zs, out);
}

}  // namespace eigenspline::simd
