#pragma once

// Kernel-row evaluation: out[j] = R1(x, zs[j]).
//
// This is the one data-parallel loop every dense object in the library is
// built from (Gram matrices, the n x N cache projection U2, Nystrom columns,
// predictions). A scalar reference and an AVX2+FMA variant exist; the active
// one is picked at runtime from CPUID and can be pinned with the
// EIGENSPLINE_ISA environment variable ("scalar" or "avx2").

#include <cstddef>
#include <span>
#include <string_view>

#include "eigenspline/kernel.hpp"

namespace eigenspline::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
/// Throws UnsupportedError if the CPU (or the build) lacks `isa`.
void set_active_isa(Isa isa);

void kernel_row(KernelKind kind, double x, std::span<const double> zs,
                std::span<double> out);
void kernel_row(Isa isa, KernelKind kind, double x, std::span<const double> zs,
                std::span<double> out);

namespace scalar {
void kernel_row(KernelKind kind, double x, const double* zs, double* out,
                std::size_t n) noexcept;
}

#if defined(EIGENSPLINE_HAVE_AVX2)
namespace avx2 {
void kernel_row(KernelKind kind, double x, const double* zs, double* out,
                std::size_t n) noexcept;
}
#endif

}  // namespace eigenspline::simd
