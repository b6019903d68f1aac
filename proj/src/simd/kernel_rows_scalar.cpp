#include "eigenspline/simd.hpp"

namespace eigenspline::simd::scalar {

void kernel_row(KernelKind kind, double x, const double* zs, double* out,
                std::size_t n) noexcept {
  if (kind == KernelKind::cubic) {
    const double kx = detail::k2_poly(x);
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = kx * detail::k2_poly(zs[j]) - detail::k4_poly(std::fabs(x - zs[j]));
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) out[j] = detail::rk_periodic(x, zs[j]);
  }
}

}  // namespace eigenspline::simd::scalar
