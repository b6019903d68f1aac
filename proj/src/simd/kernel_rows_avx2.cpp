// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include "eigenspline/simd.hpp"

namespace eigenspline::simd::avx2 {

namespace {

inline __m256d k2(__m256d x) {
  const __m256d u = _mm256_sub_pd(x, _mm256_set1_pd(0.5));
  return _mm256_mul_pd(_mm256_set1_pd(0.5),
                       _mm256_fmsub_pd(u, u, _mm256_set1_pd(1.0 / 12.0)));
}

inline __m256d k4(__m256d t) {
  const __m256d w = _mm256_fnmadd_pd(t, t, t);  // t - t*t
  return _mm256_mul_pd(_mm256_fmsub_pd(w, w, _mm256_set1_pd(1.0 / 30.0)),
                       _mm256_set1_pd(1.0 / 24.0));
}

}  // namespace

void kernel_row(KernelKind kind, double x, const double* zs, double* out,
                std::size_t n) noexcept {
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  std::size_t j = 0;
  if (kind == KernelKind::cubic) {
    const __m256d kx = _mm256_set1_pd(detail::k2_poly(x));
    for (; j + 4 <= n; j += 4) {
      const __m256d z = _mm256_loadu_pd(zs + j);
      const __m256d t = _mm256_and_pd(_mm256_sub_pd(vx, z), abs_mask);
      _mm256_storeu_pd(out + j, _mm256_fmsub_pd(kx, k2(z), k4(t)));
    }
  } else {
    const __m256d sign = _mm256_set1_pd(-0.0);
    for (; j + 4 <= n; j += 4) {
      __m256d t = _mm256_sub_pd(vx, _mm256_loadu_pd(zs + j));
      t = _mm256_sub_pd(t, _mm256_floor_pd(t));
      _mm256_storeu_pd(out + j, _mm256_xor_pd(k4(t), sign));
    }
  }
  if (j < n) scalar::kernel_row(kind, x, zs + j, out + j, n - j);
}

}  // namespace eigenspline::simd::avx2
