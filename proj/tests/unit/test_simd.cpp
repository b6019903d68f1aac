#include <random>
#include <vector>

#include "doctest.h"

#include "eigenspline/error.hpp"
#include "eigenspline/kernel.hpp"
#include "eigenspline/simd.hpp"

using namespace eigenspline;

TEST_SUITE("simd") {
  TEST_CASE("scalar rows match the kernel formula bit for bit") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> zs(257), out(257);
    for (auto& z : zs) z = u(gen);
    for (const Kernel k : {Kernel::cubic(), Kernel::periodic()}) {
      const double x = u(gen);
      simd::kernel_row(simd::Isa::scalar, k.kind(), x, zs, out);
      for (std::size_t j = 0; j < zs.size(); ++j) CHECK(out[j] == k.rk(x, zs[j]));
    }
  }

  TEST_CASE("avx2 rows agree with scalar rows") {
    if (!simd::isa_supported(simd::Isa::avx2)) {
      CHECK_THROWS_AS(simd::set_active_isa(simd::Isa::avx2), UnsupportedError);
      return;
    }
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Odd lengths exercise the remainder loop.
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
      std::vector<double> zs(n), a(n), b(n);
      for (auto& z : zs) z = u(gen);
      zs[0] = 0.0;
      if (n > 1) zs[n - 1] = 1.0;
      for (KernelKind kind : {KernelKind::cubic, KernelKind::periodic}) {
        for (double x : {0.0, 1.0, u(gen), u(gen)}) {
          simd::kernel_row(simd::Isa::scalar, kind, x, zs, a);
          simd::kernel_row(simd::Isa::avx2, kind, x, zs, b);
          for (std::size_t j = 0; j < n; ++j) CHECK(std::fabs(a[j] - b[j]) <= 1e-17);
        }
      }
    }
  }

  TEST_CASE("pinning the active isa") {
    const simd::Isa before = simd::active_isa();
    simd::set_active_isa(simd::Isa::scalar);
    CHECK(simd::active_isa() == simd::Isa::scalar);
    CHECK(simd::to_string(simd::Isa::scalar) == "scalar");
    simd::set_active_isa(before);
  }

  TEST_CASE("gram matrices agree across isas") {
    if (!simd::isa_supported(simd::Isa::avx2)) return;
    std::vector<double> xs(120);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = (i * 0.618033988749895) - std::floor(i * 0.618033988749895);
    const simd::Isa before = simd::active_isa();
    simd::set_active_isa(simd::Isa::scalar);
    const Eigen::MatrixXd a = gram_sigma(Kernel::cubic(), xs);
    simd::set_active_isa(simd::Isa::avx2);
    const Eigen::MatrixXd b = gram_sigma(Kernel::cubic(), xs);
    simd::set_active_isa(before);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-17);
  }
}
