#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"

#include "eigenspline/bernoulli.hpp"
#include "eigenspline/error.hpp"
#include "eigenspline/kernel.hpp"
#include "eigenspline/linalg.hpp"
#include "oracles.hpp"

using namespace eigenspline;

TEST_SUITE("kernels") {
  TEST_CASE("bernoulli examples") {
    CHECK(bernoulli_k(1, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(bernoulli_k(2, 0.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
    CHECK(bernoulli_k(4, 0.5) == doctest::Approx(7.0 / 5760.0).epsilon(1e-14));
    for (double x : {0.0, 0.3, 1.0}) CHECK(bernoulli_k(0, x) == 1.0);
  }

  TEST_CASE("bernoulli matches the symbolic polynomials") {
    for (int i = 0; i <= 20; ++i) {
      const double x = i / 20.0;
      CHECK(bernoulli_k(1, x) == doctest::Approx(oracle::k1(x)).epsilon(1e-14));
      CHECK(bernoulli_k(2, x) == doctest::Approx(oracle::k2(x)).epsilon(1e-13));
      CHECK(std::fabs(bernoulli_k(4, x) - oracle::k4(x)) < 1e-16);
    }
  }

  TEST_CASE("bernoulli domain errors") {
    CHECK_THROWS_AS(bernoulli_k(5, 0.5), ArgumentError);
    CHECK_THROWS_AS(bernoulli_k(-1, 0.5), ArgumentError);
    CHECK_THROWS_AS(bernoulli_k(2, 1.5), ArgumentError);
    CHECK_THROWS_AS(bernoulli_k(2, std::nan("")), ArgumentError);
  }

  TEST_CASE("derivative recursion") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    const double h = 1e-5;
    for (int r = 1; r <= 4; ++r) {
      for (int i = 0; i < 100; ++i) {
        const double x = u(gen);
        const double fd = (bernoulli_k(r, x + h) - bernoulli_k(r, x - h)) / (2 * h);
        CHECK(std::fabs(fd - bernoulli_k(r - 1, x)) < 1e-6);
      }
    }
  }

  TEST_CASE("zero integral") {
    for (int r = 1; r <= 4; ++r) {
      const double integral = oracle::trapezoid([&](double x) { return bernoulli_k(r, x); }, 10001);
      CHECK(std::fabs(integral) < 1e-8);
    }
  }

  TEST_CASE("rk examples") {
    const Kernel cubic = Kernel::cubic();
    CHECK(rk_eval(cubic, 0.0, 0.0) == doctest::Approx(1.0 / 120.0).epsilon(1e-14));
    CHECK(rk_eval(cubic, 0.5, 0.5) == doctest::Approx(1.0 / 320.0).epsilon(1e-14));
    CHECK(rk_eval(cubic, 0.3, 0.7) == rk_eval(cubic, 0.7, 0.3));
    CHECK_THROWS_AS(rk_eval(cubic, -0.1, 0.2), ArgumentError);
  }

  TEST_CASE("rk symmetry") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const Kernel k : {Kernel::cubic(), Kernel::periodic()}) {
      for (int i = 0; i < 200; ++i) {
        const double x = u(gen), z = u(gen);
        CHECK(k.rk(x, z) == doctest::Approx(k.rk(z, x)).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("periodic closed form equals its cosine series") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Kernel per = Kernel::periodic();
    for (int i = 0; i < 100; ++i) {
      const double x = u(gen), z = u(gen);
      double series = 0.0;
      for (int nu = 2000; nu >= 1; --nu) {
        series += 2.0 * std::pow(2.0 * std::numbers::pi * nu, -4.0) *
                  std::cos(2.0 * std::numbers::pi * nu * (x - z));
      }
      CHECK(std::fabs(per.rk(x, z) - series) <= 1e-9);
    }
  }

  TEST_CASE("gram examples") {
    const std::vector<double> one{0.0};
    const Eigen::MatrixXd g = gram_sigma(Kernel::cubic(), one);
    CHECK(g(0, 0) == doctest::Approx(1.0 / 120.0).epsilon(1e-14));
    CHECK_THROWS_AS(gram_sigma(Kernel::cubic(), std::vector<double>{}), ArgumentError);
    CHECK_THROWS_AS(gram_sigma(Kernel::cubic(), std::vector<double>{0.2, 1.2}), ArgumentError);
  }

  TEST_CASE("gram is exactly symmetric and matches the oracle") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(37);
    for (auto& x : xs) x = u(gen);
    for (bool periodic : {false, true}) {
      const Kernel k = periodic ? Kernel::periodic() : Kernel::cubic();
      const Eigen::MatrixXd g = gram_sigma(k, xs);
      CHECK(g == g.transpose());
      CHECK((g - oracle::gram(periodic, xs)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }

  TEST_CASE("gram is positive semi-definite on random designs") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> size(2, 100);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> xs(static_cast<std::size_t>(size(gen)));
      for (auto& x : xs) x = u(gen);
      for (const Kernel k : {Kernel::cubic(), Kernel::periodic()}) {
        const Eigen::MatrixXd g = gram_sigma(k, xs);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * top);
      }
    }
  }

  TEST_CASE("cubic gram on 50 uniform points is PSD") {
    const auto xs = oracle::uniform_design(50);
    const Eigen::MatrixXd g = gram_sigma(Kernel::cubic(), xs);
    const Eigen::VectorXd ev = linalg::sym_eigenvalues(g);
    CHECK(ev.minCoeff() >= -1e-10 * ev.maxCoeff());
  }

  TEST_CASE("null matrix") {
    const Eigen::MatrixXd t1 = null_rows(Kernel::cubic(), std::vector<double>{0.5});
    CHECK(t1(0, 0) == 1.0);
    CHECK(t1(0, 1) == 0.0);
    const Eigen::MatrixXd t2 = null_matrix(Kernel::cubic(), std::vector<double>{0.0, 1.0});
    CHECK(t2(0, 0) == 1.0);
    CHECK(t2(0, 1) == -0.5);
    CHECK(t2(1, 0) == 1.0);
    CHECK(t2(1, 1) == 0.5);
    const Eigen::MatrixXd tp =
        null_matrix(Kernel::periodic(), std::vector<double>{0.1, 0.4, 0.9});
    CHECK(tp.cols() == 1);
    CHECK(tp.isOnes());
  }

  TEST_CASE("degenerate designs") {
    CHECK_THROWS_AS(null_matrix(Kernel::cubic(), std::vector<double>{0.3, 0.3, 0.3}),
                    DegenerateDesignError);
    CHECK_THROWS_AS(null_matrix(Kernel::cubic(), std::vector<double>{0.3}), ArgumentError);
  }

  TEST_CASE("data set validation and fingerprint") {
    DataSet ok{{0.1, 0.5, 0.9}, {1.0, 2.0, 3.0}};
    CHECK_NOTHROW(ok.validate(Kernel::cubic()));
    DataSet ragged{{0.1, 0.5}, {1.0}};
    CHECK_THROWS_AS(ragged.validate(Kernel::cubic()), ArgumentError);
    DataSet small{{0.1, 0.5}, {1.0, 2.0}};
    CHECK_THROWS_AS(small.validate(Kernel::cubic()), ArgumentError);
    CHECK_NOTHROW(small.validate(Kernel::periodic()));
    DataSet moved = ok;
    moved.y[1] = 2.5;
    CHECK(ok.fingerprint() == DataSet(ok).fingerprint());
    CHECK(ok.fingerprint() != moved.fingerprint());
  }

  TEST_CASE("kernel names") {
    CHECK(parse_kernel_kind("cubic") == KernelKind::cubic);
    CHECK(parse_kernel_kind("periodic") == KernelKind::periodic);
    CHECK_THROWS_AS(parse_kernel_kind("gaussian"), ArgumentError);
    CHECK(to_string(KernelKind::periodic) == "periodic");
  }
}
