#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"

#include "eigenspline/bounds.hpp"
#include "eigenspline/eigensys.hpp"
#include "eigenspline/error.hpp"
#include "eigenspline/simbench.hpp"
#include "eigenspline/solvers.hpp"
#include "oracles.hpp"

using namespace eigenspline;

namespace {

DataSet periodic_data(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> e(0.0, 0.1);
  DataSet d;
  d.x = oracle::uniform_design(n);
  for (double x : d.x) {
    d.y.push_back(std::sin(2 * std::numbers::pi * x) + 0.5 * std::cos(6 * std::numbers::pi * x) +
                  e(gen));
  }
  return d;
}

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("zeta1 identity and Q2 norm") {
    const DataSet d = periodic_data(120, 1);
    for (const Kernel k : {Kernel::cubic(), Kernel::periodic()}) {
      const BoundContext ctx = make_bound_context(d, k);
      const double m = 120 - k.null_dim();
      CHECK(std::fabs(ctx.qr.q2.squaredNorm() - m) < 1e-10);
      const FitResult exact = fit_exact(d, k, 1e-5);
      const BoundReport r = lemma1_bounds(ctx, exact, exact, ctx.sigma);
      CHECK(std::fabs(r.zeta1 - r.zeta1_direct) <= 1e-10 * r.zeta1);
      CHECK(r.zeta1 == doctest::Approx(m * m * m * ctx.q2y_norm2).epsilon(1e-14));
    }
  }

  TEST_CASE("lambda max of A against a direct eigendecomposition") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n : {10, 60, 200}) {
      std::vector<double> xs(static_cast<std::size_t>(n));
      for (auto& x : xs) x = u(gen);
      const Eigen::MatrixXd t = oracle::null_t(false, xs);
      const Eigen::MatrixXd ttt_inv = (t.transpose() * t).inverse();
      const Eigen::MatrixXd a = t * ttt_inv * ttt_inv * t.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
      const double direct = es.eigenvalues().maxCoeff();
      CHECK(std::fabs(lambda_max_a(t) - direct) <= 1e-8 * direct);
    }
  }

  TEST_CASE("periodic tail sum against the direct series") {
    for (int K : {1, 2, 5, 10, 20, 21, 40}) {
      // sum over 0-based modes k >= K of delta_k^2, run until terms drop below 1e-12 relative
      double series = 0.0;
      for (int k = 200000; k >= K; --k) {
        const double dlt = oracle::periodic_delta(k);
        series += dlt * dlt;
      }
      CHECK(std::fabs(periodic_tail_sum(K) - series) <= 1e-12 * series);
      CHECK(tail_sum(analytic_eigensystem(Kernel::periodic(), K)).value ==
            doctest::Approx(series).epsilon(1e-12));
    }
  }

  TEST_CASE("spectral sums are monotone in K") {
    double prev_c = 0.0, prev_d = std::numeric_limits<double>::infinity();
    for (int K = 1; K <= 40; ++K) {
      const auto b = analytic_eigensystem(Kernel::periodic(), K);
      const double c = b.eigenvalues().squaredNorm();
      const double dk = periodic_tail_sum(K);
      CHECK(c >= prev_c);
      CHECK(dk <= prev_d);
      prev_c = c;
      prev_d = dk;
    }
  }

  TEST_CASE("cubic cache tail is flagged as an estimate") {
    auto cache = std::make_shared<const EigenSystemCache>(precompute_cache(Kernel::cubic(), 100));
    const TailSum t = tail_sum(TruncatedEigenBasis::from_cache(cache, 30));
    CHECK(t.estimated);
    CHECK(t.value > 0.0);
    double computed = 0.0;
    for (int k = 30; k < cache->positive_modes(); ++k) computed += std::pow(cache->eigenvalue(k), 2);
    CHECK(t.value >= computed);
  }

  TEST_CASE("inverse square sums") {
    Eigen::VectorXd v(3);
    v << 2.0, 1.0, 0.0;
    const SpectralSum s = inverse_square_sum(v, 0.5);
    CHECK(s.regularized == doctest::Approx(1 / 6.25 + 1 / 2.25 + 4.0));
    CHECK(std::isinf(s.literal));
    v(2) = 0.5;
    CHECK(inverse_square_sum(v, 0.5).literal == doctest::Approx(0.25 + 1.0 + 4.0));
  }

  TEST_CASE("observed errors") {
    const DataSet d = periodic_data(80, 3);
    const FitResult f = fit_exact(d, Kernel::cubic(), 1e-5);
    const ObservedErrors self = observed_errors(f, f, d);
    CHECK(self.f == 0.0);
    CHECK(self.f0 == 0.0);
    CHECK(self.f1 == 0.0);
    FitResult g = f;
    g.d(0) += 0.3;
    const ObservedErrors off = observed_errors(f, g, d);
    CHECK(std::fabs(off.f - 0.09) < 1e-10);
    CHECK(std::fabs(off.f0 - 0.09) < 1e-10);
    CHECK(off.f1 == 0.0);
    CHECK(std::fabs(off.d - 0.09) < 1e-15);
    DataSet moved = d;
    moved.y[3] += 1.0;
    const FitResult h = fit_exact(moved, Kernel::cubic(), 1e-5);
    CHECK_THROWS_AS(observed_errors(f, h, d), ArgumentError);
  }

  TEST_CASE("trapezoid rule") {
    std::vector<double> x;
    Eigen::VectorXd w;
    trapezoid_rule(kDefaultQuadratureNodes, x, w);
    CHECK(x.size() == 10001);
    CHECK(std::fabs(w.sum() - 1.0) < 1e-12);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w(i) * x[i] * x[i];
    CHECK(acc == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
  }

  TEST_CASE("lemma 1 with the exact Gram matrix collapses to zero") {
    const DataSet d = periodic_data(100, 4);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const FitResult exact = fit_exact(d, Kernel::periodic(), 1e-5);
    const BoundReport r = lemma1_bounds(ctx, exact, exact, ctx.sigma);
    CHECK(r.bound_c == 0.0);
    CHECK(r.bound_d == 0.0);
    CHECK(std::sqrt(r.observed.c) <= 1e-8);
    CHECK(r.valid);
  }

  TEST_CASE("lemma 1 coefficient bounds hold on random replicates") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      const DataSet d = periodic_data(200, 100 + seed);
      const BoundContext ctx = make_bound_context(d, Kernel::periodic());
      const auto basis = analytic_eigensystem(Kernel::periodic(), 20);
      const FitResult exact = fit_exact(d, Kernel::periodic(), 1e-5);
      const FitResult trunc = fit_eigen(d, Kernel::periodic(), basis, 1e-5);
      const Eigen::MatrixXd z = basis.features(d.x);
      const BoundReport r = lemma1_bounds(ctx, exact, trunc, z * z.transpose());
      CHECK(r.observed.c <= r.bound_c);
      CHECK(r.observed.d <= r.bound_d);
      CHECK(std::isinf(r.b_tilde.literal));
    }
  }

  TEST_CASE("theorem 1 bounds hold and follow their formulas") {
    const DataSet d = periodic_data(200, 5);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const FitResult exact = fit_exact(d, Kernel::periodic(), 1e-6);
    for (int K : {10, 20, 40}) {
      const auto basis = analytic_eigensystem(Kernel::periodic(), K);
      const FitResult trunc = fit_eigen(d, Kernel::periodic(), basis, 1e-6);
      const BoundReport r = theorem1_bounds(ctx, exact, trunc, basis);
      CHECK(r.valid);
      CHECK(r.observed.f <= r.bound_f);
      CHECK(r.observed.f0 <= r.bound_f0);
      CHECK(r.observed.f1 <= r.bound_f1);
      const double tail = 200 * 2.0 * r.c_norm2 * r.d_k;
      CHECK(r.bound_f == doctest::Approx(2 * (r.zeta2 + r.zeta3) * r.sigma_diff_fro2 + 2 * tail));
      CHECK(r.bound_f <= 2 * r.bound_f0 + 2 * r.bound_f1 + 1e-300);
      CHECK(r.kappa == doctest::Approx(std::numbers::sqrt2));
      CHECK_FALSE(r.kappa_empirical);
      CHECK_FALSE(r.d_k_estimated);
      const auto j = bound_report_to_json(r);
      for (const char* key : {"zeta1", "zeta2", "zeta3", "lambda_max_A", "B", "B_tilde", "C_K",
                              "D_K", "kappa", "bound_f0", "bound_f1", "bound_f", "observed_f"}) {
        CHECK(j.contains(key));
      }
    }
  }

  TEST_CASE("frobenius discrepancy is non-increasing in K") {
    const DataSet d = periodic_data(150, 6);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const FitResult exact = fit_exact(d, Kernel::periodic(), 1e-5);
    double prev = std::numeric_limits<double>::infinity();
    for (int K : {2, 5, 10, 20, 40, 80}) {
      const auto basis = analytic_eigensystem(Kernel::periodic(), K);
      const BoundReport r =
          theorem1_bounds(ctx, exact, fit_eigen(d, Kernel::periodic(), basis, 1e-5), basis, 201);
      CHECK(r.sigma_diff_fro2 <= prev);
      prev = r.sigma_diff_fro2;
    }
  }

  TEST_CASE("theorem 2 with a cache built from the analytic eigensystem") {
    // N odd: the sampled trigonometric system plus the constant is orthogonal on the grid.
    const int N = 101;
    const auto full = analytic_eigensystem(Kernel::periodic(), N - 1);
    auto cache = std::make_shared<EigenSystemCache>();
    cache->kernel = KernelKind::periodic;
    cache->s = oracle::uniform_design(N);
    cache->gamma = Eigen::VectorXd::Zero(N);
    cache->gamma.head(N - 1) = N * full.eigenvalues();
    cache->v.resize(N, N);
    cache->v.leftCols(N - 1) = full.eigenfunctions(cache->s) / std::sqrt(double(N));
    cache->v.col(N - 1).setConstant(1.0 / std::sqrt(double(N)));
    REQUIRE((cache->v.transpose() * cache->v - Eigen::MatrixXd::Identity(N, N)).norm() < 1e-10);

    const DataSet d = periodic_data(200, 7);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const auto analytic = analytic_eigensystem(Kernel::periodic(), 10);
    const auto approx = TruncatedEigenBasis::from_cache(cache, 10);
    const FitResult trunc = fit_eigen(d, Kernel::periodic(), analytic, 1e-6);
    const FitResult cached = fit_eigen(d, Kernel::periodic(), approx, 1e-6);
    const BoundReport r = theorem2_bounds(ctx, trunc, cached, analytic, approx);
    CHECK(r.eigenvalue_term < 1e-30);
    // The Nystrom extension of frequency nu picks up nu' = jN -+ nu with
    // weight (nu / nu')^4, so ||Phi-check - Phi||^2 = sum (nu / nu')^8.
    double aliasing = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double nu = k / 2 + 1;
      for (int j = 1; j < 1000; ++j) {
        aliasing += std::pow(nu / (j * N - nu), 8) + std::pow(nu / (j * N + nu), 8);
      }
    }
    CHECK(r.eigenfunction_term == doctest::Approx(aliasing).epsilon(0.01));
    CHECK(r.design_term < 1e-18);
    CHECK(r.observed.f < 1e-12);
    CHECK(r.valid);
  }

  TEST_CASE("theorem 2 terms shrink as the grid is refined") {
    const DataSet d = periodic_data(200, 8);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const auto analytic = analytic_eigensystem(Kernel::periodic(), 10);
    const FitResult trunc = fit_eigen(d, Kernel::periodic(), analytic, 1e-6);
    double prev_val = std::numeric_limits<double>::infinity();
    double prev_fn = prev_val, prev_proj = prev_val;
    for (int N : {100, 200, 400}) {
      auto cache = std::make_shared<const EigenSystemCache>(precompute_cache(Kernel::periodic(), N));
      const auto approx = TruncatedEigenBasis::from_cache(cache, 10);
      const FitResult cached = fit_eigen(d, Kernel::periodic(), approx, 1e-6);
      const BoundReport r = theorem2_bounds(ctx, trunc, cached, analytic, approx);
      CHECK(r.valid);
      CHECK(r.eigenvalue_term < prev_val);
      CHECK(r.eigenfunction_term < prev_fn);
      double proj = 0.0;
      for (const auto& c : r.clusters) proj = std::max(proj, c.projection_distance);
      CHECK(proj < prev_proj);
      CHECK(r.clusters.size() == 5);
      CHECK(r.clusters[0].degenerate);
      prev_val = r.eigenvalue_term;
      prev_fn = r.eigenfunction_term;
      prev_proj = proj;
    }
  }

  TEST_CASE("theorem 2 chain") {
    const DataSet d = periodic_data(200, 9);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const auto analytic = analytic_eigensystem(Kernel::periodic(), 10);
    auto cache = std::make_shared<const EigenSystemCache>(precompute_cache(Kernel::periodic(), 200));
    const auto approx = TruncatedEigenBasis::from_cache(cache, 10);
    const FitResult exact = fit_exact(d, Kernel::periodic(), 1e-6);
    const FitResult trunc = fit_eigen(d, Kernel::periodic(), analytic, 1e-6);
    const FitResult cached = fit_eigen(d, Kernel::periodic(), approx, 1e-6);
    const BoundReport r = theorem2_bounds(ctx, trunc, cached, analytic, approx, &exact);
    CHECK(r.chain_observed <= r.chain_bound);
    const BoundReport no_chain = theorem2_bounds(ctx, trunc, cached, analytic, approx);
    CHECK(std::isnan(no_chain.chain_bound));
  }

  TEST_CASE("argument errors") {
    const DataSet d = periodic_data(60, 10);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const FitResult a = fit_exact(d, Kernel::periodic(), 1e-5);
    const FitResult b = fit_exact(d, Kernel::periodic(), 1e-4);
    CHECK_THROWS_AS(lemma1_bounds(ctx, a, b, ctx.sigma), ArgumentError);
    const auto analytic = analytic_eigensystem(Kernel::periodic(), 4);
    const FitResult t = fit_eigen(d, Kernel::periodic(), analytic, 1e-5);
    CHECK_THROWS_AS(theorem2_bounds(ctx, t, t, analytic, analytic), ArgumentError);
    const BoundContext cubic_ctx = make_bound_context(d, Kernel::cubic());
    auto cache = std::make_shared<const EigenSystemCache>(precompute_cache(Kernel::cubic(), 40));
    const auto cb = TruncatedEigenBasis::from_cache(cache, 4);
    const FitResult ct = fit_eigen(d, Kernel::cubic(), cb, 1e-5);
    CHECK_THROWS_AS(theorem2_bounds(cubic_ctx, ct, ct, cb, cb), UnsupportedError);
  }

  TEST_CASE("cubic truncation distance ordering on case 3") {
    DataSet d;
    d.x = oracle::uniform_design(500);
    std::mt19937_64 gen(11);
    std::normal_distribution<double> e(0.0, 0.1);
    for (double x : d.x) d.y.push_back(eval_test_function(TestCase::case3, x) + e(gen));
    auto cache = std::make_shared<const EigenSystemCache>(precompute_cache(Kernel::cubic(), 100));
    const FitResult exact = fit_exact(d, Kernel::cubic(), 1e-7);
    const FitResult e10 =
        fit_eigen(d, Kernel::cubic(), TruncatedEigenBasis::from_cache(cache, 10), 1e-7);
    const FitResult e40 =
        fit_eigen(d, Kernel::cubic(), TruncatedEigenBasis::from_cache(cache, 40), 1e-7);
    const double far = observed_errors(e10, exact, d).f;
    const double near = observed_errors(e40, exact, d).f;
    CHECK(far > 100 * near);
  }

  TEST_CASE("validity csv") {
    const DataSet d = periodic_data(60, 12);
    const BoundContext ctx = make_bound_context(d, Kernel::periodic());
    const FitResult exact = fit_exact(d, Kernel::periodic(), 1e-5);
    const auto basis = analytic_eigensystem(Kernel::periodic(), 6);
    const BoundReport r = theorem1_bounds(
        ctx, exact, fit_eigen(d, Kernel::periodic(), basis, 1e-5), basis, 1001);
    const std::string row = validity_csv_row("t1", 3, r);
    const std::string header = validity_csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    CHECK(row.rfind("t1,theorem1,3,60,6,", 0) == 0);
  }
}
