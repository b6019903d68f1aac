#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "doctest.h"

#include "eigenspline/error.hpp"
#include "eigenspline/simbench.hpp"
#include "oracles.hpp"

using namespace eigenspline;

namespace {

SimScenario small_scenario() {
  SimScenario s;
  s.n = 150;
  s.replicates = 4;
  s.seed = 3;
  s.cache_points = 60;
  s.sigmas = {0.1, 0.2};
  s.methods = {{Method::all, 0, "ALL"},
               {Method::eigen, 20, "E20"},
               {Method::nystrom, 20, "N20"},
               {Method::rsr, 20, "RSR"}};
  return s;
}

bool same_metrics(const std::vector<MetricRow>& a, const std::vector<MetricRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].label != b[i].label || a[i].bias2 != b[i].bias2 ||
        a[i].variance != b[i].variance || a[i].mse != b[i].mse) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("simbench") {
  TEST_CASE("test function examples") {
    CHECK(std::fabs(eval_test_function(TestCase::case3, 0.5)) < 1e-13);
    CHECK(eval_test_function(TestCase::case3, 0.25) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_THROWS_AS(eval_test_function(TestCase::case1, 1.5), ArgumentError);
    CHECK(parse_test_case("2") == TestCase::case2);
    CHECK(parse_test_case("case3") == TestCase::case3);
    CHECK_THROWS_AS(parse_test_case("case4"), ArgumentError);
  }

  TEST_CASE("beta normalizer") {
    for (double x : {0.1, 0.37, 0.8}) {
      const double raw = x * x * std::pow(1.0 - x, 10.0);
      CHECK(beta_density(3, 11, x) / raw == doctest::Approx(858.0).epsilon(1e-12));
    }
    CHECK(11 * 12 * 13 / 2 == 858);
    for (auto [p, q] : {std::pair{3.0, 11.0}, std::pair{30.0, 17.0}, std::pair{7.0, 30.0}}) {
      const double integral = oracle::trapezoid([&](double x) { return beta_density(p, q, x); }, 10001);
      CHECK(std::fabs(integral - 1.0) < 1e-8);
    }
  }

  TEST_CASE("test functions match their defining formulas") {
    auto beta = [](double p, double q, double x) {
      return std::tgamma(p + q) / (std::tgamma(p) * std::tgamma(q)) * std::pow(x, p - 1) *
             std::pow(1 - x, q - 1);
    };
    for (double x : {0.05, 0.3, 0.5, 0.66, 0.9}) {
      CHECK(eval_test_function(TestCase::case1, x) ==
            doctest::Approx(0.6 * beta(30, 17, x) + 0.4 * beta(3, 11, x)).epsilon(1e-10));
      CHECK(eval_test_function(TestCase::case2, x) ==
            doctest::Approx((beta(20, 5, x) + beta(12, 12, x) + beta(7, 30, x)) / 3).epsilon(1e-10));
      CHECK(eval_test_function(TestCase::case3, x) ==
            doctest::Approx(std::sin(32 * std::numbers::pi * x) - 8 * (x - 0.5) * (x - 0.5)));
    }
  }

  TEST_CASE("data generation") {
    SimScenario s;
    s.n = 50;
    const DataSet clean = generate_data(s, TestCase::case2, 0.0, 0);
    for (int i = 0; i < 50; ++i) {
      CHECK(clean.x[i] == (i + 1) / 50.0);
      CHECK(clean.y[i] == eval_test_function(TestCase::case2, clean.x[i]));
    }
    const DataSet a = generate_data(s, TestCase::case1, 0.1, 7);
    const DataSet b = generate_data(s, TestCase::case1, 0.1, 7);
    const DataSet c = generate_data(s, TestCase::case1, 0.1, 8);
    CHECK(a.y == b.y);
    CHECK(a.y != c.y);

    s.n = 100000;
    const DataSet big = generate_data(s, TestCase::case3, 0.1, 0);
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < s.n; ++i) {
      const double e = big.y[i] - eval_test_function(TestCase::case3, big.x[i]);
      m += e;
      m2 += e * e;
    }
    m /= s.n;
    const double sd = std::sqrt(m2 / s.n - m * m);
    CHECK(std::fabs(sd - 0.1) < 0.001);
  }

  TEST_CASE("pointwise decomposition identity") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> e(0.0, 1.0);
    Eigen::MatrixXd fits(40, 9);
    Eigen::VectorXd truth(40);
    for (Eigen::Index i = 0; i < 40; ++i) {
      truth(i) = e(gen);
      for (Eigen::Index r = 0; r < 9; ++r) fits(i, r) = truth(i) + 0.3 + 0.2 * e(gen);
    }
    const PointwiseMetrics m = pointwise_metrics(fits, truth);
    for (Eigen::Index i = 0; i < 40; ++i) {
      CHECK(std::fabs(m.mse(i) - (m.bias2(i) + m.variance(i))) <= 1e-12 * m.mse(i) + 1e-15);
    }
    CHECK_THROWS_AS(pointwise_metrics(fits, Eigen::VectorXd(3)), ArgumentError);
  }

  TEST_CASE("grid runs are complete and reproducible") {
    const SimScenario s = small_scenario();
    const GridResult a = run_grid(s);
    REQUIRE(a.rows.size() == 8);
    for (const auto& r : a.rows) {
      CHECK(r.failures == 0);
      CHECK(std::isfinite(r.mse));
      CHECK(r.seconds > 0.0);
      CHECK(std::fabs(r.mse - (r.bias2 + r.variance)) <= 1e-10 * r.mse);
    }
    CHECK(a.cache_seconds > 0.0);
    const GridResult b = run_grid(s);
    CHECK(same_metrics(a.rows, b.rows));
    SimScenario threaded = s;
    threaded.threads = 3;
    CHECK(same_metrics(a.rows, run_grid(threaded).rows));
  }

  TEST_CASE("noiseless exact fits interpolate the truth") {
    SimScenario s;
    s.n = 200;
    s.replicates = 2;
    s.sigmas = {0.0};
    s.cases = {TestCase::case1};
    s.methods = {{Method::all, 0, "ALL"}};
    const GridResult r = run_grid(s);
    CHECK(r.rows[0].mse < 1e-8);
    CHECK(r.rows[0].variance == 0.0);
  }

  TEST_CASE("failures are recorded per cell") {
    SimScenario s = small_scenario();
    s.sigmas = {0.1};
    s.methods = {{Method::all, 0, "ALL"}, {Method::rsr, 500, "RSR500"}};
    const GridResult r = run_grid(s);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].failures == 0);
    CHECK(r.rows[1].failures == s.replicates);
    CHECK(std::isnan(r.rows[1].mse));
    CHECK_FALSE(r.rows[1].error.empty());
    const auto manifest = run_manifest(s, r);
    REQUIRE(manifest["failures"].size() == 1);
    CHECK(manifest["failures"][0]["method"] == "RSR500");
  }

  TEST_CASE("metrics csv") {
    MetricRow row;
    row.label = "E30";
    row.test_case = TestCase::case3;
    row.sigma = 0.1;
    row.bias2 = 2e-4;
    row.variance = 1e-4;
    row.mse = 3e-4;
    row.seconds = 0.5;
    const std::string csv = metrics_csv({row});
    CHECK(csv == "method,case,sigma,bias2,var,mse,seconds\nE30,case3,0.1,2,1,3,0.5\n");
  }

  TEST_CASE("scenario json") {
    const auto j = nlohmann::json::parse(R"({
      "kernel": "cubic", "case": 3, "sigma": 0.1, "n": 300, "replicates": 5, "seed": 11,
      "methods": [{"method": "all"}, {"method": "eigen", "rank": 30},
                  {"method": "nystrom", "rank": 20, "label": "NYS"}]})");
    const SimScenario s = scenario_from_json(j);
    CHECK(s.cases == std::vector<TestCase>{TestCase::case3});
    CHECK(s.sigmas == std::vector<double>{0.1});
    CHECK(s.n == 300);
    CHECK(s.methods[1].label == "E30");
    CHECK(s.methods[2].label == "NYS");
    const SimScenario back = scenario_from_json(scenario_to_json(s));
    CHECK(scenario_to_json(back) == scenario_to_json(s));
    CHECK(config_hash(scenario_to_json(s)) == config_hash(scenario_to_json(back)));
    CHECK(config_hash(scenario_to_json(s)).size() == 16);

    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"case": 1})")), FormatError);
    CHECK_THROWS_AS(
        scenario_from_json(nlohmann::json::parse(R"({"methods": [{"method": "eigen"}]})")),
        ArgumentError);
    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(
                        R"({"n": "many", "methods": [{"method": "all"}]})")),
                    FormatError);
  }

  TEST_CASE("manifest") {
    SimScenario s = small_scenario();
    s.replicates = 1;
    s.methods = {{Method::all, 0, "ALL"}};
    const auto m = run_manifest(s, run_grid(s));
    CHECK(m["generator"] == std::string(kGeneratorName));
    CHECK(m["config_hash"] == config_hash(scenario_to_json(s)));
    CHECK(m["versions"].contains("eigenspline"));
    CHECK(m["seed"] == 3);
  }

  TEST_CASE("method streams are distinct") {
    CHECK(method_stream(0, 5) != method_stream(1, 5));
    CHECK(method_stream(0, 5) != method_stream(0, 6));
    CHECK(default_label(Method::eigen, 30) == "E30");
    CHECK(default_label(Method::nystrom, 10) == "N10");
    CHECK(default_label(Method::all, 0) == "ALL");
  }

  TEST_CASE("timing sweep") {
    TimingConfig cfg;
    cfg.method = {Method::eigen, 10, "E10"};
    cfg.cache = std::make_shared<const EigenSystemCache>(precompute_cache(Kernel::cubic(), 50));
    cfg.ns = {2000, 8000};
    cfg.repeats = 3;
    const auto rows = timing_sweep(cfg);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
      CHECK(r.seconds > 0.0);
      CHECK(r.samples.size() == 3);
    }
    CHECK(rows[1].seconds >= rows[0].seconds);
    CHECK(timing_csv("E10", rows).rfind("method,n,seconds\nE10,2000,", 0) == 0);
    cfg.cache = nullptr;
    CHECK_THROWS_AS(timing_sweep(cfg), ArgumentError);
  }
}
