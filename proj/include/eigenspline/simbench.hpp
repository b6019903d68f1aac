#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "eigenspline/eigensys.hpp"
#include "eigenspline/gml.hpp"
#include "eigenspline/solvers.hpp"

namespace eigenspline {

enum class TestCase { case1 = 1, case2 = 2, case3 = 3 };

std::string_view to_string(TestCase id);
/// Accepts "case1".."case3" or "1".."3".
TestCase parse_test_case(std::string_view name);

/// Beta(p, q) density with the normalizer taken through log-gamma.
double beta_density(double p, double q, double x);

/// case1 = 0.6 b(30,17) + 0.4 b(3,11); case2 = (b(20,5) + b(12,12) + b(7,30)) / 3;
/// case3 = sin(32 pi x) - 8 (x - 0.5)^2.
double eval_test_function(TestCase id, double x);

struct MethodSpec {
  Method method = Method::all;
  int rank = 0;  // K (eigen, nystrom) or q (rsr); unused for all
  std::string label;
};
/// "ALL", "E30", "N20", "RSR" (label), given method and rank.
std::string default_label(Method method, int rank);

struct SimScenario {
  KernelKind kernel = KernelKind::cubic;
  std::vector<TestCase> cases{TestCase::case1};
  std::vector<double> sigmas{0.1};
  int n = 2000;
  int replicates = 20;
  std::uint64_t seed = 1;
  int cache_points = 100;
  std::vector<MethodSpec> methods;
  LambdaGrid grid;
  int threads = 1;
};

/// Scenario JSON: {"kernel", "case" | "cases", "sigma" | "sigmas", "n",
/// "replicates", "seed", "cache_points", "threads", "lambda_grid":
/// {"log10_min", "log10_max", "points"}, "methods": [{"method", "rank", "label"}]}.
SimScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const SimScenario& s);

/// Name of the noise generator; recorded in every manifest.
inline constexpr std::string_view kGeneratorName = "philox4x32-10/box-muller";

/// x_i = i/n, y_i = f(x_i) + sigma e_i with e_i from Philox substream
/// `replicate` under key `seed`.
DataSet generate_data(const SimScenario& scenario, TestCase id, double sigma, int replicate);

/// Substream used by method `method_index` on replicate `replicate`.
std::uint64_t method_stream(int method_index, int replicate);

struct MetricRow {
  std::string label;
  TestCase test_case = TestCase::case1;
  double sigma = 0.0;
  // Raw units, averaged over design points and replicates.
  double bias2 = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double seconds = 0.0;  // mean wall time per fit
  int failures = 0;
  std::string error;  // first failure message
};

/// Per design point decomposition of replicate fits against the truth.
struct PointwiseMetrics {
  Eigen::VectorXd bias2;
  Eigen::VectorXd variance;
  Eigen::VectorXd mse;
};
/// fits: one column per replicate. Summation order is fixed.
PointwiseMetrics pointwise_metrics(const Eigen::MatrixXd& fits, const Eigen::VectorXd& truth);

struct GridResult {
  std::vector<MetricRow> rows;
  double cache_seconds = 0.0;  // precompute time, excluded from row timings
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every (case, sigma, method) cell. A cache for EIGEN cells is built
/// when `cache` is null and any EIGEN method is present.
GridResult run_grid(const SimScenario& scenario,
                    std::shared_ptr<const EigenSystemCache> cache = nullptr,
                    const ProgressFn& progress = {});

/// "method,case,sigma,bias2,var,mse,seconds"; first three metrics x 1e4.
std::string metrics_csv(const std::vector<MetricRow>& rows);

/// Run manifest: config hash, versions, generator, seeds, failures.
nlohmann::json run_manifest(const SimScenario& scenario, const GridResult& result);

struct TimingRow {
  int n = 0;
  double seconds = 0.0;  // median
  std::vector<double> samples;
};

struct TimingConfig {
  MethodSpec method;
  KernelKind kernel = KernelKind::cubic;
  TestCase test_case = TestCase::case1;
  double sigma = 0.1;
  std::vector<int> ns;
  int repeats = 5;
  std::uint64_t seed = 1;
  LambdaGrid grid;
  std::shared_ptr<const EigenSystemCache> cache;
};

/// Median wall time of a GML-selected fit per n after one untimed warm-up.
std::vector<TimingRow> timing_sweep(const TimingConfig& config);
std::string timing_csv(const std::string& label, const std::vector<TimingRow>& rows);

/// FNV-1a of a canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace eigenspline
