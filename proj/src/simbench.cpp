#include "eigenspline/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "eigenspline/error.hpp"
#include "eigenspline/linalg.hpp"
#include "eigenspline/rng.hpp"
#include "eigenspline/simd.hpp"
#include "eigenspline/version.hpp"

namespace eigenspline {

using nlohmann::json;

std::string_view to_string(TestCase id) {
  switch (id) {
    case TestCase::case1:
      return "case1";
    case TestCase::case2:
      return "case2";
    case TestCase::case3:
      return "case3";
  }
  return "unknown";
}

TestCase parse_test_case(std::string_view name) {
  if (name == "case1" || name == "1") return TestCase::case1;
  if (name == "case2" || name == "2") return TestCase::case2;
  if (name == "case3" || name == "3") return TestCase::case3;
  throw ArgumentError("unknown test function '" + std::string(name) + "'");
}

double beta_density(double p, double q, double x) {
  if (!(x > 0.0 && x < 1.0)) return 0.0;
  const double log_norm = std::lgamma(p + q) - std::lgamma(p) - std::lgamma(q);
  return std::exp(log_norm + (p - 1.0) * std::log(x) + (q - 1.0) * std::log1p(-x));
}

double eval_test_function(TestCase id, double x) {
  const double pts[1] = {x};
  check_domain(pts, "x");
  switch (id) {
    case TestCase::case1:
      return 0.6 * beta_density(30, 17, x) + 0.4 * beta_density(3, 11, x);
    case TestCase::case2:
      return (beta_density(20, 5, x) + beta_density(12, 12, x) + beta_density(7, 30, x)) / 3.0;
    case TestCase::case3: {
      const double u = x - 0.5;
      return std::sin(32.0 * std::numbers::pi * x) - 8.0 * u * u;
    }
  }
  throw ArgumentError("unknown test function");
}

std::string default_label(Method method, int rank) {
  switch (method) {
    case Method::all:
      return "ALL";
    case Method::eigen:
      return "E" + std::to_string(rank);
    case Method::nystrom:
      return "N" + std::to_string(rank);
    case Method::rsr:
      return "RSR";
  }
  return "?";
}

SimScenario scenario_from_json(const json& j) {
  try {
    SimScenario s;
    s.kernel = parse_kernel_kind(j.value("kernel", "cubic"));
    if (j.contains("cases")) {
      s.cases.clear();
      for (const auto& c : j["cases"]) {
        s.cases.push_back(parse_test_case(c.is_number() ? std::to_string(c.get<int>())
                                                        : c.get<std::string>()));
      }
    } else if (j.contains("case")) {
      const auto& c = j["case"];
      s.cases = {parse_test_case(c.is_number() ? std::to_string(c.get<int>())
                                               : c.get<std::string>())};
    }
    if (j.contains("sigmas")) {
      s.sigmas = j["sigmas"].get<std::vector<double>>();
    } else if (j.contains("sigma")) {
      s.sigmas = {j["sigma"].get<double>()};
    }
    s.n = j.value("n", s.n);
    s.replicates = j.value("replicates", s.replicates);
    s.seed = j.value("seed", s.seed);
    s.cache_points = j.value("cache_points", s.cache_points);
    s.threads = j.value("threads", s.threads);
    if (j.contains("lambda_grid")) {
      const auto& g = j["lambda_grid"];
      s.grid.log10_min = g.value("log10_min", s.grid.log10_min);
      s.grid.log10_max = g.value("log10_max", s.grid.log10_max);
      s.grid.points = g.value("points", s.grid.points);
    }
    for (const auto& m : j.at("methods")) {
      MethodSpec spec;
      spec.method = parse_method(m.at("method").get<std::string>());
      spec.rank = m.value("rank", 0);
      spec.label = m.value("label", default_label(spec.method, spec.rank));
      if (spec.method != Method::all && spec.rank < 1) {
        throw ArgumentError("scenario: method " + spec.label + " needs a positive rank");
      }
      s.methods.push_back(std::move(spec));
    }
    if (s.n < 1) throw ArgumentError("scenario: n must be positive");
    if (s.replicates < 1) throw ArgumentError("scenario: replicates must be positive");
    if (s.cases.empty() || s.sigmas.empty() || s.methods.empty()) {
      throw ArgumentError("scenario: cases, sigmas and methods must be non-empty");
    }
    for (double sg : s.sigmas) {
      if (!(sg >= 0.0)) throw ArgumentError("scenario: sigma must be non-negative");
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scenario JSON: ") + e.what());
  }
}

json scenario_to_json(const SimScenario& s) {
  json j;
  j["kernel"] = std::string(to_string(s.kernel));
  json cases = json::array();
  for (auto c : s.cases) cases.push_back(std::string(to_string(c)));
  j["cases"] = std::move(cases);
  j["sigmas"] = s.sigmas;
  j["n"] = s.n;
  j["replicates"] = s.replicates;
  j["seed"] = s.seed;
  j["cache_points"] = s.cache_points;
  j["lambda_grid"] = {{"log10_min", s.grid.log10_min},
                      {"log10_max", s.grid.log10_max},
                      {"points", s.grid.points}};
  json methods = json::array();
  for (const auto& m : s.methods) {
    methods.push_back(
        {{"method", std::string(to_string(m.method))}, {"rank", m.rank}, {"label", m.label}});
  }
  j["methods"] = std::move(methods);
  return j;
}

DataSet generate_data(const SimScenario& scenario, TestCase id, double sigma, int replicate) {
  DataSet data;
  const int n = scenario.n;
  data.x.resize(static_cast<std::size_t>(n));
  data.y.resize(static_cast<std::size_t>(n));
  Philox4x32 rng(scenario.seed, static_cast<std::uint64_t>(replicate));
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1) / n;
    data.x[i] = x;
    data.y[i] = eval_test_function(id, x);
  }
  if (sigma > 0.0) {
    for (int i = 0; i < n; ++i) data.y[i] += sigma * rng.normal();
  }
  return data;
}

std::uint64_t method_stream(int method_index, int replicate) {
  return (static_cast<std::uint64_t>(method_index + 1) << 40) |
         static_cast<std::uint64_t>(replicate);
}

PointwiseMetrics pointwise_metrics(const Eigen::MatrixXd& fits, const Eigen::VectorXd& truth) {
  const auto n = fits.rows();
  const auto reps = fits.cols();
  if (truth.size() != n || reps < 1) throw ArgumentError("pointwise_metrics: shape mismatch");
  PointwiseMetrics m;
  m.bias2.resize(n);
  m.variance.resize(n);
  m.mse.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < reps; ++r) mean += fits(i, r);
    mean /= static_cast<double>(reps);
    double var = 0.0;
    double mse = 0.0;
    for (Eigen::Index r = 0; r < reps; ++r) {
      const double dv = fits(i, r) - mean;
      const double de = fits(i, r) - truth(i);
      var += dv * dv;
      mse += de * de;
    }
    const double b = mean - truth(i);
    m.bias2(i) = b * b;
    m.variance(i) = var / static_cast<double>(reps);
    m.mse(i) = mse / static_cast<double>(reps);
  }
  return m;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

MethodConfig method_config(const MethodSpec& spec, std::uint64_t seed, std::uint64_t stream,
                           const std::shared_ptr<const EigenSystemCache>& cache) {
  MethodConfig cfg;
  cfg.method = spec.method;
  cfg.rank = spec.rank;
  cfg.seed = seed;
  cfg.stream = stream;
  cfg.cache = cache;
  return cfg;
}

// Runs `work(i)` for i in [0, count) on up to `threads` workers.
template <class F>
void parallel_for(int count, int threads, F&& work) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

GridResult run_grid(const SimScenario& scenario, std::shared_ptr<const EigenSystemCache> cache,
                    const ProgressFn& progress) {
  const Kernel kernel(scenario.kernel);
  GridResult result;
  const bool needs_cache = std::any_of(scenario.methods.begin(), scenario.methods.end(),
                                       [](const MethodSpec& m) { return m.method == Method::eigen; });
  if (needs_cache && !cache) {
    const auto t0 = Clock::now();
    cache = std::make_shared<const EigenSystemCache>(
        precompute_cache(kernel, scenario.cache_points));
    result.cache_seconds = seconds_since(t0);
  }
  if (cache && cache->kernel != scenario.kernel) {
    throw ArgumentError("scenario kernel and cache kernel differ");
  }

  const int n = scenario.n;
  const int reps = scenario.replicates;
  const auto n_methods = scenario.methods.size();
  for (TestCase id : scenario.cases) {
    Eigen::VectorXd truth(n);
    for (int i = 0; i < n; ++i) truth(i) = eval_test_function(id, static_cast<double>(i + 1) / n);
    for (double sigma : scenario.sigmas) {
      if (progress) {
        progress(std::string(to_string(id)) + " sigma=" + std::to_string(sigma));
      }
      std::vector<Eigen::MatrixXd> fits(n_methods, Eigen::MatrixXd(n, reps));
      std::vector<std::vector<double>> times(n_methods, std::vector<double>(reps, 0.0));
      std::vector<std::vector<std::string>> errors(n_methods, std::vector<std::string>(reps));

      parallel_for(reps, scenario.threads, [&](int r) {
        const DataSet data = generate_data(scenario, id, sigma, r);
        LambdaChoice choice;
        choice.grid = scenario.grid;
        for (std::size_t j = 0; j < n_methods; ++j) {
          const MethodSpec& spec = scenario.methods[j];
          try {
            const auto t0 = Clock::now();
            const FitResult f =
                fit(data, kernel,
                    method_config(spec, scenario.seed, method_stream(static_cast<int>(j), r), cache),
                    choice);
            times[j][r] = seconds_since(t0);
            fits[j].col(r) = f.fitted;
          } catch (const std::exception& e) {
            errors[j][r] = e.what();
          }
        }
      });

      for (std::size_t j = 0; j < n_methods; ++j) {
        MetricRow row;
        row.label = scenario.methods[j].label;
        row.test_case = id;
        row.sigma = sigma;
        for (int r = 0; r < reps; ++r) {
          if (!errors[j][r].empty()) {
            if (row.failures++ == 0) row.error = errors[j][r];
          }
          row.seconds += times[j][r];
        }
        row.seconds /= reps;
        if (row.failures > 0) {
          row.bias2 = row.variance = row.mse = std::numeric_limits<double>::quiet_NaN();
        } else {
          const PointwiseMetrics m = pointwise_metrics(fits[j], truth);
          row.bias2 = m.bias2.mean();
          row.variance = m.variance.mean();
          row.mse = m.mse.mean();
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "method,case,sigma,bias2,var,mse,seconds\n";
  for (const auto& r : rows) {
    os << r.label << ',' << to_string(r.test_case) << ',' << r.sigma << ',' << r.bias2 * 1e4
       << ',' << r.variance * 1e4 << ',' << r.mse * 1e4 << ',' << r.seconds << '\n';
  }
  return os.str();
}

std::string config_hash(const json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json run_manifest(const SimScenario& scenario, const GridResult& result) {
  const json config = scenario_to_json(scenario);
  json m;
  m["config"] = config;
  m["config_hash"] = config_hash(config);
  m["versions"] = {{"eigenspline", std::string(kVersion)},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", std::string(__VERSION__)},
                   {"kernel_isa", std::string(simd::to_string(simd::active_isa()))},
                   {"eigensolver", linalg::eig_backend_name()}};
  m["generator"] = std::string(kGeneratorName);
  m["seed"] = scenario.seed;
  m["noise_streams"] = "replicate r uses substream r";
  m["subset_streams"] = "method j on replicate r uses substream ((j + 1) << 40) | r";
  m["cache_seconds"] = result.cache_seconds;
  m["units"] = "bias2, var, mse in 1e-4";
  json failures = json::array();
  for (const auto& r : result.rows) {
    if (r.failures > 0) {
      failures.push_back({{"method", r.label},
                          {"case", std::string(to_string(r.test_case))},
                          {"sigma", r.sigma},
                          {"failed_replicates", r.failures},
                          {"error", r.error}});
    }
  }
  m["failures"] = std::move(failures);
  return m;
}

std::vector<TimingRow> timing_sweep(const TimingConfig& config) {
  if (config.repeats < 1) throw ArgumentError("timing_sweep: repeats must be positive");
  const Kernel kernel(config.kernel);
  std::shared_ptr<const EigenSystemCache> cache = config.cache;
  if (config.method.method == Method::eigen && !cache) {
    throw ArgumentError("timing_sweep: eigen timing needs a cache");
  }
  std::vector<TimingRow> rows;
  for (int n : config.ns) {
    SimScenario s;
    s.n = n;
    s.seed = config.seed;
    const DataSet data = generate_data(s, config.test_case, config.sigma, 0);
    LambdaChoice choice;
    choice.grid = config.grid;
    const MethodConfig mc = method_config(config.method, config.seed, method_stream(0, 0), cache);
    (void)fit(data, kernel, mc, choice);  // warm-up
    TimingRow row;
    row.n = n;
    for (int r = 0; r < config.repeats; ++r) {
      const auto t0 = Clock::now();
      (void)fit(data, kernel, mc, choice);
      row.samples.push_back(seconds_since(t0));
    }
    std::vector<double> sorted = row.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    row.seconds = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string timing_csv(const std::string& label, const std::vector<TimingRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << "method,n,seconds\n";
  for (const auto& r : rows) os << label << ',' << r.n << ',' << r.seconds << '\n';
  return os.str();
}

}  // namespace eigenspline
