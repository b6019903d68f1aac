// eigenspline command-line front end.
//
//   eigenspline precompute --kernel cubic --n-points 100 --out cache.eig
//   eigenspline fit --data d.csv --method eigen --cache cache.eig --rank 30 --out fit.json
//   eigenspline predict --fit fit.json --points x.csv --out fhat.csv
//   eigenspline bounds --data d.csv --kernel periodic --rank 10 --out report.json
//   eigenspline simulate --scenario scenarios/desk_orderings.json --out metrics.csv
//   eigenspline bench --method eigen --rank 30 --n 20000,80000 --cache cache.eig
//
// Exit codes: 0 success, 1 usage / bad input, 2 I/O, 3 solver failure. Every
// non-zero exit prints one JSON object on stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eigenspline/eigenspline.hpp"

namespace es = eigenspline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(std::string_view kind) {
  if (kind == "io" || kind == "corruption") return 2;
  if (kind == "numerical" || kind == "degenerate_design" || kind == "zero_eigenvalue" ||
      kind == "selection") {
    return 3;
  }
  return 1;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  json j{{"error", std::string(kind)}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << std::endl;
  return code;
}

// Writes through a sibling temporary so a failed run leaves no partial file.
void atomic_write(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  es::write_text_file(tmp, text);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw es::IoError("cannot move output into place at " + path.string());
  }
}

void atomic_write_bytes(const fs::path& path, const std::vector<std::byte>& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw es::IoError("cannot open " + tmp.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw es::IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw es::IoError("cannot move output into place at " + path.string());
}

std::optional<double> parse_lambda(const std::string& text) {
  if (text == "gml") return std::nullopt;
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v > 0.0)) {
    throw es::ArgumentError("--lambda must be a positive number or \"gml\" (got \"" + text +
                            "\")");
  }
  return v;
}

std::shared_ptr<const es::EigenSystemCache> load_cache(const std::string& path) {
  return std::make_shared<const es::EigenSystemCache>(es::read_cache_file(path));
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("EIGENSPLINE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

struct GridFlags {
  double log10_min = -12.0;
  double log10_max = 0.0;
  int points = 61;

  void add(CLI::App* app) {
    app->add_option("--grid-min", log10_min, "log10 of the smallest lambda on the GML grid")
        ->capture_default_str();
    app->add_option("--grid-max", log10_max, "log10 of the largest lambda on the GML grid")
        ->capture_default_str();
    app->add_option("--grid-points", points, "GML grid size")->capture_default_str();
  }
  es::LambdaGrid grid() const {
    es::LambdaGrid g;
    g.log10_min = log10_min;
    g.log10_max = log10_max;
    g.points = points;
    return g;
  }
};

// ---- precompute ------------------------------------------------------------

struct PrecomputeArgs {
  std::string kernel;
  int n_points = 0;
  std::string out;
  std::string csv;
};

int cmd_precompute(const PrecomputeArgs& a) {
  const es::Kernel kernel(es::parse_kernel_kind(a.kernel));
  const es::EigenSystemCache cache = es::precompute_cache(kernel, a.n_points);
  atomic_write_bytes(a.out, es::save_cache(cache));
  if (!a.csv.empty()) atomic_write(a.csv, es::eigenvalue_csv(cache));
  std::cout << "k,eigenvalue\n";
  for (int k = 0; k < std::min(10, cache.size()); ++k) {
    std::cout << (k + 1) << ',' << fmt(cache.eigenvalue(k)) << '\n';
  }
  return 0;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string kernel = "cubic";
  std::string method = "all";
  int rank = 0;
  std::string cache;
  bool analytic = false;
  std::string lambda = "gml";
  std::uint64_t seed = 1;
  GridFlags grid;
  std::string out;
};

int cmd_fit(const FitArgs& a) {
  const es::Kernel kernel(es::parse_kernel_kind(a.kernel));
  es::MethodConfig cfg;
  cfg.method = es::parse_method(a.method);
  cfg.rank = a.rank;
  cfg.seed = a.seed;
  if (cfg.method == es::Method::eigen) {
    if (a.cache.empty() && !a.analytic) {
      throw es::ArgumentError("--method eigen needs --cache FILE or --analytic");
    }
  } else if (!a.cache.empty() || a.analytic) {
    throw es::ArgumentError("--cache / --analytic only apply to --method eigen");
  }
  if (cfg.method != es::Method::all && a.rank < 1) {
    throw es::ArgumentError("--method " + a.method + " needs --rank");
  }
  es::LambdaChoice choice;
  choice.fixed = parse_lambda(a.lambda);
  choice.grid = a.grid.grid();
  cfg.analytic = a.analytic;
  // Validate every path before compute.
  es::DataSet data = es::read_data_csv(a.data);
  if (!a.cache.empty()) {
    cfg.cache = load_cache(a.cache);
    cfg.cache_path = a.cache;
  }
  const es::FitResult fit = es::fit(data, kernel, cfg, choice);
  atomic_write(a.out, es::fit_to_json(fit).dump(2) + "\n");
  std::cout << "method=" << es::to_string(fit.method) << " lambda=" << fmt(fit.lambda)
            << (fit.gml ? " (gml)" : " (fixed)") << " n=" << fit.n << " rank=" << fit.rank
            << '\n';
  return 0;
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string fit;
  std::string points;
  int grid = 0;
  std::string cache;
  std::string out;
};

int cmd_predict(const PredictArgs& a) {
  const json j = es::read_json_file(a.fit);
  std::string cache_path = a.cache.empty() ? es::fit_cache_path(j) : a.cache;
  std::shared_ptr<const es::EigenSystemCache> cache;
  if (!cache_path.empty()) cache = load_cache(cache_path);
  std::vector<double> xs;
  if (!a.points.empty()) {
    xs = es::read_points_csv(a.points);
  } else {
    if (a.grid < 2) throw es::ArgumentError("give --points FILE or --grid M (M >= 2)");
    for (int i = 0; i < a.grid; ++i) xs.push_back(static_cast<double>(i) / (a.grid - 1));
  }
  const es::FitResult fit = es::fit_from_json(j, cache);
  atomic_write(a.out, es::predictions_csv(xs, es::predict(fit, xs)));
  return 0;
}

// ---- bounds ----------------------------------------------------------------

struct BoundsArgs {
  std::string data;
  std::string kernel = "periodic";
  int rank = 0;
  std::string cache;
  std::string lambda = "gml";
  GridFlags grid;
  int nodes = es::kDefaultQuadratureNodes;
  std::string out;
};

int cmd_bounds(const BoundsArgs& a) {
  const es::Kernel kernel(es::parse_kernel_kind(a.kernel));
  if (a.rank < 1) throw es::ArgumentError("--rank must be >= 1");
  es::DataSet data = es::read_data_csv(a.data);
  std::shared_ptr<const es::EigenSystemCache> cache;
  if (!a.cache.empty()) {
    cache = load_cache(a.cache);
    if (cache->kernel != kernel.kind()) {
      throw es::ArgumentError("cache was built for the " +
                              std::string(es::to_string(cache->kernel)) + " kernel");
    }
  }
  if (kernel.kind() != es::KernelKind::periodic && !cache) {
    throw es::UnsupportedError("the " + std::string(kernel.name()) +
                               " kernel has no analytic eigensystem; supply --cache");
  }

  const es::BoundContext ctx = es::make_bound_context(data, kernel);
  es::LambdaChoice choice;
  choice.fixed = parse_lambda(a.lambda);
  choice.grid = a.grid.grid();
  es::FitResult exact = es::fit(data, kernel, es::MethodConfig{}, choice);
  const double lambda = exact.lambda;

  json out;
  out["lambda"] = lambda;
  out["lambda_source"] = choice.fixed ? "fixed" : "gml";
  bool valid = true;
  if (kernel.kind() == es::KernelKind::periodic) {
    const es::TruncatedEigenBasis analytic = es::analytic_eigensystem(kernel, a.rank);
    const es::FitResult truncated = es::fit_eigen(data, kernel, analytic, lambda);
    const es::BoundReport t1 = es::theorem1_bounds(ctx, exact, truncated, analytic, a.nodes);
    out["theorem1"] = es::bound_report_to_json(t1);
    valid = valid && t1.valid;
    if (cache) {
      const auto approx = es::TruncatedEigenBasis::from_cache(cache, a.rank);
      const es::FitResult cached = es::fit_eigen(data, kernel, approx, lambda);
      const es::BoundReport t2 =
          es::theorem2_bounds(ctx, truncated, cached, analytic, approx, &exact, a.nodes);
      out["theorem2"] = es::bound_report_to_json(t2);
      valid = valid && t2.valid;
    }
  } else {
    const auto approx = es::TruncatedEigenBasis::from_cache(cache, a.rank);
    const es::FitResult truncated = es::fit_eigen(data, kernel, approx, lambda);
    const es::BoundReport t1 = es::theorem1_bounds(ctx, exact, truncated, approx, a.nodes);
    out["theorem1"] = es::bound_report_to_json(t1);
    valid = valid && t1.valid;
  }
  out["valid"] = valid;
  atomic_write(a.out, out.dump(2) + "\n");
  std::cout << "verdict: " << (valid ? "all observed errors within bounds" : "BOUND VIOLATED")
            << '\n';
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::string manifest;
  std::string cache;
  int replicates = 0;
  int n = 0;
  int threads = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  es::SimScenario s = es::scenario_from_json(es::read_json_file(a.scenario));
  if (a.replicates > 0) s.replicates = a.replicates;
  if (a.n > 0) s.n = a.n;
  s.threads = resolve_threads(a.threads > 0 ? a.threads : 0);
  std::shared_ptr<const es::EigenSystemCache> cache;
  if (!a.cache.empty()) cache = load_cache(a.cache);
  const es::GridResult result = es::run_grid(s, cache, [](const std::string& msg) {
    std::cerr << "[simulate] " << msg << std::endl;
  });
  const std::string csv = es::metrics_csv(result.rows);
  atomic_write(a.out, csv);
  if (!a.manifest.empty()) atomic_write(a.manifest, es::run_manifest(s, result).dump(2) + "\n");
  std::cout << csv;
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string method = "eigen";
  int rank = 30;
  std::vector<int> ns;
  int repeats = 5;
  std::string cache;
  std::string kernel = "cubic";
  std::string test_case = "case1";
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  es::TimingConfig cfg;
  cfg.method.method = es::parse_method(a.method);
  cfg.method.rank = a.rank;
  cfg.method.label = es::default_label(cfg.method.method, a.rank);
  cfg.kernel = es::parse_kernel_kind(a.kernel);
  cfg.test_case = es::parse_test_case(a.test_case);
  cfg.ns = a.ns;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  if (cfg.method.method == es::Method::eigen) {
    if (a.cache.empty()) throw es::ArgumentError("--method eigen needs --cache FILE");
    cfg.cache = load_cache(a.cache);
  }
  const std::string csv = es::timing_csv(cfg.method.label, es::timing_sweep(cfg));
  if (!a.out.empty()) atomic_write(a.out, csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothing splines: exact, eigensystem-truncated and low-rank fits"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (fallback: EIGENSPLINE_THREADS)");

  PrecomputeArgs pre;
  auto* c_pre = app.add_subcommand("precompute", "build and store a grid eigensystem cache");
  c_pre->add_option("--kernel", pre.kernel, "cubic or periodic")->required();
  c_pre->add_option("--n-points", pre.n_points, "number of grid points N")->required();
  c_pre->add_option("--out", pre.out, "cache file to write")->required();
  c_pre->add_option("--csv", pre.csv, "also write k,eigenvalue CSV");

  FitArgs fa;
  auto* c_fit = app.add_subcommand("fit", "fit a smoothing spline");
  c_fit->add_option("--data", fa.data, "CSV with header x,y")->required();
  c_fit->add_option("--kernel", fa.kernel, "cubic or periodic")->capture_default_str();
  c_fit->add_option("--method", fa.method, "all, eigen, nystrom or rsr")->capture_default_str();
  c_fit->add_option("--rank", fa.rank, "K (eigen, nystrom) or q (rsr)");
  auto* o_cache = c_fit->add_option("--cache", fa.cache, "eigensystem cache (eigen)");
  auto* o_analytic =
      c_fit->add_flag("--analytic", fa.analytic, "analytic periodic eigensystem (eigen)");
  o_cache->excludes(o_analytic);
  c_fit->add_option("--lambda", fa.lambda, "positive number or gml")->capture_default_str();
  c_fit->add_option("--seed", fa.seed, "column / subset sampling seed")->capture_default_str();
  fa.grid.add(c_fit);
  c_fit->add_option("--out", fa.out, "fit JSON to write")->required();

  PredictArgs pa;
  auto* c_pred = app.add_subcommand("predict", "evaluate a stored fit");
  c_pred->add_option("--fit", pa.fit, "fit JSON")->required();
  auto* o_points = c_pred->add_option("--points", pa.points, "CSV whose first column is x");
  auto* o_grid = c_pred->add_option("--grid", pa.grid, "M uniform points on [0, 1]");
  o_points->excludes(o_grid);
  c_pred->add_option("--cache", pa.cache, "cache file (overrides the fit's reference)");
  c_pred->add_option("--out", pa.out, "x,fhat CSV to write")->required();

  BoundsArgs ba;
  auto* c_bnd = app.add_subcommand("bounds", "approximation error bounds vs observed errors");
  c_bnd->add_option("--data", ba.data, "CSV with header x,y")->required();
  c_bnd->add_option("--kernel", ba.kernel, "cubic or periodic")->capture_default_str();
  c_bnd->add_option("--rank", ba.rank, "truncation rank K")->required();
  c_bnd->add_option("--cache", ba.cache, "grid eigensystem cache");
  c_bnd->add_option("--lambda", ba.lambda, "positive number or gml")->capture_default_str();
  ba.grid.add(c_bnd);
  c_bnd->add_option("--nodes", ba.nodes, "trapezoid nodes on [0, 1]")->capture_default_str();
  c_bnd->add_option("--out", ba.out, "report JSON to write")->required();

  SimulateArgs sa;
  auto* c_sim = app.add_subcommand("simulate", "run a simulation scenario grid");
  c_sim->add_option("--scenario", sa.scenario, "scenario JSON")->required();
  c_sim->add_option("--out", sa.out, "metrics CSV to write")->required();
  c_sim->add_option("--manifest", sa.manifest, "run manifest JSON to write");
  c_sim->add_option("--cache", sa.cache, "eigensystem cache for EIGEN cells");
  c_sim->add_option("--replicates", sa.replicates, "override the replicate count");
  c_sim->add_option("--n", sa.n, "override the sample size");

  BenchArgs be;
  auto* c_bench = app.add_subcommand("bench", "fit-time sweep over n");
  c_bench->add_option("--method", be.method, "all, eigen, nystrom or rsr")->capture_default_str();
  c_bench->add_option("--rank", be.rank, "K or q")->capture_default_str();
  c_bench->add_option("--n", be.ns, "sample sizes")->delimiter(',')->required();
  c_bench->add_option("--repeats", be.repeats, "timed repeats per n")->capture_default_str();
  c_bench->add_option("--cache", be.cache, "eigensystem cache (eigen)");
  c_bench->add_option("--kernel", be.kernel, "cubic or periodic")->capture_default_str();
  c_bench->add_option("--case", be.test_case, "test function")->capture_default_str();
  c_bench->add_option("--seed", be.seed, "data seed")->capture_default_str();
  c_bench->add_option("--out", be.out, "timing CSV to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 1);
  }

  try {
    sa.threads = resolve_threads(threads);
    if (c_pre->parsed()) return cmd_precompute(pre);
    if (c_fit->parsed()) return cmd_fit(fa);
    if (c_pred->parsed()) return cmd_predict(pa);
    if (c_bnd->parsed()) return cmd_bounds(ba);
    if (c_sim->parsed()) return cmd_simulate(sa);
    if (c_bench->parsed()) return cmd_bench(be);
  } catch (const es::Error& e) {
    return report_error(e.kind(), e.what(), exit_code_for(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 3);
  }
  return report_error("usage", "no subcommand", 1);
}
