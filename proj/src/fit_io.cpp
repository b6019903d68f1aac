#include "eigenspline/fit_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "eigenspline/cache_io.hpp"
#include "eigenspline/error.hpp"

namespace eigenspline {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

// NaN / inf are written as null by the JSON library; read them back as NaN.
std::vector<double> doubles(const json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    out.push_back(e.is_null() ? std::numeric_limits<double>::quiet_NaN() : e.get<double>());
  }
  return out;
}

Eigen::VectorXd json_to_vec(const json& j) {
  const auto v = doubles(j);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("fit JSON: missing field \"") + key + "\"");
  return j.at(key);
}

}  // namespace

json gml_to_json(const GmlTrace& trace) {
  json g;
  g["selected_lambda"] = trace.selected;
  g["selected_criterion"] = trace.selected_criterion;
  g["grid_points"] = trace.lambdas.size();
  if (trace.grid_argmin >= 0) {
    g["grid_argmin_lambda"] = trace.lambdas[static_cast<std::size_t>(trace.grid_argmin)];
    g["grid_argmin_criterion"] = trace.criterion[static_cast<std::size_t>(trace.grid_argmin)];
  }
  g["grid_lambda"] = trace.lambdas;
  g["grid_criterion"] = trace.criterion;
  return g;
}

json fit_to_json(const FitResult& fit) {
  json j;
  j["format"] = "eigenspline-fit";
  j["version"] = 1;
  j["method"] = std::string(to_string(fit.method));
  j["kernel"] = std::string(to_string(fit.kernel));
  j["lambda"] = fit.lambda;
  j["lambda_source"] = fit.gml ? "gml" : "fixed";
  j["n"] = fit.n;
  j["rank"] = fit.rank;
  j["d"] = vec_to_json(fit.d);
  const bool representer = fit.method == Method::all || fit.method == Method::rsr;
  j[representer ? "c" : "b"] = vec_to_json(fit.coef);

  json basis;
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, std::monostate>) {
          basis = nullptr;
        } else if constexpr (std::is_same_v<B, RepresenterBasis>) {
          basis["type"] = "representers";
          basis["points"] = b.points;
          basis["indices"] = b.indices;
        } else if constexpr (std::is_same_v<B, EigenBasisRef>) {
          basis["type"] = "eigen";
          basis["K"] = b.basis.rank();
          basis["analytic"] = b.basis.is_analytic();
          if (!b.basis.is_analytic()) {
            const auto& cache = *b.basis.cache();
            basis["cache"] = b.cache_path;
            basis["cache_crc32"] = cache_checksum(save_cache(cache));
            basis["N"] = cache.size();
          }
        } else {
          basis["type"] = "nystrom";
          basis["indices"] = b.indices;
          basis["points"] = b.points;
          json rows = json::array();
          for (Eigen::Index r = 0; r < b.w_inv_sqrt.rows(); ++r) {
            rows.push_back(vec_to_json(b.w_inv_sqrt.row(r).transpose()));
          }
          basis["w_inv_sqrt"] = std::move(rows);
        }
      },
      fit.basis);
  j["basis"] = std::move(basis);
  j["gml"] = fit.gml ? gml_to_json(*fit.gml) : json(nullptr);
  j["fitted"] = vec_to_json(fit.fitted);
  j["data_fingerprint"] = hex64(fit.data_fingerprint);
  return j;
}

std::string fit_cache_path(const json& j) {
  if (!j.contains("basis") || !j["basis"].is_object()) return {};
  const auto& b = j["basis"];
  if (b.value("type", "") != "eigen" || b.value("analytic", true)) return {};
  return b.value("cache", "");
}

FitResult fit_from_json(const json& j, std::shared_ptr<const EigenSystemCache> cache) {
  try {
    if (j.value("format", "") != "eigenspline-fit") {
      throw FormatError("not an eigenspline fit file (format field)");
    }
    FitResult fit;
    fit.method = parse_method(field(j, "method").get<std::string>());
    fit.kernel = parse_kernel_kind(field(j, "kernel").get<std::string>());
    fit.lambda = field(j, "lambda").get<double>();
    fit.n = field(j, "n").get<int>();
    fit.rank = field(j, "rank").get<int>();
    fit.d = json_to_vec(field(j, "d"));
    const bool representer = fit.method == Method::all || fit.method == Method::rsr;
    fit.coef = json_to_vec(field(j, representer ? "c" : "b"));
    if (j.contains("fitted")) fit.fitted = json_to_vec(j["fitted"]);
    if (j.contains("data_fingerprint")) {
      fit.data_fingerprint = std::stoull(j["data_fingerprint"].get<std::string>(), nullptr, 16);
    }

    const json& b = field(j, "basis");
    if (b.is_null()) throw InvalidFitError("fit JSON has no basis");
    const std::string type = field(b, "type").get<std::string>();
    if (type == "representers") {
      fit.basis = RepresenterBasis{field(b, "points").get<std::vector<double>>(),
                                   b.value("indices", std::vector<int>{})};
    } else if (type == "nystrom") {
      NystromBasis nb;
      nb.indices = field(b, "indices").get<std::vector<int>>();
      nb.points = field(b, "points").get<std::vector<double>>();
      const auto& rows = field(b, "w_inv_sqrt");
      const auto k = static_cast<Eigen::Index>(rows.size());
      nb.w_inv_sqrt.resize(k, k);
      for (Eigen::Index r = 0; r < k; ++r) {
        const auto row = doubles(rows[static_cast<std::size_t>(r)]);
        if (static_cast<Eigen::Index>(row.size()) != k) {
          throw FormatError("fit JSON: w_inv_sqrt is not square");
        }
        for (Eigen::Index c = 0; c < k; ++c) nb.w_inv_sqrt(r, c) = row[static_cast<std::size_t>(c)];
      }
      fit.basis = std::move(nb);
    } else if (type == "eigen") {
      const int K = field(b, "K").get<int>();
      if (field(b, "analytic").get<bool>()) {
        fit.basis = EigenBasisRef{analytic_eigensystem(Kernel(fit.kernel), K), ""};
      } else {
        if (!cache) {
          throw ArgumentError("fit uses eigen cache '" + b.value("cache", "") +
                              "'; supply it with --cache");
        }
        if (cache->kernel != fit.kernel) {
          throw ArgumentError("cache kernel " + std::string(to_string(cache->kernel)) +
                              " does not match fit kernel " +
                              std::string(to_string(fit.kernel)));
        }
        const auto want = field(b, "cache_crc32").get<std::uint32_t>();
        const auto have = cache_checksum(save_cache(*cache));
        if (want != have) {
          throw ArgumentError("cache CRC-32 does not match the one recorded in the fit");
        }
        fit.basis = EigenBasisRef{TruncatedEigenBasis::from_cache(std::move(cache), K),
                                  b.value("cache", "")};
      }
    } else {
      throw FormatError("fit JSON: unknown basis type '" + type + "'");
    }
    if (!j["gml"].is_null()) {
      const auto& g = j["gml"];
      GmlTrace trace;
      trace.selected = g.value("selected_lambda", fit.lambda);
      trace.selected_criterion = g.value("selected_criterion", 0.0);
      if (g.contains("grid_lambda")) trace.lambdas = doubles(g["grid_lambda"]);
      if (g.contains("grid_criterion")) trace.criterion = doubles(g["grid_criterion"]);
      fit.gml = std::move(trace);
    }
    return fit;
  } catch (const json::exception& e) {
    throw FormatError(std::string("fit JSON: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write to " + path.string() + " failed");
}

}  // namespace eigenspline
