#include "eigenspline/kernel.hpp"

#include <cstring>
#include <string>

#include "eigenspline/error.hpp"
#include "eigenspline/simd.hpp"

namespace eigenspline {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::cubic:
      return "cubic";
    case KernelKind::periodic:
      return "periodic";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "cubic") return KernelKind::cubic;
  if (name == "periodic") return KernelKind::periodic;
  throw ArgumentError("unknown kernel '" + std::string(name) +
                      "' (expected cubic or periodic)");
}

void check_domain(std::span<const double> xs, std::string_view what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] >= 0.0 && xs[i] <= 1.0)) {
      throw ArgumentError(std::string(what) + "[" + std::to_string(i) +
                          "] = " + std::to_string(xs[i]) + " outside [0, 1]");
    }
  }
}

double rk_eval(const Kernel& kernel, double x, double z) {
  const double pts[2] = {x, z};
  check_domain(pts, "rk_eval argument");
  return kernel.rk(x, z);
}

Eigen::MatrixXd gram_sigma(const Kernel& kernel, std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("gram_sigma: empty point set");
  check_domain(xs, "x");
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd g(n, n);
  // Column i, rows i..n-1, is the contiguous lower-triangle segment.
  for (Eigen::Index i = 0; i < n; ++i) {
    simd::kernel_row(kernel.kind(), xs[i], xs.subspan(i),
                     {g.col(i).data() + i, static_cast<std::size_t>(n - i)});
  }
  for (Eigen::Index j = 1; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) g(i, j) = g(j, i);
  return g;
}

Eigen::MatrixXd cross_gram(const Kernel& kernel, std::span<const double> xs,
                           std::span<const double> zs) {
  check_domain(xs, "x");
  check_domain(zs, "z");
  Eigen::MatrixXd g(static_cast<Eigen::Index>(xs.size()),
                    static_cast<Eigen::Index>(zs.size()));
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    simd::kernel_row(kernel.kind(), zs[j], xs, {g.col(j).data(), xs.size()});
  }
  return g;
}

Eigen::MatrixXd null_rows(const Kernel& kernel, std::span<const double> xs) {
  check_domain(xs, "x");
  const int p = kernel.null_dim();
  Eigen::MatrixXd t(static_cast<Eigen::Index>(xs.size()), p);
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (int nu = 0; nu < p; ++nu) t(i, nu) = kernel.null_basis(nu, xs[i]);
  return t;
}

Eigen::MatrixXd null_matrix(const Kernel& kernel, std::span<const double> xs) {
  const int p = kernel.null_dim();
  if (xs.size() < static_cast<std::size_t>(p)) {
    throw ArgumentError("null_matrix: need at least " + std::to_string(p) +
                        " points");
  }
  Eigen::MatrixXd t = null_rows(kernel, xs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
  const auto& sv = svd.singularValues();
  if (sv(p - 1) <= 1e-12 * sv(0)) {
    throw DegenerateDesignError(
        "null-space matrix T is rank deficient (sigma_min / sigma_max = " +
        std::to_string(sv(p - 1) / sv(0)) + ")");
  }
  return t;
}

void DataSet::validate(const Kernel& kernel) const {
  if (x.size() != y.size()) {
    throw ArgumentError("data: x has " + std::to_string(x.size()) +
                        " entries but y has " + std::to_string(y.size()));
  }
  if (x.size() <= static_cast<std::size_t>(kernel.null_dim())) {
    throw ArgumentError("data: need n > p = " + std::to_string(kernel.null_dim()));
  }
  check_domain(x, "x");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) {
      throw ArgumentError("data: y[" + std::to_string(i) + "] is not finite");
    }
  }
}

std::uint64_t DataSet::fingerprint() const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::vector<double>& v) {
    for (double d : v) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &d, sizeof d);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  };
  mix(x);
  mix(y);
  return h;
}

}  // namespace eigenspline
