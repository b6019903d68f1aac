#include "eigenspline/eigensys.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "eigenspline/error.hpp"
#include "eigenspline/linalg.hpp"
#include "eigenspline/simd.hpp"

namespace eigenspline {

int EigenSystemCache::positive_modes() const noexcept {
  if (gamma.size() == 0 || gamma(0) <= 0.0) return 0;
  const double floor = kModeFloor * gamma(0);
  int k = 0;
  while (k < gamma.size() && gamma(k) > floor) ++k;
  return k;
}

bool operator==(const EigenSystemCache& a, const EigenSystemCache& b) {
  return a.kernel == b.kernel && a.s == b.s && a.gamma.size() == b.gamma.size() &&
         a.v.rows() == b.v.rows() && a.v.cols() == b.v.cols() &&
         a.gamma == b.gamma && a.v == b.v;
}

EigenSystemCache precompute_cache(const Kernel& kernel, int n_points) {
  if (n_points < 2) {
    throw ArgumentError("precompute_cache: N = " + std::to_string(n_points) +
                        " (need N >= 2)");
  }
  std::vector<double> s(static_cast<std::size_t>(n_points));
  for (int j = 0; j < n_points; ++j) s[j] = static_cast<double>(j + 1) / n_points;
  return precompute_cache(kernel, std::move(s));
}

EigenSystemCache precompute_cache(const Kernel& kernel, std::vector<double> nodes) {
  if (nodes.size() < 2) throw ArgumentError("precompute_cache: need N >= 2 nodes");
  const Eigen::MatrixXd omega = gram_sigma(kernel, nodes);
  linalg::SymEig eig = linalg::sym_eig(omega);

  const double top = eig.values(0);
  if (!(top > 0.0)) {
    throw NumericalError("precompute_cache: leading eigenvalue " +
                         std::to_string(top) + " is not positive");
  }
  const double most_negative = eig.values.minCoeff();
  if (most_negative < -1e-8 * top) {
    throw NumericalError("precompute_cache: Omega is indefinite (gamma_min / gamma_1 = " +
                         std::to_string(most_negative / top) + ")");
  }
  EigenSystemCache cache;
  cache.kernel = kernel.kind();
  cache.s = std::move(nodes);
  cache.gamma = eig.values.cwiseMax(0.0);
  cache.v = std::move(eig.vectors);
  return cache;
}

namespace {

void check_mode(const EigenSystemCache& cache, int k) {
  if (k < 0 || k >= cache.size()) {
    throw ArgumentError("eigenfunction index " + std::to_string(k) + " outside [0, " +
                        std::to_string(cache.size()) + ")");
  }
  if (cache.gamma(k) <= kModeFloor * cache.gamma(0)) {
    throw ZeroEigenvalueError("mode " + std::to_string(k) +
                              " has zero eigenvalue; eigenfunction undefined");
  }
}

void check_rank(const EigenSystemCache& cache, int K) {
  if (K < 1) throw RankError("rank K must be >= 1");
  if (K > cache.positive_modes()) {
    throw RankError("rank K = " + std::to_string(K) + " exceeds the " +
                    std::to_string(cache.positive_modes()) +
                    " positive modes of the cache");
  }
}

constexpr Eigen::Index kRowBlock = 256;

// {R1(x_i, s_j)} * proj, one row block at a time; the n x N cross Gram is
// never held in full.
Eigen::MatrixXd project_kernel_rows(const EigenSystemCache& cache, std::span<const double> xs,
                                    const Eigen::MatrixXd& proj) {
  check_domain(xs, "x");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index nodes = cache.size();
  Eigen::MatrixXd out(n, proj.cols());
  Eigen::MatrixXd block(std::min(kRowBlock, n), nodes);
  for (Eigen::Index b = 0; b < n; b += kRowBlock) {
    const Eigen::Index m = std::min(kRowBlock, n - b);
    const std::span<const double> rows = xs.subspan(static_cast<std::size_t>(b),
                                                    static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < nodes; ++j) {
      simd::kernel_row(cache.kernel, cache.s[j], rows, {block.col(j).data(), rows.size()});
    }
    out.middleRows(b, m).noalias() = block.topRows(m) * proj;
  }
  return out;
}

}  // namespace

double approx_eigenfunction(const EigenSystemCache& cache, int k, double x) {
  check_mode(cache, k);
  const double pts[1] = {x};
  check_domain(pts, "x");
  std::vector<double> row(cache.s.size());
  simd::kernel_row(cache.kernel, x, cache.s, row);
  const Eigen::Map<const Eigen::VectorXd> r(row.data(), cache.size());
  return std::sqrt(static_cast<double>(cache.size())) / cache.gamma(k) *
         r.dot(cache.v.col(k));
}

Eigen::MatrixXd approx_eigenfunctions(const EigenSystemCache& cache, int K,
                                      std::span<const double> xs) {
  check_rank(cache, K);
  const Eigen::VectorXd scale =
      std::sqrt(static_cast<double>(cache.size())) * cache.gamma.head(K).cwiseInverse();
  return project_kernel_rows(cache, xs, cache.v.leftCols(K) * scale.asDiagonal());
}

Eigen::MatrixXd feature_matrix(const EigenSystemCache& cache,
                               std::span<const double> xs, int K) {
  check_rank(cache, K);
  const Eigen::VectorXd scale = cache.gamma.head(K).cwiseSqrt().cwiseInverse();
  return project_kernel_rows(cache, xs, cache.v.leftCols(K) * scale.asDiagonal());
}

TruncatedEigenBasis TruncatedEigenBasis::analytic_periodic(int K) {
  if (K < 1) throw RankError("rank K must be >= 1");
  TruncatedEigenBasis b;
  b.kernel_ = KernelKind::periodic;
  b.delta_.resize(K);
  for (int k = 0; k < K; ++k) {
    b.delta_(k) = std::pow(2.0 * std::numbers::pi * (k / 2 + 1), -4.0);
  }
  return b;
}

TruncatedEigenBasis TruncatedEigenBasis::from_cache(
    std::shared_ptr<const EigenSystemCache> cache, int K) {
  if (!cache) throw ArgumentError("from_cache: null cache");
  check_rank(*cache, K);
  TruncatedEigenBasis b;
  b.kernel_ = cache->kernel;
  b.delta_ = cache->gamma.head(K) / static_cast<double>(cache->size());
  b.cache_ = std::move(cache);
  return b;
}

int TruncatedEigenBasis::frequency(int k) const {
  if (!is_analytic()) throw UnsupportedError("frequency() needs an analytic basis");
  return k / 2 + 1;
}

Eigen::MatrixXd TruncatedEigenBasis::eigenfunctions(std::span<const double> xs) const {
  if (!is_analytic()) return approx_eigenfunctions(*cache_, rank(), xs);
  check_domain(xs, "x");
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(xs.size()), rank());
  for (int k = 0; k < rank(); ++k) {
    const double w = 2.0 * std::numbers::pi * frequency(k);
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
      const double a = w * xs[i];
      phi(i, k) = std::numbers::sqrt2 * (k % 2 == 0 ? std::cos(a) : std::sin(a));
    }
  }
  return phi;
}

Eigen::MatrixXd TruncatedEigenBasis::features(std::span<const double> xs) const {
  if (!is_analytic()) return feature_matrix(*cache_, xs, rank());
  return eigenfunctions(xs) * delta_.cwiseSqrt().asDiagonal();
}

TruncatedEigenBasis analytic_eigensystem(const Kernel& kernel, int K) {
  if (kernel.kind() != KernelKind::periodic) {
    throw UnsupportedError("no analytic eigensystem for the " +
                           std::string(kernel.name()) + " kernel");
  }
  return TruncatedEigenBasis::analytic_periodic(K);
}

Eigen::MatrixXd feature_matrix(const TruncatedEigenBasis& basis,
                               std::span<const double> xs) {
  return basis.features(xs);
}

std::vector<std::pair<int, int>> eigen_clusters(const Eigen::VectorXd& values,
                                                double rel_gap) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(values.size());
  int begin = 0;
  for (int k = 1; k <= n; ++k) {
    const bool split =
        k == n || std::fabs(values(k - 1) - values(k)) >
                      rel_gap * std::max(std::fabs(values(k - 1)), std::fabs(values(k)));
    if (split) {
      out.emplace_back(begin, k);
      begin = k;
    }
  }
  return out;
}

}  // namespace eigenspline
