#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eigenspline/kernel.hpp"

namespace eigenspline {

/// Modes with gamma_k <= kModeFloor * gamma_1 are treated as zero and are
/// never selected for a truncated basis.
inline constexpr double kModeFloor = 1e-12;

/// Grid eigensystem of R1 on N pre-selected points: Omega = V Gamma V^T with
/// Omega = {R1(s_i, s_j)}. gamma is non-increasing and clamped at zero.
struct EigenSystemCache {
  KernelKind kernel = KernelKind::cubic;
  std::vector<double> s;
  Eigen::VectorXd gamma;
  Eigen::MatrixXd v;

  int size() const noexcept { return static_cast<int>(s.size()); }
  /// Number of modes above the kModeFloor threshold.
  int positive_modes() const noexcept;
  /// Approximate Mercer eigenvalue gamma_k / N.
  double eigenvalue(int k) const { return gamma(k) / static_cast<double>(size()); }

  /// Field-wise, bit-exact comparison.
  friend bool operator==(const EigenSystemCache& a, const EigenSystemCache& b);
};

/// Builds the cache on the uniform grid s_j = j/N, j = 1..N.
EigenSystemCache precompute_cache(const Kernel& kernel, int n_points);
/// Builds the cache on caller-supplied nodes. Quadrature weights stay 1/N.
EigenSystemCache precompute_cache(const Kernel& kernel, std::vector<double> nodes);

/// Nystrom-extended eigenfunction sqrt(N)/gamma_k * R1(x, s) v_k
/// (mode index k is 0-based).
double approx_eigenfunction(const EigenSystemCache& cache, int k, double x);

/// n x K matrix of approximate eigenfunctions at xs.
Eigen::MatrixXd approx_eigenfunctions(const EigenSystemCache& cache, int K,
                                      std::span<const double> xs);

/// Rank-K eigenbasis of R1: analytic (periodic kernel) or grid-approximated
/// through a shared cache.
class TruncatedEigenBasis {
 public:
  static TruncatedEigenBasis analytic_periodic(int K);
  static TruncatedEigenBasis from_cache(std::shared_ptr<const EigenSystemCache> cache,
                                        int K);

  int rank() const noexcept { return static_cast<int>(delta_.size()); }
  KernelKind kernel() const noexcept { return kernel_; }
  bool is_analytic() const noexcept { return cache_ == nullptr; }
  const std::shared_ptr<const EigenSystemCache>& cache() const noexcept { return cache_; }

  /// delta_k (analytic) or gamma_k / N (cache); non-increasing.
  const Eigen::VectorXd& eigenvalues() const noexcept { return delta_; }
  /// Trigonometric frequency of analytic mode k.
  int frequency(int k) const;

  /// n x K matrix of Phi_k(x_i).
  Eigen::MatrixXd eigenfunctions(std::span<const double> xs) const;
  /// Feature matrix Z with Z Z^T the rank-K Gram approximation.
  Eigen::MatrixXd features(std::span<const double> xs) const;

 private:
  TruncatedEigenBasis() = default;

  KernelKind kernel_ = KernelKind::periodic;
  Eigen::VectorXd delta_;
  std::shared_ptr<const EigenSystemCache> cache_;
};

/// Analytic eigensystem; only the periodic kernel has one.
TruncatedEigenBasis analytic_eigensystem(const Kernel& kernel, int K);

/// Z = U1 Delta1^{1/2} (analytic) or U2 V1 Gamma1^{-1/2} (cache).
Eigen::MatrixXd feature_matrix(const TruncatedEigenBasis& basis,
                               std::span<const double> xs);
Eigen::MatrixXd feature_matrix(const EigenSystemCache& cache,
                               std::span<const double> xs, int K);

/// Groups of consecutive eigenvalues whose relative gap is below `rel_gap`,
/// as [begin, end) index ranges.
std::vector<std::pair<int, int>> eigen_clusters(const Eigen::VectorXd& values,
                                                double rel_gap = 1e-6);

}  // namespace eigenspline
