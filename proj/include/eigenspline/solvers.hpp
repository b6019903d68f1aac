#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "eigenspline/eigensys.hpp"
#include "eigenspline/gml.hpp"
#include "eigenspline/kernel.hpp"

namespace eigenspline {

enum class Method { all, eigen, nystrom, rsr };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Full QR of the null-space matrix: T = Q1 R, Q = (Q1 Q2) orthogonal.
struct QRFactors {
  Eigen::MatrixXd q1;  // n x p
  Eigen::MatrixXd q2;  // n x (n - p)
  Eigen::MatrixXd r;   // p x p, upper triangular
};
QRFactors qr_factors(const Eigen::MatrixXd& t);

// Basis handles: whatever predict() needs beyond d and the coefficients.

/// f1(x) = sum_j c_j R1(x, points_j). Used by ALL (all design points) and RSR.
struct RepresenterBasis {
  std::vector<double> points;
  std::vector<int> indices;  // into the design; empty for ALL
};

struct EigenBasisRef {
  TruncatedEigenBasis basis;
  std::string cache_path;  // informational, written to JSON
};

/// f1(x) = r(x)^T W^{-1/2} b with r(x) the kernel row at the selected points.
struct NystromBasis {
  std::vector<int> indices;
  std::vector<double> points;
  Eigen::MatrixXd w_inv_sqrt;
};

using BasisHandle =
    std::variant<std::monostate, RepresenterBasis, EigenBasisRef, NystromBasis>;

struct FitResult {
  Method method = Method::all;
  KernelKind kernel = KernelKind::cubic;
  double lambda = 0.0;
  Eigen::VectorXd d;
  /// c (ALL: length n, RSR: length q) or b (EIGEN / Nystrom: length K).
  Eigen::VectorXd coef;
  int n = 0;
  int rank = 0;  // K or q; n for ALL
  BasisHandle basis;
  std::optional<GmlTrace> gml;
  /// Fitted values at the design points.
  Eigen::VectorXd fitted;
  std::uint64_t data_fingerprint = 0;
};

/// Exact smoothing spline through c = Q2 (Q2^T (Sigma + n lambda I) Q2)^{-1} Q2^T y,
/// d = R^{-1} Q1^T (y - (Sigma + n lambda I) c).
FitResult fit_exact(const DataSet& data, const Kernel& kernel, double lambda);

/// Exact fit sharing one eigendecomposition of Q2^T Sigma Q2 across many
/// lambdas: the GML path for ALL.
class ExactSolver {
 public:
  ExactSolver(const DataSet& data, const Kernel& kernel);

  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const Eigen::MatrixXd& null_space() const noexcept { return t_; }
  const QRFactors& qr() const noexcept { return qr_; }
  /// Eigenvalues of Q2^T Sigma Q2, non-increasing.
  const Eigen::VectorXd& projected_eigenvalues() const noexcept { return mu_; }

  GmlCriterion gml() const;
  FitResult fit(double lambda) const;

 private:
  Kernel kernel_;
  std::vector<double> x_;
  Eigen::VectorXd y_;
  std::uint64_t fingerprint_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd t_;
  QRFactors qr_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd z_rot_;  // U^T Q2^T y
};

/// Minimizer of ||y - T d - Z b||^2 + n lambda ||b||^2 via the (p+K)-dimensional
/// normal equations, switching to a QR of the stacked system when the normal
/// matrix condition estimate exceeds 1e8. Leaves basis/method for the caller.
FitResult fit_lowrank(const DataSet& data, const Eigen::MatrixXd& t,
                      const Eigen::MatrixXd& z, double lambda);

struct NystromFeatures {
  Eigen::MatrixXd z;  // n x K, Z Z^T = C W^+ C^T
  std::vector<int> indices;
  Eigen::MatrixXd w_inv_sqrt;
};

/// Uniform column sampling without replacement; W^{-1/2} by eigendecomposition
/// with eigenvalues below 1e-10 * max dropped.
NystromFeatures nystrom_features(const DataSet& data, const Kernel& kernel, int K,
                                 std::uint64_t seed);
/// As above, drawing the column subset from RNG substream `stream`.
NystromFeatures nystrom_features(const DataSet& data, const Kernel& kernel, int K,
                                 std::uint64_t seed, std::uint64_t stream);

FitResult fit_eigen(const DataSet& data, const Kernel& kernel,
                    const TruncatedEigenBasis& basis, double lambda);
FitResult fit_nystrom(const DataSet& data, const Kernel& kernel, int K, double lambda,
                      std::uint64_t seed);
/// Random subset of q representers; ||y - Td - Sigma_nq c||^2 + n lambda c^T Sigma_qq c.
FitResult fit_rsr(const DataSet& data, const Kernel& kernel, int q, double lambda,
                  std::uint64_t seed);

/// Method-generic entry point used by the CLI and the benchmark harness.
struct MethodConfig {
  Method method = Method::all;
  int rank = 0;  // K for EIGEN / Nystrom, q for RSR
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // RNG substream for the Nystrom / RSR subset
  std::shared_ptr<const EigenSystemCache> cache;
  bool analytic = false;  // EIGEN with the analytic periodic eigensystem
  std::string cache_path;
};

struct LambdaChoice {
  std::optional<double> fixed;  // nullopt selects by GML
  LambdaGrid grid;
};

FitResult fit(const DataSet& data, const Kernel& kernel, const MethodConfig& config,
              const LambdaChoice& lambda);

/// Null-space part and penalized part of the fitted function at xs.
struct PredictParts {
  Eigen::VectorXd null_part;
  Eigen::VectorXd rk_part;
  Eigen::VectorXd total() const { return null_part + rk_part; }
};

PredictParts predict_parts(const FitResult& fit, std::span<const double> xs);
Eigen::VectorXd predict(const FitResult& fit, std::span<const double> xs);

/// Representer coefficients implied by a fit at its design points:
/// c = (y - fitted) / (n lambda). For low-rank fits this is the c-tilde of the
/// truncated Gram problem.
Eigen::VectorXd implied_representer_coefficients(const FitResult& fit,
                                                 const DataSet& data);

}  // namespace eigenspline
