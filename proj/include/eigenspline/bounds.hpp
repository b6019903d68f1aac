#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "eigenspline/eigensys.hpp"
#include "eigenspline/solvers.hpp"

namespace eigenspline {

/// Number of trapezoid nodes on [0, 1] for every L2 distance.
inline constexpr int kDefaultQuadratureNodes = 10001;

/// L2^2 distances on [0, 1] between two fits on the same data, split into the
/// null-space part (d) and the penalized remainder, plus coefficient distances.
struct ObservedErrors {
  double f = 0.0;
  double f0 = 0.0;
  double f1 = 0.0;
  double d = 0.0;  // ||d_a - d_b||^2
  double c = 0.0;  // ||c_a - c_b||^2, representer coefficients at the design
};

ObservedErrors observed_errors(const FitResult& a, const FitResult& b, const DataSet& data,
                               int nodes = kDefaultQuadratureNodes);

/// sum_k (lambda_k + n lambda)^{-2} (used in every bound) next to the
/// literal sum_k lambda_k^{-2}, which is +inf once any lambda_k is zero.
struct SpectralSum {
  double regularized = 0.0;
  double literal = 0.0;
};
SpectralSum inverse_square_sum(const Eigen::VectorXd& eigenvalues, double n_lambda);

/// Data-dependent pieces shared by every bound on one data set.
struct BoundContext {
  DataSet data;
  Kernel kernel;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd t;
  QRFactors qr;
  Eigen::VectorXd lambda_n;  // eigenvalues of Q2^T Sigma Q2, non-increasing
  double lambda_max_a = 0.0;  // largest eigenvalue of T (T^T T)^{-2} T^T
  double q2y_norm2 = 0.0;     // ||Q2^T y||^2
};
BoundContext make_bound_context(const DataSet& data, const Kernel& kernel);

/// 1 / sigma_min(T)^2.
double lambda_max_a(const Eigen::MatrixXd& t);

/// Tail sum D_K = sum_{k > K} delta_k^2. Exact (Hurwitz zeta) for the analytic
/// periodic basis; for a cache basis the computed modes are summed and the
/// rest extrapolated with delta_k ~ c k^{-4} fitted to the last 10 positive
/// modes (`estimated` is set).
struct TailSum {
  double value = 0.0;
  bool estimated = false;
};
TailSum tail_sum(const TruncatedEigenBasis& basis);
double periodic_tail_sum(int K);

struct EigenCluster {
  int begin = 0;
  int end = 0;
  double projection_distance = 0.0;  // sin of the largest principal angle
  bool degenerate = false;           // more than one mode
};

enum class BoundKind { lemma1, theorem1, theorem2 };

struct BoundReport {
  BoundKind kind = BoundKind::theorem1;
  KernelKind kernel = KernelKind::periodic;
  int n = 0;
  int p = 0;
  int K = 0;
  double lambda = 0.0;

  double zeta1 = 0.0;
  double zeta1_direct = 0.0;  // ||Q2||_F^6 ||Q2^T y||^2 computed from Q2 itself
  double zeta2 = 0.0;         // zeta2' for theorem2
  double zeta3 = 0.0;         // zeta3' for theorem2
  double zeta4 = 0.0;         // theorem2 only
  double lambda_max_a = 0.0;

  SpectralSum b;        // Q2^T Sigma Q2 (theorem2: Sigma-tilde)
  SpectralSum b_tilde;  // Q2^T Sigma-tilde Q2 (theorem2: Sigma-check)
  double c_k = 0.0;
  double d_k = 0.0;
  bool d_k_estimated = false;
  double c_k_prime = 0.0;
  double kappa = 0.0;
  double kappa_prime = 0.0;
  bool kappa_empirical = false;

  double sigma_diff_fro2 = 0.0;   // ||S_approx - S_ref||_F^2
  double sigma_tilde_fro2 = 0.0;  // ||Sigma-tilde||_F^2
  double c_norm2 = 0.0;           // ||c|| (theorem2: ||c-tilde||)
  double c_check_norm2 = 0.0;     // theorem2 only
  Eigen::VectorXd lambda_ref;     // lambda_{k,n} (theorem2: lambda-tilde)
  Eigen::VectorXd lambda_approx;  // lambda-tilde (theorem2: lambda-check)

  // theorem2 difference terms (after aligning the analytic basis inside
  // each eigenvalue cluster to the cache eigenfunctions)
  double eigenvalue_term = 0.0;     // sum_k (delta-check_k - delta_k)^2
  double eigenfunction_term = 0.0;  // sum_k ||Phi-check_k - Phi_k||_2^2
  double design_term = 0.0;         // sum_k delta-check_k^2 sum_i (...)^2
  std::vector<EigenCluster> clusters;

  double bound_c = 0.0;
  double bound_d = 0.0;
  double bound_f0 = 0.0;
  double bound_f1 = 0.0;
  double bound_f = 0.0;
  ObservedErrors observed;

  // ||f-check - f-hat||^2 <= 2 ||f-check - f-tilde||^2 + 2 ||f-tilde - f-hat||^2
  // when the exact fit is supplied to theorem2_bounds; NaN otherwise.
  double chain_observed = 0.0;
  double chain_bound = 0.0;

  bool valid = false;
};

/// Coefficient bounds for one truncated Gram matrix `sigma_tilde` against
/// the exact fit. Both fits must share lambda and data.
BoundReport lemma1_bounds(const BoundContext& ctx, const FitResult& exact,
                          const FitResult& truncated, const Eigen::MatrixXd& sigma_tilde);

/// Truncation bounds for a rank-K eigenbasis fit against the exact fit.
BoundReport theorem1_bounds(const BoundContext& ctx, const FitResult& exact,
                            const FitResult& truncated, const TruncatedEigenBasis& basis,
                            int nodes = kDefaultQuadratureNodes);

/// Grid-approximation bounds: cache-based fit vs analytic truncated fit.
/// Periodic kernel only.
BoundReport theorem2_bounds(const BoundContext& ctx, const FitResult& truncated,
                            const FitResult& cached, const TruncatedEigenBasis& analytic,
                            const TruncatedEigenBasis& approx, const FitResult* exact = nullptr,
                            int nodes = kDefaultQuadratureNodes);

nlohmann::json bound_report_to_json(const BoundReport& report);

/// Validity sweep CSV (one row per instance).
std::string validity_csv_header();
std::string validity_csv_row(const std::string& label, std::uint64_t seed,
                             const BoundReport& report);

/// Composite trapezoid nodes and weights on [0, 1].
void trapezoid_rule(int nodes, std::vector<double>& x, Eigen::VectorXd& w);

}  // namespace eigenspline
