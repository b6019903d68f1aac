#pragma once

#include <vector>

#include <Eigen/Dense>

namespace eigenspline {

/// Log-uniform lambda grid plus golden-section refinement tolerance.
struct LambdaGrid {
  double log10_min = -12.0;
  double log10_max = 0.0;
  int points = 61;
  /// Refinement stops once hi/lo - 1 falls below this.
  double refine_rel_width = 1e-3;

  std::vector<double> values() const;
};

struct GmlTrace {
  std::vector<double> lambdas;
  std::vector<double> criterion;  // GML(lambda) on the grid; NaN if not finite
  int grid_argmin = -1;
  double selected = 0.0;
  double selected_criterion = 0.0;
};

/// GML(lambda) = z^T M^{-1} z / det(M^{-1})^{1/m}, M = Q2^T S Q2 + n lambda I,
/// z = Q2^T y, m = n - p, held in spectral form: the positive eigenvalues mu_k
/// of Q2^T S Q2, the squared components of z along their eigenvectors, and
/// the squared norm of z in the complementary null space. Evaluation is O(r)
/// per lambda for r retained eigenvalues.
class GmlCriterion {
 public:
  GmlCriterion(Eigen::VectorXd mu, Eigen::VectorXd z_components2, double residual2,
               int m, int n);

  double log_value(double lambda) const;
  double operator()(double lambda) const;

  int dimension() const noexcept { return m_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return mu_; }

 private:
  Eigen::VectorXd mu_;
  Eigen::VectorXd u2_;
  double residual2_;
  int m_;
  int n_;
};

/// Dense route: S = Sigma (n x n).
GmlCriterion gml_criterion_dense(const Eigen::MatrixXd& t, const Eigen::MatrixXd& sigma,
                                 const Eigen::VectorXd& y);
/// Low-rank route: S = Z Z^T without forming it, O(n K^2).
GmlCriterion gml_criterion_lowrank(const Eigen::MatrixXd& t, const Eigen::MatrixXd& z,
                                   const Eigen::VectorXd& y);

/// Grid argmin followed by golden-section search (in log lambda) on the
/// bracketing interval. Throws SelectionError when no grid point is finite.
GmlTrace gml_minimize(const GmlCriterion& criterion, const LambdaGrid& grid);

}  // namespace eigenspline
