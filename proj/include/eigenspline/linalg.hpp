#pragma once

#include <string>

#include <Eigen/Dense>

namespace eigenspline::linalg {

/// Eigenpairs of a symmetric matrix, eigenvalues non-increasing.
struct SymEig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns
};

/// Full symmetric eigendecomposition: LAPACK dsyevd from OpenBLAS, loaded at
/// first use and accepted after a self-check, else Eigen's solver. Only the lower
/// triangle of `a` is read. Throws NumericalError on non-convergence or
/// non-finite input. Eigenvector signs are normalized so the entry of largest
/// magnitude is positive, which makes results reproducible across calls.
SymEig sym_eig(const Eigen::MatrixXd& a, bool want_vectors = true);

/// "openblas:<core>" or "eigen". EIGENSPLINE_EIGEN_BACKEND=eigen forces Eigen.
const std::string& eig_backend_name();

/// Eigenvalues only, non-increasing.
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a);

/// Thin Householder factors of a tall full-rank matrix T (n x p):
/// T = Q1 R with Q1 orthonormal columns.
struct ThinQR {
  Eigen::MatrixXd q1;  // n x p
  Eigen::MatrixXd r;   // p x p upper triangular
};
ThinQR thin_qr(const Eigen::MatrixXd& t);

/// (I - Q1 Q1^T) a for a thin orthonormal Q1.
Eigen::MatrixXd project_out(const Eigen::MatrixXd& q1, const Eigen::MatrixXd& a);
Eigen::VectorXd project_out(const Eigen::MatrixXd& q1, const Eigen::VectorXd& a);

}  // namespace eigenspline::linalg
