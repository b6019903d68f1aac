#include "eigenspline/linalg.hpp"

#include <dlfcn.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "eigenspline/error.hpp"

namespace eigenspline::linalg {

namespace {

// Fortran LAPACK entry point, resolved from OpenBLAS at first use.
using DsyevdFn = void (*)(const char* jobz, const char* uplo, const int* n, double* a,
                          const int* lda, double* w, double* work, const int* lwork, int* iwork,
                          const int* liwork, int* info);

struct Backend {
  DsyevdFn dsyevd = nullptr;
  std::string name = "eigen";
};

// OpenBLAS 0.3.20 picks its Cooperlake kernels on AVX512-BF16 parts and they
// return non-orthogonal eigenvectors, so the core type is pinned before the
// library is loaded. A user-set OPENBLAS_CORETYPE wins.
void pin_openblas_core() {
#if defined(__x86_64__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f")) {
    setenv("OPENBLAS_CORETYPE", "SkylakeX", 0);
  } else if (__builtin_cpu_supports("avx2")) {
    setenv("OPENBLAS_CORETYPE", "Haswell", 0);
  }
#endif
}

SymEig eigen_solver(const Eigen::MatrixXd& a, bool want_vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      a, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition did not converge (n = " +
                         std::to_string(a.rows()) + ")");
  }
  SymEig out;
  out.values = es.eigenvalues().reverse();
  if (want_vectors) out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

SymEig lapack_solver(DsyevdFn fn, const Eigen::MatrixXd& a, bool want_vectors) {
  const int n = static_cast<int>(a.rows());
  const char jobz = want_vectors ? 'V' : 'N';
  const char uplo = 'L';
  Eigen::MatrixXd work_a = a;
  Eigen::VectorXd w(n);
  int info = 0;
  int lwork = -1;
  int liwork = -1;
  double work_query = 0.0;
  int iwork_query = 0;
  fn(&jobz, &uplo, &n, work_a.data(), &n, w.data(), &work_query, &lwork, &iwork_query, &liwork,
     &info);
  if (info != 0) throw NumericalError("dsyevd workspace query failed");
  lwork = static_cast<int>(work_query);
  liwork = iwork_query;
  std::vector<double> work(static_cast<std::size_t>(std::max(lwork, 1)));
  std::vector<int> iwork(static_cast<std::size_t>(std::max(liwork, 1)));
  fn(&jobz, &uplo, &n, work_a.data(), &n, w.data(), work.data(), &lwork, iwork.data(), &liwork,
     &info);
  if (info != 0) {
    throw NumericalError("symmetric eigendecomposition failed (dsyevd info = " +
                         std::to_string(info) + ", n = " + std::to_string(n) +
                         ", |A|_F = " + std::to_string(a.norm()) + ")");
  }
  SymEig out;
  out.values = w.reverse();
  if (want_vectors) out.vectors = work_a.rowwise().reverse();
  return out;
}

// Accepts the library only if it decomposes a fixed matrix correctly.
bool self_check(DsyevdFn fn) {
  const int n = 160;
  Eigen::MatrixXd b(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) b(i, j) = std::sin(0.37 * (i + 1) * (j + 2) + 0.11 * i);
  }
  const Eigen::MatrixXd a = b * b.transpose();
  try {
    const SymEig e = lapack_solver(fn, a, true);
    const double orth =
        (e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(n, n)).norm();
    const double rec =
        (e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a).norm() / a.norm();
    return orth < 1e-10 && rec < 1e-10;
  } catch (const NumericalError&) {
    return false;
  }
}

Backend load_backend() {
  Backend backend;
  if (const char* force = std::getenv("EIGENSPLINE_EIGEN_BACKEND");
      force != nullptr && std::string(force) == "eigen") {
    return backend;
  }
  pin_openblas_core();
  void* handle = dlopen("libopenblas.so.0", RTLD_NOW | RTLD_LOCAL);
  if (handle == nullptr) return backend;
  auto fn = reinterpret_cast<DsyevdFn>(dlsym(handle, "dsyevd_"));
  if (fn == nullptr || !self_check(fn)) return backend;
  backend.dsyevd = fn;
  backend.name = "openblas";
  using CoreFn = char* (*)();
  if (auto core = reinterpret_cast<CoreFn>(dlsym(handle, "openblas_get_corename"))) {
    backend.name += std::string(":") + core();
  }
  return backend;
}

const Backend& backend() {
  static const Backend b = load_backend();
  return b;
}

SymEig run_sym_eig(const Eigen::MatrixXd& a, bool want_vectors) {
  if (a.rows() != a.cols()) throw ArgumentError("sym_eig: matrix not square");
  const auto n = a.rows();
  if (n == 0) return {};
  if (!a.allFinite()) throw NumericalError("sym_eig: matrix has non-finite entries");

  const Backend& be = backend();
  // Only the lower triangle is read; mirror it for the Eigen path.
  SymEig out = be.dsyevd != nullptr
                   ? lapack_solver(be.dsyevd, a, want_vectors)
                   : eigen_solver(a.selfadjointView<Eigen::Lower>(), want_vectors);
  if (want_vectors) {
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index imax = 0;
      out.vectors.col(k).cwiseAbs().maxCoeff(&imax);
      if (out.vectors(imax, k) < 0.0) out.vectors.col(k) *= -1.0;
    }
  }
  return out;
}

}  // namespace

SymEig sym_eig(const Eigen::MatrixXd& a, bool want_vectors) {
  return run_sym_eig(a, want_vectors);
}

const std::string& eig_backend_name() { return backend().name; }

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
  return run_sym_eig(a, false).values;
}

ThinQR thin_qr(const Eigen::MatrixXd& t) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(t);
  ThinQR out;
  out.q1 = qr.householderQ() * Eigen::MatrixXd::Identity(t.rows(), t.cols());
  out.r = qr.matrixQR().topRows(t.cols()).triangularView<Eigen::Upper>();
  return out;
}

Eigen::MatrixXd project_out(const Eigen::MatrixXd& q1, const Eigen::MatrixXd& a) {
  return a - q1 * (q1.transpose() * a);
}

Eigen::VectorXd project_out(const Eigen::MatrixXd& q1, const Eigen::VectorXd& a) {
  return a - q1 * (q1.transpose() * a);
}

}  // namespace eigenspline::linalg
