#include "eigenspline/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigenspline/error.hpp"
#include "eigenspline/linalg.hpp"
#include "eigenspline/rng.hpp"

namespace eigenspline {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::all:
      return "all";
    case Method::eigen:
      return "eigen";
    case Method::nystrom:
      return "nystrom";
    case Method::rsr:
      return "rsr";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "all") return Method::all;
  if (name == "eigen") return Method::eigen;
  if (name == "nystrom") return Method::nystrom;
  if (name == "rsr") return Method::rsr;
  throw ArgumentError("unknown method '" + std::string(name) +
                      "' (expected all, eigen, nystrom or rsr)");
}

QRFactors qr_factors(const Eigen::MatrixXd& t) {
  const auto n = t.rows();
  const auto p = t.cols();
  if (n < p) throw ArgumentError("qr_factors: more columns than rows");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(t);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  QRFactors out;
  out.q1 = q.leftCols(p);
  out.q2 = q.rightCols(n - p);
  out.r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  return out;
}

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("lambda must be positive and finite (got " +
                        std::to_string(lambda) + ")");
  }
}

// Householder Q of T kept in factored form: O(n p) per vector application.
struct NullQR {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr;
  Eigen::Index n;
  Eigen::Index p;

  explicit NullQR(const Eigen::MatrixXd& t) : qr(t), n(t.rows()), p(t.cols()) {}

  Eigen::VectorXd qt(const Eigen::VectorXd& v) const { return qr.householderQ().adjoint() * v; }
  /// Q (0; w): lifts a vector of length n - p into range(Q2).
  Eigen::VectorXd q2(const Eigen::VectorXd& w) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    full.tail(n - p) = w;
    return qr.householderQ() * full;
  }
  /// Q^T S Q for symmetric S.
  Eigen::MatrixXd rotate(const Eigen::MatrixXd& s) const {
    Eigen::MatrixXd a = s;
    a.applyOnTheLeft(qr.householderQ().adjoint());
    a.applyOnTheRight(qr.householderQ());
    return a;
  }
  /// R^{-1} Q1^T v.
  Eigen::VectorXd solve_null(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd w = qt(v).head(p);
    return qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>().solve(w);
  }
};

std::vector<double> gather(const std::vector<double>& x, const std::vector<int>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) out[j] = x[static_cast<std::size_t>(idx[j])];
  return out;
}

FitResult exact_result(const DataSet& data, const Kernel& kernel, double lambda,
                       Eigen::VectorXd c, Eigen::VectorXd d, const Eigen::MatrixXd& sigma,
                       const Eigen::MatrixXd& t) {
  FitResult fit;
  fit.method = Method::all;
  fit.kernel = kernel.kind();
  fit.lambda = lambda;
  fit.n = static_cast<int>(data.size());
  fit.rank = fit.n;
  fit.fitted = t * d + sigma * c;
  fit.d = std::move(d);
  fit.coef = std::move(c);
  fit.basis = RepresenterBasis{data.x, {}};
  fit.data_fingerprint = data.fingerprint();
  return fit;
}

}  // namespace

FitResult fit_exact(const DataSet& data, const Kernel& kernel, double lambda) {
  data.validate(kernel);
  check_lambda(lambda);
  const Eigen::MatrixXd t = null_matrix(kernel, data.x);
  const Eigen::MatrixXd sigma = gram_sigma(kernel, data.x);
  const NullQR qr(t);
  const auto n = qr.n;
  const auto m = n - qr.p;
  const double nl = static_cast<double>(n) * lambda;

  Eigen::MatrixXd g = qr.rotate(sigma).bottomRightCorner(m, m);
  g.diagonal().array() += nl;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("fit_exact: Q2'(Sigma + n lambda I)Q2 is not positive definite "
                         "(lambda = " + std::to_string(lambda) + ")");
  }
  const Eigen::VectorXd y = data.y_vec();
  const Eigen::VectorXd z = qr.qt(y).tail(m);
  Eigen::VectorXd c = qr.q2(llt.solve(z));
  Eigen::VectorXd d = qr.solve_null(y - sigma * c - nl * c);
  return exact_result(data, kernel, lambda, std::move(c), std::move(d), sigma, t);
}

ExactSolver::ExactSolver(const DataSet& data, const Kernel& kernel)
    : kernel_(kernel), x_(data.x), y_(data.y_vec()), fingerprint_(data.fingerprint()) {
  data.validate(kernel);
  t_ = null_matrix(kernel, data.x);
  sigma_ = gram_sigma(kernel, data.x);
  qr_ = qr_factors(t_);
  const Eigen::MatrixXd s2 = qr_.q2.transpose() * sigma_ * qr_.q2;
  linalg::SymEig eig = linalg::sym_eig(0.5 * (s2 + s2.transpose()));
  mu_ = eig.values.cwiseMax(0.0);
  u_ = std::move(eig.vectors);
  z_rot_ = u_.transpose() * qr_.q2.transpose() * y_;
}

GmlCriterion ExactSolver::gml() const {
  return GmlCriterion(mu_, z_rot_.cwiseAbs2(), 0.0, static_cast<int>(mu_.size()),
                      static_cast<int>(y_.size()));
}

FitResult ExactSolver::fit(double lambda) const {
  check_lambda(lambda);
  const double nl = static_cast<double>(y_.size()) * lambda;
  const Eigen::VectorXd w = z_rot_.array() / (mu_.array() + nl);
  Eigen::VectorXd c = qr_.q2 * (u_ * w);
  const Eigen::VectorXd rhs = qr_.q1.transpose() * (y_ - sigma_ * c - nl * c);
  Eigen::VectorXd d = qr_.r.triangularView<Eigen::Upper>().solve(rhs);
  DataSet data{x_, std::vector<double>(y_.data(), y_.data() + y_.size())};
  return exact_result(data, kernel_, lambda, std::move(c), std::move(d), sigma_, t_);
}

namespace {

constexpr Eigen::Index kQrBlock = 1024;

// Least squares for the stacked system [T Z; 0 sqrt(nl) I] (d; b) = (y; 0).
// Householder QR of [A | rhs] is taken one row block at a time; only the
// (p+k+1)-row upper triangle is carried between blocks, and its last column
// holds Q^T rhs.
Eigen::VectorXd stacked_qr_solve(const Eigen::MatrixXd& t, const Eigen::MatrixXd& z,
                                 const Eigen::VectorXd& y, double nl) {
  const Eigen::Index n = t.rows();
  const Eigen::Index p = t.cols();
  const Eigen::Index k = z.cols();
  const Eigen::Index c = p + k;
  Eigen::MatrixXd work(c + 1 + kQrBlock, c + 1);
  Eigen::Index carried = 0;
  auto absorb = [&](Eigen::Index rows) {
    const Eigen::Index m = carried + rows;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(work.topRows(m));
    carried = std::min(m, c + 1);
    work.topRows(carried) = qr.matrixQR().topRows(carried).triangularView<Eigen::Upper>();
  };
  for (Eigen::Index b = 0; b < n; b += kQrBlock) {
    const Eigen::Index m = std::min(kQrBlock, n - b);
    work.block(carried, 0, m, p) = t.middleRows(b, m);
    work.block(carried, p, m, k) = z.middleRows(b, m);
    work.block(carried, c, m, 1) = y.segment(b, m);
    absorb(m);
  }
  const double root = std::sqrt(nl);
  for (Eigen::Index b = 0; b < k; b += kQrBlock) {
    const Eigen::Index m = std::min(kQrBlock, k - b);
    work.middleRows(carried, m).setZero();
    for (Eigen::Index i = 0; i < m; ++i) work(carried + i, p + b + i) = root;
    absorb(m);
  }
  if (carried < c) throw NumericalError("fit_lowrank: stacked system is rank deficient");
  return work.topLeftCorner(c, c).triangularView<Eigen::Upper>().solve(work.col(c).head(c));
}

}  // namespace

FitResult fit_lowrank(const DataSet& data, const Eigen::MatrixXd& t,
                      const Eigen::MatrixXd& z, double lambda) {
  check_lambda(lambda);
  const auto n = t.rows();
  const auto p = t.cols();
  const auto k = z.cols();
  if (static_cast<std::size_t>(n) != data.size() || z.rows() != n) {
    throw ArgumentError("fit_lowrank: T, Z and data disagree on n");
  }
  const double nl = static_cast<double>(n) * lambda;
  const Eigen::VectorXd y = data.y_vec();

  // [T Z]^T [T Z] by blocks; the n x (p+k) concatenation is never formed.
  Eigen::MatrixXd g(p + k, p + k);
  g.topLeftCorner(p, p).noalias() = t.transpose() * t;
  g.topRightCorner(p, k).noalias() = t.transpose() * z;
  g.bottomLeftCorner(k, p) = g.topRightCorner(p, k).transpose();
  g.bottomRightCorner(k, k).noalias() = z.transpose() * z;
  g.diagonal().tail(k).array() += nl;
  Eigen::VectorXd rhs(p + k);
  rhs.head(p).noalias() = t.transpose() * y;
  rhs.tail(k).noalias() = z.transpose() * y;

  Eigen::VectorXd sol;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  const bool normal_ok = llt.info() == Eigen::Success && llt.rcond() > 1e-8;
  if (normal_ok) {
    sol = llt.solve(rhs);
  } else {
    sol = stacked_qr_solve(t, z, y, nl);
  }
  if (!sol.allFinite()) throw NumericalError("fit_lowrank: non-finite solution");

  FitResult fit;
  fit.lambda = lambda;
  fit.n = static_cast<int>(n);
  fit.rank = static_cast<int>(k);
  fit.d = sol.head(p);
  fit.coef = sol.tail(k);
  fit.fitted.noalias() = t * fit.d;
  fit.fitted.noalias() += z * fit.coef;
  fit.data_fingerprint = data.fingerprint();
  return fit;
}

NystromFeatures nystrom_features(const DataSet& data, const Kernel& kernel, int K,
                                 std::uint64_t seed, std::uint64_t stream) {
  const int n = static_cast<int>(data.size());
  if (K < 1 || K > n) {
    throw ArgumentError("nystrom_features: K = " + std::to_string(K) +
                        " outside [1, n = " + std::to_string(n) + "]");
  }
  NystromFeatures out;
  out.indices = sample_without_replacement(n, K, seed, stream);
  const std::vector<double> pts = gather(data.x, out.indices);
  const Eigen::MatrixXd c = cross_gram(kernel, data.x, pts);
  const Eigen::MatrixXd w = gram_sigma(kernel, pts);
  const linalg::SymEig eig = linalg::sym_eig(w);
  const double floor = 1e-10 * std::max(eig.values(0), 0.0);
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(K);
  for (int j = 0; j < K; ++j) {
    if (eig.values(j) > floor) inv_sqrt(j) = 1.0 / std::sqrt(eig.values(j));
  }
  out.w_inv_sqrt = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
  out.z = c * out.w_inv_sqrt;
  return out;
}

NystromFeatures nystrom_features(const DataSet& data, const Kernel& kernel, int K,
                                 std::uint64_t seed) {
  return nystrom_features(data, kernel, K, seed, 0);
}

namespace {

FitResult finish_eigen(FitResult fit, const Kernel& kernel, const TruncatedEigenBasis& basis,
                       std::string cache_path) {
  fit.method = Method::eigen;
  fit.kernel = kernel.kind();
  fit.basis = EigenBasisRef{basis, std::move(cache_path)};
  return fit;
}

FitResult finish_nystrom(FitResult fit, const Kernel& kernel, const DataSet& data,
                         NystromFeatures&& feats) {
  fit.method = Method::nystrom;
  fit.kernel = kernel.kind();
  NystromBasis nb;
  nb.points = gather(data.x, feats.indices);
  nb.indices = std::move(feats.indices);
  nb.w_inv_sqrt = std::move(feats.w_inv_sqrt);
  fit.basis = std::move(nb);
  return fit;
}

void check_basis_kernel(const Kernel& kernel, const TruncatedEigenBasis& basis) {
  if (basis.kernel() != kernel.kind()) {
    throw ArgumentError("eigenbasis built for the " + std::string(to_string(basis.kernel())) +
                        " kernel, fit requested with " + std::string(kernel.name()));
  }
}

// Reparametrized RSR: with Sigma_qq = L L^T and c = L^{-T} e the penalty
// c^T Sigma_qq c becomes ||e||^2, so the problem is a ridge fit on F = C L^{-T}.
struct RsrFeatures {
  Eigen::MatrixXd f;
  Eigen::MatrixXd l;  // lower Cholesky factor of (possibly jittered) Sigma_qq
  std::vector<int> indices;
};

RsrFeatures rsr_features(const DataSet& data, const Kernel& kernel, int q,
                         std::uint64_t seed, std::uint64_t stream) {
  const int n = static_cast<int>(data.size());
  const int p = kernel.null_dim();
  if (q <= p || q > n) {
    throw ArgumentError("fit_rsr: q = " + std::to_string(q) + " outside (p = " +
                        std::to_string(p) + ", n = " + std::to_string(n) + "]");
  }
  RsrFeatures out;
  out.indices = sample_without_replacement(n, q, seed, stream);
  const std::vector<double> pts = gather(data.x, out.indices);
  const Eigen::MatrixXd c = cross_gram(kernel, data.x, pts);
  Eigen::MatrixXd sqq = gram_sigma(kernel, pts);
  Eigen::LLT<Eigen::MatrixXd> llt(sqq);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * sqq.trace() / q;
    sqq.diagonal().array() += jitter;
    llt.compute(sqq);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("fit_rsr: Sigma_qq not positive definite after jitter " +
                           std::to_string(jitter));
    }
  }
  out.l = llt.matrixL();
  // F^T = L^{-1} C^T.
  out.f = llt.matrixL().solve(c.transpose()).transpose();
  return out;
}

FitResult finish_rsr(FitResult fit, const Kernel& kernel, const DataSet& data,
                     RsrFeatures&& feats) {
  fit.method = Method::rsr;
  fit.kernel = kernel.kind();
  fit.coef = feats.l.transpose().triangularView<Eigen::Upper>().solve(fit.coef);
  fit.basis = RepresenterBasis{gather(data.x, feats.indices), feats.indices};
  return fit;
}

}  // namespace

FitResult fit_eigen(const DataSet& data, const Kernel& kernel,
                    const TruncatedEigenBasis& basis, double lambda) {
  data.validate(kernel);
  check_basis_kernel(kernel, basis);
  const Eigen::MatrixXd t = null_matrix(kernel, data.x);
  return finish_eigen(fit_lowrank(data, t, basis.features(data.x), lambda), kernel, basis,
                      "");
}

FitResult fit_nystrom(const DataSet& data, const Kernel& kernel, int K, double lambda,
                      std::uint64_t seed) {
  data.validate(kernel);
  const Eigen::MatrixXd t = null_matrix(kernel, data.x);
  NystromFeatures feats = nystrom_features(data, kernel, K, seed);
  FitResult fit = fit_lowrank(data, t, feats.z, lambda);
  return finish_nystrom(std::move(fit), kernel, data, std::move(feats));
}

FitResult fit_rsr(const DataSet& data, const Kernel& kernel, int q, double lambda,
                  std::uint64_t seed) {
  data.validate(kernel);
  const Eigen::MatrixXd t = null_matrix(kernel, data.x);
  RsrFeatures feats = rsr_features(data, kernel, q, seed, 0);
  FitResult fit = fit_lowrank(data, t, feats.f, lambda);
  return finish_rsr(std::move(fit), kernel, data, std::move(feats));
}

namespace {

FitResult lowrank_with_lambda(const DataSet& data, const Eigen::MatrixXd& t,
                              const Eigen::MatrixXd& z, const LambdaChoice& choice) {
  if (choice.fixed) return fit_lowrank(data, t, z, *choice.fixed);
  GmlTrace trace = gml_minimize(gml_criterion_lowrank(t, z, data.y_vec()), choice.grid);
  FitResult fit = fit_lowrank(data, t, z, trace.selected);
  fit.gml = std::move(trace);
  return fit;
}

}  // namespace

FitResult fit(const DataSet& data, const Kernel& kernel, const MethodConfig& config,
              const LambdaChoice& lambda) {
  data.validate(kernel);
  switch (config.method) {
    case Method::all: {
      if (lambda.fixed) return fit_exact(data, kernel, *lambda.fixed);
      const ExactSolver solver(data, kernel);
      GmlTrace trace = gml_minimize(solver.gml(), lambda.grid);
      FitResult fit = solver.fit(trace.selected);
      fit.gml = std::move(trace);
      return fit;
    }
    case Method::eigen: {
      const TruncatedEigenBasis basis =
          config.analytic ? analytic_eigensystem(kernel, config.rank)
          : config.cache  ? TruncatedEigenBasis::from_cache(config.cache, config.rank)
                          : throw ArgumentError("eigen method needs a cache or analytic basis");
      check_basis_kernel(kernel, basis);
      const Eigen::MatrixXd t = null_matrix(kernel, data.x);
      return finish_eigen(lowrank_with_lambda(data, t, basis.features(data.x), lambda),
                          kernel, basis, config.cache_path);
    }
    case Method::nystrom: {
      const Eigen::MatrixXd t = null_matrix(kernel, data.x);
      NystromFeatures feats =
          nystrom_features(data, kernel, config.rank, config.seed, config.stream);
      FitResult fit = lowrank_with_lambda(data, t, feats.z, lambda);
      return finish_nystrom(std::move(fit), kernel, data, std::move(feats));
    }
    case Method::rsr: {
      const Eigen::MatrixXd t = null_matrix(kernel, data.x);
      RsrFeatures feats = rsr_features(data, kernel, config.rank, config.seed, config.stream);
      FitResult fit = lowrank_with_lambda(data, t, feats.f, lambda);
      return finish_rsr(std::move(fit), kernel, data, std::move(feats));
    }
  }
  throw ArgumentError("unknown method");
}

namespace {

constexpr std::size_t kPredictBlock = 512;

void check_payload(const FitResult& fit) {
  const Kernel kernel(fit.kernel);
  if (fit.d.size() != kernel.null_dim()) {
    throw InvalidFitError("fit has " + std::to_string(fit.d.size()) +
                          " null-space coefficients, kernel needs " +
                          std::to_string(kernel.null_dim()));
  }
  const auto expect = std::visit(
      [](const auto& b) -> Eigen::Index {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, std::monostate>) {
          throw InvalidFitError("fit has no basis handle; cannot predict");
        } else if constexpr (std::is_same_v<B, EigenBasisRef>) {
          return b.basis.rank();
        } else {
          return static_cast<Eigen::Index>(b.points.size());
        }
      },
      fit.basis);
  if (fit.coef.size() != expect) {
    throw InvalidFitError("coefficient length " + std::to_string(fit.coef.size()) +
                          " does not match the basis size " + std::to_string(expect));
  }
}

}  // namespace

PredictParts predict_parts(const FitResult& fit, std::span<const double> xs) {
  check_payload(fit);
  check_domain(xs, "x");
  const Kernel kernel(fit.kernel);
  const auto m = static_cast<Eigen::Index>(xs.size());
  PredictParts out;
  out.null_part = null_rows(kernel, xs) * fit.d;
  out.rk_part.resize(m);

  // Coefficients against kernel rows at `points`, when the basis is one.
  const std::vector<double>* points = nullptr;
  Eigen::VectorXd weights;
  if (const auto* rb = std::get_if<RepresenterBasis>(&fit.basis)) {
    points = &rb->points;
    weights = fit.coef;
  } else if (const auto* nb = std::get_if<NystromBasis>(&fit.basis)) {
    points = &nb->points;
    weights = nb->w_inv_sqrt * fit.coef;
  }

  for (std::size_t start = 0; start < xs.size(); start += kPredictBlock) {
    const std::size_t len = std::min(kPredictBlock, xs.size() - start);
    const auto block = xs.subspan(start, len);
    const auto rows = static_cast<Eigen::Index>(len);
    if (points != nullptr) {
      out.rk_part.segment(static_cast<Eigen::Index>(start), rows) =
          cross_gram(kernel, block, *points) * weights;
    } else {
      const auto& eb = std::get<EigenBasisRef>(fit.basis);
      out.rk_part.segment(static_cast<Eigen::Index>(start), rows) =
          eb.basis.features(block) * fit.coef;
    }
  }
  return out;
}

Eigen::VectorXd predict(const FitResult& fit, std::span<const double> xs) {
  return predict_parts(fit, xs).total();
}

Eigen::VectorXd implied_representer_coefficients(const FitResult& fit,
                                                 const DataSet& data) {
  if (static_cast<std::size_t>(fit.n) != data.size() ||
      fit.data_fingerprint != data.fingerprint()) {
    throw ArgumentError("implied_representer_coefficients: fit was computed on other data");
  }
  if (fit.method == Method::all) return fit.coef;
  return (data.y_vec() - fit.fitted) / (static_cast<double>(fit.n) * fit.lambda);
}

}  // namespace eigenspline
