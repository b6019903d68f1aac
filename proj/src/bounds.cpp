#include "eigenspline/bounds.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "eigenspline/error.hpp"
#include "eigenspline/linalg.hpp"

namespace eigenspline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Observed errors are quadrature sums; allow rounding at the last few ulps
// when a bound is exactly zero.
bool within(double observed, double bound) {
  return observed <= bound * (1.0 + 1e-12) + 1e-24;
}

void check_same_problem(const FitResult& a, const FitResult& b, const DataSet& data) {
  const auto fp = data.fingerprint();
  if (a.data_fingerprint != fp || b.data_fingerprint != fp ||
      static_cast<std::size_t>(a.n) != data.size() || a.n != b.n) {
    throw ArgumentError("fits were computed on different data");
  }
}

void check_same_lambda(const FitResult& a, const FitResult& b) {
  if (a.lambda != b.lambda) {
    throw ArgumentError("fits use different lambda (" + std::to_string(a.lambda) + " vs " +
                        std::to_string(b.lambda) + ")");
  }
}

// Eigenvalues of Q2^T Z Z^T Q2 (length n - p) without forming it.
Eigen::VectorXd projected_lowrank_spectrum(const QRFactors& qr, const Eigen::MatrixXd& z) {
  const auto m = qr.q2.cols();
  const Eigen::MatrixXd w = qr.q2.transpose() * z;
  const Eigen::VectorXd vals = linalg::sym_eigenvalues(w.transpose() * w).cwiseMax(0.0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  const auto r = std::min<Eigen::Index>(m, vals.size());
  out.head(r) = vals.head(r);
  return out;
}

// Pieces every coefficient bound shares: zeta1, B-sums, lambda_max(A).
void fill_coefficient_part(const BoundContext& ctx, double lambda, BoundReport& r) {
  const auto n = static_cast<double>(ctx.data.size());
  const auto m = static_cast<double>(ctx.qr.q2.cols());
  r.n = static_cast<int>(ctx.data.size());
  r.p = ctx.kernel.null_dim();
  r.kernel = ctx.kernel.kind();
  r.lambda = lambda;
  r.lambda_max_a = ctx.lambda_max_a;
  r.zeta1 = m * m * m * ctx.q2y_norm2;
  const double q2f2 = ctx.qr.q2.squaredNorm();
  r.zeta1_direct = q2f2 * q2f2 * q2f2 * ctx.q2y_norm2;
  r.b = inverse_square_sum(r.lambda_ref, n * lambda);
  r.b_tilde = inverse_square_sum(r.lambda_approx, n * lambda);
}

double sigma_diff_fro2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).squaredNorm();
}

}  // namespace

void trapezoid_rule(int nodes, std::vector<double>& x, Eigen::VectorXd& w) {
  if (nodes < 2) throw ArgumentError("quadrature needs at least 2 nodes");
  x.resize(static_cast<std::size_t>(nodes));
  w.setConstant(nodes, 1.0 / (nodes - 1));
  for (int j = 0; j < nodes; ++j) x[j] = static_cast<double>(j) / (nodes - 1);
  x.back() = 1.0;
  w(0) *= 0.5;
  w(nodes - 1) *= 0.5;
}

ObservedErrors observed_errors(const FitResult& a, const FitResult& b, const DataSet& data,
                               int nodes) {
  check_same_problem(a, b, data);
  if (a.d.size() != b.d.size() || a.kernel != b.kernel) {
    throw ArgumentError("observed_errors: fits use different kernels");
  }
  std::vector<double> xg;
  Eigen::VectorXd wg;
  trapezoid_rule(nodes, xg, wg);
  const PredictParts pa = predict_parts(a, xg);
  const PredictParts pb = predict_parts(b, xg);
  const Eigen::ArrayXd d0 = (pa.null_part - pb.null_part).array();
  const Eigen::ArrayXd d1 = (pa.rk_part - pb.rk_part).array();
  ObservedErrors out;
  out.f0 = (wg.array() * d0.square()).sum();
  out.f1 = (wg.array() * d1.square()).sum();
  out.f = (wg.array() * (d0 + d1).square()).sum();
  out.d = (a.d - b.d).squaredNorm();
  out.c = (implied_representer_coefficients(a, data) - implied_representer_coefficients(b, data))
              .squaredNorm();
  return out;
}

SpectralSum inverse_square_sum(const Eigen::VectorXd& eigenvalues, double n_lambda) {
  SpectralSum s;
  const double top = eigenvalues.size() > 0 ? eigenvalues.maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    const double v = std::max(eigenvalues(k), 0.0);
    s.regularized += 1.0 / ((v + n_lambda) * (v + n_lambda));
    if (!(v > kModeFloor * top)) {
      s.literal = kInf;
    } else if (std::isfinite(s.literal)) {
      s.literal += 1.0 / (v * v);
    }
  }
  return s;
}

double lambda_max_a(const Eigen::MatrixXd& t) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 0.0)) throw DegenerateDesignError("T is rank deficient");
  return 1.0 / (smin * smin);
}

BoundContext make_bound_context(const DataSet& data, const Kernel& kernel) {
  data.validate(kernel);
  BoundContext ctx{data, kernel, gram_sigma(kernel, data.x), null_matrix(kernel, data.x),
                   {}, {}, 0.0, 0.0};
  ctx.qr = qr_factors(ctx.t);
  const Eigen::MatrixXd g = ctx.qr.q2.transpose() * ctx.sigma * ctx.qr.q2;
  ctx.lambda_n = linalg::sym_eigenvalues(g).cwiseMax(0.0);
  ctx.lambda_max_a = lambda_max_a(ctx.t);
  ctx.q2y_norm2 = (ctx.qr.q2.transpose() * data.y_vec()).squaredNorm();
  return ctx;
}

double periodic_tail_sum(int K) {
  if (K < 0) throw ArgumentError("periodic_tail_sum: K < 0");
  // Modes 0..K-1 cover frequencies 1..floor(K/2) fully; odd K adds the
  // cosine of frequency (K+1)/2, leaving its sine in the tail.
  const double scale = std::pow(2.0 * std::numbers::pi, -8.0);
  gsl_sf_result res;
  const auto old = gsl_set_error_handler_off();
  double value = 0.0;
  const int first_pair = K / 2 + 1 + (K % 2);
  const int status = gsl_sf_hzeta_e(8.0, static_cast<double>(first_pair), &res);
  gsl_set_error_handler(old);
  if (status != GSL_SUCCESS) throw NumericalError("Hurwitz zeta evaluation failed");
  value = 2.0 * scale * res.val;
  if (K % 2 == 1) value += scale * std::pow(static_cast<double>((K + 1) / 2), -8.0);
  return value;
}

TailSum tail_sum(const TruncatedEigenBasis& basis) {
  const int K = basis.rank();
  if (basis.is_analytic()) return {periodic_tail_sum(K), false};

  const EigenSystemCache& cache = *basis.cache();
  const int modes = cache.positive_modes();
  TailSum out;
  out.estimated = true;
  for (int k = K; k < modes; ++k) {
    const double v = cache.eigenvalue(k);
    out.value += v * v;
  }
  const int fit_from = std::max(0, modes - 10);
  double log_c = 0.0;
  for (int k = fit_from; k < modes; ++k) {
    log_c += std::log(cache.eigenvalue(k)) + 4.0 * std::log(static_cast<double>(k + 1));
  }
  log_c /= std::max(1, modes - fit_from);
  const double c = std::exp(log_c);
  gsl_sf_result res;
  const auto old = gsl_set_error_handler_off();
  const int status = gsl_sf_hzeta_e(8.0, static_cast<double>(std::max(modes, K) + 1), &res);
  gsl_set_error_handler(old);
  if (status != GSL_SUCCESS) throw NumericalError("Hurwitz zeta evaluation failed");
  out.value += c * c * res.val;
  return out;
}

BoundReport lemma1_bounds(const BoundContext& ctx, const FitResult& exact,
                          const FitResult& truncated, const Eigen::MatrixXd& sigma_tilde) {
  check_same_problem(exact, truncated, ctx.data);
  check_same_lambda(exact, truncated);
  if (exact.method != Method::all) throw ArgumentError("lemma1_bounds: first fit must be exact");
  BoundReport r;
  r.kind = BoundKind::lemma1;
  r.K = truncated.rank;
  r.lambda_ref = ctx.lambda_n;
  r.lambda_approx =
      linalg::sym_eigenvalues(ctx.qr.q2.transpose() * sigma_tilde * ctx.qr.q2).cwiseMax(0.0);
  fill_coefficient_part(ctx, exact.lambda, r);
  r.sigma_diff_fro2 = sigma_diff_fro2(sigma_tilde, ctx.sigma);
  r.sigma_tilde_fro2 = sigma_tilde.squaredNorm();
  r.c_norm2 = exact.coef.squaredNorm();
  const double bb = r.b.regularized * r.b_tilde.regularized;
  r.zeta2 = 2.0 * r.lambda_max_a * (r.zeta1 * bb * r.sigma_tilde_fro2 + r.c_norm2);
  r.bound_c = r.zeta1 * bb * r.sigma_diff_fro2;
  r.bound_d = r.zeta2 * r.sigma_diff_fro2;
  r.observed.c = (implied_representer_coefficients(truncated, ctx.data) - exact.coef).squaredNorm();
  r.observed.d = (truncated.d - exact.d).squaredNorm();
  r.chain_observed = r.chain_bound = kNaN;
  r.valid = within(r.observed.c, r.bound_c) && within(r.observed.d, r.bound_d);
  return r;
}

BoundReport theorem1_bounds(const BoundContext& ctx, const FitResult& exact,
                            const FitResult& truncated, const TruncatedEigenBasis& basis,
                            int nodes) {
  check_same_problem(exact, truncated, ctx.data);
  check_same_lambda(exact, truncated);
  if (exact.method != Method::all) throw ArgumentError("theorem1_bounds: first fit must be exact");
  if (basis.kernel() != ctx.kernel.kind()) {
    throw ArgumentError("theorem1_bounds: basis kernel differs from the data kernel");
  }
  const Eigen::MatrixXd z = basis.features(ctx.data.x);
  const Eigen::MatrixXd sigma_tilde = z * z.transpose();

  BoundReport r;
  r.kind = BoundKind::theorem1;
  r.K = basis.rank();
  r.lambda_ref = ctx.lambda_n;
  r.lambda_approx = projected_lowrank_spectrum(ctx.qr, z);
  fill_coefficient_part(ctx, exact.lambda, r);

  const Eigen::VectorXd& delta = basis.eigenvalues();
  r.c_k = delta.squaredNorm();
  const TailSum tail = tail_sum(basis);
  r.d_k = tail.value;
  r.d_k_estimated = tail.estimated;
  if (basis.is_analytic()) {
    r.kappa = std::numbers::sqrt2;
  } else {
    const EigenSystemCache& cache = *basis.cache();
    r.kappa = approx_eigenfunctions(cache, cache.positive_modes(), ctx.data.x)
                  .cwiseAbs()
                  .maxCoeff();
    r.kappa_empirical = true;
  }

  const double n = r.n;
  r.sigma_diff_fro2 = sigma_diff_fro2(sigma_tilde, ctx.sigma);
  r.sigma_tilde_fro2 = (z.transpose() * z).squaredNorm();
  r.c_norm2 = exact.coef.squaredNorm();
  const double bb = r.b.regularized * r.b_tilde.regularized;
  const double k2 = r.kappa * r.kappa;
  r.zeta2 = 2.0 * r.lambda_max_a * (r.zeta1 * bb * r.sigma_tilde_fro2 + r.c_norm2);
  r.zeta3 = n * k2 * r.c_k * r.zeta1 * bb;
  r.bound_c = r.zeta1 * bb * r.sigma_diff_fro2;
  r.bound_d = r.zeta2 * r.sigma_diff_fro2;
  const double tail_term = n * k2 * r.c_norm2 * r.d_k;
  r.bound_f0 = r.zeta2 * r.sigma_diff_fro2;
  r.bound_f1 = r.zeta3 * r.sigma_diff_fro2 + tail_term;
  r.bound_f = 2.0 * (r.zeta2 + r.zeta3) * r.sigma_diff_fro2 + 2.0 * tail_term;

  r.observed = observed_errors(truncated, exact, ctx.data, nodes);
  r.chain_observed = r.chain_bound = kNaN;
  r.valid = within(r.observed.c, r.bound_c) && within(r.observed.d, r.bound_d) &&
            within(r.observed.f0, r.bound_f0) && within(r.observed.f1, r.bound_f1) &&
            within(r.observed.f, r.bound_f);
  return r;
}

BoundReport theorem2_bounds(const BoundContext& ctx, const FitResult& truncated,
                            const FitResult& cached, const TruncatedEigenBasis& analytic,
                            const TruncatedEigenBasis& approx, const FitResult* exact,
                            int nodes) {
  if (ctx.kernel.kind() != KernelKind::periodic || !analytic.is_analytic()) {
    throw UnsupportedError("theorem2_bounds needs the analytic periodic eigensystem");
  }
  if (approx.is_analytic() || approx.kernel() != KernelKind::periodic) {
    throw ArgumentError("theorem2_bounds: second basis must come from a periodic cache");
  }
  if (analytic.rank() != approx.rank()) {
    throw ArgumentError("theorem2_bounds: analytic and cache bases differ in rank");
  }
  check_same_problem(truncated, cached, ctx.data);
  check_same_lambda(truncated, cached);

  const int K = analytic.rank();
  const auto& x = ctx.data.x;
  const Eigen::MatrixXd z_tilde = analytic.features(x);
  const Eigen::MatrixXd z_check = approx.features(x);

  BoundReport r;
  r.kind = BoundKind::theorem2;
  r.K = K;
  r.lambda_ref = projected_lowrank_spectrum(ctx.qr, z_tilde);
  r.lambda_approx = projected_lowrank_spectrum(ctx.qr, z_check);
  fill_coefficient_part(ctx, truncated.lambda, r);

  const Eigen::VectorXd& delta = analytic.eigenvalues();
  const Eigen::VectorXd& delta_check = approx.eigenvalues();
  r.c_k = delta.squaredNorm();
  r.c_k_prime = delta_check.squaredNorm();
  r.kappa = std::numbers::sqrt2;

  // Eigenfunctions on the quadrature grid and at the design points.
  std::vector<double> xg;
  Eigen::VectorXd wg;
  trapezoid_rule(nodes, xg, wg);
  Eigen::MatrixXd phi_g = analytic.eigenfunctions(xg);
  Eigen::MatrixXd phi_x = analytic.eigenfunctions(x);
  const Eigen::MatrixXd chk_g = approx.eigenfunctions(xg);
  const Eigen::MatrixXd chk_x = approx.eigenfunctions(x);
  r.kappa_prime = chk_x.cwiseAbs().maxCoeff();
  r.kappa_empirical = true;

  // Any orthonormal basis of an analytic eigenspace is an eigenbasis and
  // leaves Sigma-tilde unchanged; pick the one closest to the cache.
  for (const auto& [begin, end] : eigen_clusters(delta)) {
    const int len = end - begin;
    const Eigen::MatrixXd a =
        phi_g.middleCols(begin, len).transpose() * wg.asDiagonal() * chk_g.middleCols(begin, len);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
    phi_g.middleCols(begin, len) = phi_g.middleCols(begin, len) * rot;
    phi_x.middleCols(begin, len) = phi_x.middleCols(begin, len) * rot;

    const Eigen::MatrixXd gram =
        chk_g.middleCols(begin, len).transpose() * wg.asDiagonal() * chk_g.middleCols(begin, len);
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    EigenCluster cl{begin, end, 1.0, len > 1};
    if (llt.info() == Eigen::Success) {
      // Cosines of the principal angles between the two L2 subspaces.
      const Eigen::MatrixXd m =
          llt.matrixU().solve<Eigen::OnTheRight>(a);  // a U^{-1}
      const Eigen::VectorXd cosines = m.jacobiSvd().singularValues();
      const double cmin = std::min(1.0, cosines.minCoeff());
      cl.projection_distance = std::sqrt(std::max(0.0, 1.0 - cmin * cmin));
    }
    r.clusters.push_back(cl);
  }

  for (int k = 0; k < K; ++k) {
    const double dd = delta_check(k) - delta(k);
    r.eigenvalue_term += dd * dd;
    r.eigenfunction_term +=
        (wg.array() * (chk_g.col(k) - phi_g.col(k)).array().square()).sum();
    r.design_term += delta_check(k) * delta_check(k) * (chk_x.col(k) - phi_x.col(k)).squaredNorm();
  }

  const double n = r.n;
  r.sigma_diff_fro2 = sigma_diff_fro2(z_check * z_check.transpose(), z_tilde * z_tilde.transpose());
  r.sigma_tilde_fro2 = (z_tilde.transpose() * z_tilde).squaredNorm();
  const Eigen::VectorXd c_tilde = implied_representer_coefficients(truncated, ctx.data);
  const Eigen::VectorXd c_check = implied_representer_coefficients(cached, ctx.data);
  r.c_norm2 = c_tilde.squaredNorm();
  r.c_check_norm2 = c_check.squaredNorm();

  const double bb = r.b.regularized * r.b_tilde.regularized;
  const double k2 = r.kappa * r.kappa;
  r.zeta2 = 2.0 * r.lambda_max_a * (r.zeta1 * bb * r.sigma_tilde_fro2 + r.c_norm2);
  r.zeta3 = n * k2 * r.c_k * r.zeta1 * bb;
  r.zeta4 = r.c_check_norm2 * n * r.kappa_prime * r.kappa_prime * r.c_k_prime;
  r.bound_c = r.zeta1 * bb * r.sigma_diff_fro2;
  r.bound_d = r.zeta2 * r.sigma_diff_fro2;
  const double s = r.sigma_diff_fro2;
  r.bound_f0 = r.zeta2 * s;
  r.bound_f1 = 2.0 * r.zeta4 * r.eigenfunction_term + 6.0 * r.c_check_norm2 * r.design_term +
               6.0 * n * k2 * r.c_check_norm2 * r.eigenvalue_term + 6.0 * r.zeta3 * s;
  r.bound_f = 4.0 * r.zeta4 * r.eigenfunction_term + 12.0 * r.c_check_norm2 * r.design_term +
              12.0 * n * k2 * r.c_check_norm2 * r.eigenvalue_term +
              (12.0 * r.zeta3 + 2.0 * r.zeta2) * s;

  r.observed = observed_errors(cached, truncated, ctx.data, nodes);
  r.valid = within(r.observed.c, r.bound_c) && within(r.observed.d, r.bound_d) &&
            within(r.observed.f0, r.bound_f0) && within(r.observed.f1, r.bound_f1) &&
            within(r.observed.f, r.bound_f);

  r.chain_observed = r.chain_bound = kNaN;
  if (exact != nullptr) {
    const BoundReport t1 = theorem1_bounds(ctx, *exact, truncated, analytic, nodes);
    r.chain_observed = observed_errors(cached, *exact, ctx.data, nodes).f;
    r.chain_bound = 2.0 * r.bound_f + 2.0 * t1.bound_f;
  }
  return r;
}

namespace {

nlohmann::json spectral_json(const SpectralSum& s) {
  nlohmann::json j;
  j["regularized"] = s.regularized;
  j["literal"] = std::isfinite(s.literal) ? nlohmann::json(s.literal) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

std::string_view kind_name(BoundKind k) {
  switch (k) {
    case BoundKind::lemma1:
      return "lemma1";
    case BoundKind::theorem1:
      return "theorem1";
    case BoundKind::theorem2:
      return "theorem2";
  }
  return "unknown";
}

}  // namespace

nlohmann::json bound_report_to_json(const BoundReport& r) {
  using nlohmann::json;
  const bool t2 = r.kind == BoundKind::theorem2;
  json j;
  j["kind"] = std::string(kind_name(r.kind));
  j["kernel"] = std::string(to_string(r.kernel));
  j["n"] = r.n;
  j["p"] = r.p;
  j["K"] = r.K;
  j["lambda"] = r.lambda;
  j["zeta1"] = r.zeta1;
  j["zeta1_direct"] = r.zeta1_direct;
  j[t2 ? "zeta2_prime" : "zeta2"] = r.zeta2;
  if (r.kind != BoundKind::lemma1) j[t2 ? "zeta3_prime" : "zeta3"] = r.zeta3;
  if (t2) j["zeta4"] = r.zeta4;
  j["lambda_max_A"] = r.lambda_max_a;
  j[t2 ? "B_tilde" : "B"] = spectral_json(r.b);
  j[t2 ? "B_check" : "B_tilde"] = spectral_json(r.b_tilde);
  j[t2 ? "sigma_check_minus_tilde_fro2" : "sigma_tilde_minus_sigma_fro2"] = r.sigma_diff_fro2;
  j["sigma_tilde_fro2"] = r.sigma_tilde_fro2;
  j[t2 ? "c_tilde_norm2" : "c_norm2"] = r.c_norm2;
  j[t2 ? "lambda_tilde_kn" : "lambda_kn"] = vec_json(r.lambda_ref);
  j[t2 ? "lambda_check_kn" : "lambda_tilde_kn"] = vec_json(r.lambda_approx);
  if (r.kind != BoundKind::lemma1) {
    j["C_K"] = r.c_k;
    j["kappa"] = r.kappa;
    j["kappa_empirical"] = r.kappa_empirical && !t2;
  }
  if (r.kind == BoundKind::theorem1) {
    j["D_K"] = r.d_k;
    j["D_K_estimated"] = r.d_k_estimated;
  }
  if (t2) {
    j["C_K_prime"] = r.c_k_prime;
    j["kappa_prime"] = r.kappa_prime;
    j["kappa_prime_empirical"] = true;
    j["c_check_norm2"] = r.c_check_norm2;
    j["eigenvalue_term"] = r.eigenvalue_term;
    j["eigenfunction_term"] = r.eigenfunction_term;
    j["design_term"] = r.design_term;
    json clusters = json::array();
    for (const auto& c : r.clusters) {
      clusters.push_back({{"begin", c.begin},
                          {"end", c.end},
                          {"degenerate", c.degenerate},
                          {"projection_distance", c.projection_distance}});
    }
    j["clusters"] = std::move(clusters);
    if (std::isfinite(r.chain_bound)) {
      j["chain_observed"] = r.chain_observed;
      j["chain_bound"] = r.chain_bound;
    }
  }
  j["bound_c"] = r.bound_c;
  j["bound_d"] = r.bound_d;
  j["observed_c"] = r.observed.c;
  j["observed_d"] = r.observed.d;
  if (r.kind != BoundKind::lemma1) {
    j["bound_f0"] = r.bound_f0;
    j["bound_f1"] = r.bound_f1;
    j["bound_f"] = r.bound_f;
    j["observed_f0"] = r.observed.f0;
    j["observed_f1"] = r.observed.f1;
    j["observed_f"] = r.observed.f;
  }
  j["valid"] = r.valid;
  return j;
}

std::string validity_csv_header() {
  return "label,kind,seed,n,K,lambda,observed_f0,bound_f0,observed_f1,bound_f1,observed_f,"
         "bound_f,valid\n";
}

std::string validity_csv_row(const std::string& label, std::uint64_t seed,
                             const BoundReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << label << ',' << kind_name(r.kind) << ',' << seed << ',' << r.n << ',' << r.K << ','
     << r.lambda << ',' << r.observed.f0 << ',' << r.bound_f0 << ',' << r.observed.f1 << ','
     << r.bound_f1 << ',' << r.observed.f << ',' << r.bound_f << ',' << (r.valid ? 1 : 0)
     << '\n';
  return os.str();
}

}  // namespace eigenspline
