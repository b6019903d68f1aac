#include "eigenspline/gml.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "eigenspline/error.hpp"
#include "eigenspline/linalg.hpp"

namespace eigenspline {

std::vector<double> LambdaGrid::values() const {
  if (points < 2) throw ArgumentError("lambda grid needs at least 2 points");
  if (!(log10_max > log10_min)) throw ArgumentError("lambda grid: empty range");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double step = (log10_max - log10_min) / (points - 1);
  for (int i = 0; i < points; ++i) out[i] = std::pow(10.0, log10_min + step * i);
  return out;
}

GmlCriterion::GmlCriterion(Eigen::VectorXd mu, Eigen::VectorXd z_components2,
                           double residual2, int m, int n)
    : mu_(std::move(mu)),
      u2_(std::move(z_components2)),
      residual2_(std::max(residual2, 0.0)),
      m_(m),
      n_(n) {
  if (mu_.size() != u2_.size() || mu_.size() > m_) {
    throw ArgumentError("GmlCriterion: inconsistent spectral data");
  }
}

double GmlCriterion::log_value(double lambda) const {
  if (!(lambda > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double a = n_ * lambda;
  const double quad = (u2_.array() / (mu_.array() + a)).sum() + residual2_ / a;
  const double logdet = (mu_.array() + a).log().sum() +
                        static_cast<double>(m_ - mu_.size()) * std::log(a);
  return std::log(quad) + logdet / m_;
}

double GmlCriterion::operator()(double lambda) const { return std::exp(log_value(lambda)); }

GmlCriterion gml_criterion_dense(const Eigen::MatrixXd& t, const Eigen::MatrixXd& sigma,
                                 const Eigen::VectorXd& y) {
  const auto n = t.rows();
  const auto p = t.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(t);
  const auto hq = qr.householderQ();
  Eigen::MatrixXd a = sigma;
  a.applyOnTheLeft(hq.adjoint());
  a.applyOnTheRight(hq);
  const Eigen::VectorXd qty = hq.adjoint() * y;
  const auto m = n - p;
  const linalg::SymEig eig = linalg::sym_eig(a.bottomRightCorner(m, m));
  const Eigen::VectorXd u = eig.vectors.transpose() * qty.tail(m);
  return GmlCriterion(eig.values.cwiseMax(0.0), u.cwiseAbs2(), 0.0,
                      static_cast<int>(m), static_cast<int>(n));
}

GmlCriterion gml_criterion_lowrank(const Eigen::MatrixXd& t, const Eigen::MatrixXd& z,
                                   const Eigen::VectorXd& y) {
  const auto n = t.rows();
  const auto m = n - t.cols();
  const linalg::ThinQR qr = linalg::thin_qr(t);
  const Eigen::VectorXd yr = linalg::project_out(qr.q1, y);
  const double zz = yr.squaredNorm();
  if (z.cols() == 0) {
    return GmlCriterion(Eigen::VectorXd(), Eigen::VectorXd(), zz, static_cast<int>(m),
                        static_cast<int>(n));
  }
  const Eigen::MatrixXd w = linalg::project_out(qr.q1, z);
  const Eigen::MatrixXd wtw = w.transpose() * w;
  const linalg::SymEig eig = linalg::sym_eig(wtw);
  const Eigen::VectorXd proj = eig.vectors.transpose() * (w.transpose() * yr);

  const double floor = eig.values(0) > 0.0 ? 1e-12 * eig.values(0) : 0.0;
  int r = 0;
  while (r < eig.values.size() && eig.values(r) > floor) ++r;
  r = std::min<int>(r, static_cast<int>(m));
  Eigen::VectorXd mu = eig.values.head(r);
  Eigen::VectorXd u2 = proj.head(r).cwiseAbs2().cwiseQuotient(mu);
  const double residual = zz - u2.sum();
  return GmlCriterion(std::move(mu), std::move(u2), residual, static_cast<int>(m),
                      static_cast<int>(n));
}

GmlTrace gml_minimize(const GmlCriterion& criterion, const LambdaGrid& grid) {
  GmlTrace trace;
  trace.lambdas = grid.values();
  trace.criterion.reserve(trace.lambdas.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.lambdas.size(); ++i) {
    const double v = criterion.log_value(trace.lambdas[i]);
    trace.criterion.push_back(std::isfinite(v) ? std::exp(v)
                                               : std::numeric_limits<double>::quiet_NaN());
    if (std::isfinite(v) && v < best) {
      best = v;
      trace.grid_argmin = static_cast<int>(i);
    }
  }
  if (trace.grid_argmin < 0) {
    throw SelectionError("GML criterion is not finite at any of the " +
                         std::to_string(trace.lambdas.size()) + " grid points");
  }

  const int last = static_cast<int>(trace.lambdas.size()) - 1;
  double lo = std::log(trace.lambdas[std::max(trace.grid_argmin - 1, 0)]);
  double hi = std::log(trace.lambdas[std::min(trace.grid_argmin + 1, last)]);
  const double tol = std::log1p(grid.refine_rel_width);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double loglam) {
    const double v = criterion.log_value(std::exp(loglam));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = f(a);
  double fb = f(b);
  while (hi - lo > tol) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = f(b);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double fmid = f(mid);
  if (fmid < best) {
    trace.selected = std::exp(mid);
    trace.selected_criterion = std::exp(fmid);
  } else {
    trace.selected = trace.lambdas[trace.grid_argmin];
    trace.selected_criterion = std::exp(best);
  }
  return trace;
}

}  // namespace eigenspline
