#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace eigenspline {

enum class KernelKind : std::uint32_t { cubic = 1, periodic = 2 };

std::string_view to_string(KernelKind kind);
/// Accepts "cubic" or "periodic"; throws ArgumentError otherwise.
KernelKind parse_kernel_kind(std::string_view name);

namespace detail {

// Closed forms used by every evaluation path. k4(t) = ((t(1-t))^2 - 1/30)/24
// is the factored B_4(t)/4!.
inline double k2_poly(double x) noexcept {
  const double u = x - 0.5;
  return 0.5 * (u * u - 1.0 / 12.0);
}
inline double k4_poly(double t) noexcept {
  const double w = t - t * t;
  return (w * w - 1.0 / 30.0) * (1.0 / 24.0);
}
inline double rk_cubic(double x, double z) noexcept {
  return k2_poly(x) * k2_poly(z) - k4_poly(std::fabs(x - z));
}
inline double rk_periodic(double x, double z) noexcept {
  double t = x - z;
  t -= std::floor(t);
  return -k4_poly(t);
}

}  // namespace detail

/// Reproducing kernel R1 of the penalized subspace plus the null-space basis
/// of the unpenalized subspace, for Sobolev order m = 2 on [0, 1].
///
/// cubic:    R1(x,z) = k2(x)k2(z) - k4(|x-z|),  null basis {1, k1}.
/// periodic: R1(x,z) = -k4(frac(x-z)),          null basis {1}.
class Kernel {
 public:
  explicit Kernel(KernelKind kind) noexcept : kind_(kind) {}
  static Kernel cubic() noexcept { return Kernel(KernelKind::cubic); }
  static Kernel periodic() noexcept { return Kernel(KernelKind::periodic); }

  KernelKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }
  int sobolev_order() const noexcept { return 2; }
  int null_dim() const noexcept { return kind_ == KernelKind::cubic ? 2 : 1; }

  /// Unchecked R1(x, z).
  double rk(double x, double z) const noexcept {
    return kind_ == KernelKind::cubic ? detail::rk_cubic(x, z)
                                      : detail::rk_periodic(x, z);
  }

  /// Unchecked phi_nu(x), nu in [0, null_dim()).
  double null_basis(int nu, double x) const noexcept {
    return nu == 0 ? 1.0 : x - 0.5;
  }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  KernelKind kind_;
};

/// R1(x, z) with domain checks.
double rk_eval(const Kernel& kernel, double x, double z);

/// Dense Gram matrix {R1(x_i, x_j)}; the upper triangle is mirrored from the
/// lower one so the result is bit-exactly symmetric.
Eigen::MatrixXd gram_sigma(const Kernel& kernel, std::span<const double> xs);

/// {R1(x_i, z_j)} of size |xs| x |zs|.
Eigen::MatrixXd cross_gram(const Kernel& kernel, std::span<const double> xs,
                           std::span<const double> zs);

/// T = {phi_nu(x_i)} with n >= p and a full-column-rank check.
Eigen::MatrixXd null_matrix(const Kernel& kernel, std::span<const double> xs);

/// Null-space basis rows without the rank check (prediction points).
Eigen::MatrixXd null_rows(const Kernel& kernel, std::span<const double> xs);

/// Throws ArgumentError if any point lies outside [0, 1] or is not finite.
void check_domain(std::span<const double> xs, std::string_view what);

struct DataSet {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return x.size(); }
  Eigen::Map<const Eigen::VectorXd> y_vec() const {
    return {y.data(), static_cast<Eigen::Index>(y.size())};
  }
  /// Equal lengths, x in [0, 1], n > p.
  void validate(const Kernel& kernel) const;
  /// FNV-1a over the raw bytes of x and y; identifies the data a fit used.
  std::uint64_t fingerprint() const noexcept;
};

}  // namespace eigenspline
