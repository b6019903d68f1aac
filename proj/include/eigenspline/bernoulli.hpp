#pragma once

#include <array>
#include <span>

namespace eigenspline {

/// Scaled Bernoulli polynomial k_r(x) = B_r(x) / r! on [0, 1].
///
/// Coefficients are stored as an explicit monomial table (lowest degree
/// first) and evaluated with Horner's scheme. Orders 0..4 are available,
/// which covers the null space and reproducing kernel of the cubic spline.
class BernoulliScaled {
 public:
  static constexpr int kMaxOrder = 4;

  /// Throws ArgumentError for orders outside [0, kMaxOrder].
  static BernoulliScaled of(int order);

  int order() const noexcept { return order_; }
  std::span<const double> coefficients() const noexcept {
    return {coeffs_.data(), static_cast<std::size_t>(order_) + 1};
  }

  /// No domain check; callers that accept user input use bernoulli_k.
  double operator()(double x) const noexcept {
    double acc = coeffs_[order_];
    for (int i = order_ - 1; i >= 0; --i) acc = acc * x + coeffs_[i];
    return acc;
  }

 private:
  BernoulliScaled(int order, std::array<double, kMaxOrder + 1> c)
      : order_(order), coeffs_(c) {}

  int order_;
  std::array<double, kMaxOrder + 1> coeffs_;
};

/// k_r(x) with argument checking (0 <= r <= 4, x in [0, 1]).
double bernoulli_k(int r, double x);

}  // namespace eigenspline
