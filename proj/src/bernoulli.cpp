#include "eigenspline/bernoulli.hpp"

#include <string>

#include "eigenspline/error.hpp"

namespace eigenspline {

namespace {

// k_r(x) = B_r(x)/r!, monomial coefficients lowest degree first.
constexpr std::array<std::array<double, 5>, 5> kTable = {{
    {1.0, 0.0, 0.0, 0.0, 0.0},
    {-0.5, 1.0, 0.0, 0.0, 0.0},
    {1.0 / 12.0, -0.5, 0.5, 0.0, 0.0},
    {0.0, 1.0 / 12.0, -0.25, 1.0 / 6.0, 0.0},
    {-1.0 / 720.0, 0.0, 1.0 / 24.0, -1.0 / 12.0, 1.0 / 24.0},
}};

}  // namespace

BernoulliScaled BernoulliScaled::of(int order) {
  if (order < 0 || order > kMaxOrder) {
    throw ArgumentError("Bernoulli order " + std::to_string(order) +
                        " outside [0, 4]");
  }
  return BernoulliScaled(order, kTable[order]);
}

double bernoulli_k(int r, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ArgumentError("bernoulli_k: x = " + std::to_string(x) +
                        " outside [0, 1]");
  }
  return BernoulliScaled::of(r)(x);
}

}  // namespace eigenspline
