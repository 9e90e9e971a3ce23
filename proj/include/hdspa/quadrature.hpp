#pragma once

#include <span>
#include <vector>

namespace hdspa {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// n-point closed trapezoid rule on [-1, 1].
QuadratureRule trapezoid(int n);

/// Affine map of a [-1, 1] rule onto [lo, hi].
QuadratureRule map_rule(const QuadratureRule& rule, double lo, double hi);

/// Pairwise summation; result does not depend on how terms were produced.
template <typename T>
T pairwise_sum(std::span<const T> xs) {
  if (xs.empty()) return T{};
  if (xs.size() <= 8) {
    T s{};
    for (const auto& x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace hdspa
