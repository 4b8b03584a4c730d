#pragma once

#include <functional>

#include "holosect/base_algebra.hpp"

namespace holosect {

// Autonomous vector field on C^m.
using VectorField = std::function<Vec(const Vec&)>;

// Classical fixed-step Runge-Kutta on [0, length]. The observer, if given,
// sees the state after every step (step index from 1).
inline Vec rk4(const VectorField& f, Vec x, double length, int steps,
               const std::function<void(int, const Vec&)>& observer = {}) {
  const double h = length / steps;
  for (int k = 1; k <= steps; ++k) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * h * k1);
    const Vec k3 = f(x + 0.5 * h * k2);
    const Vec k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (observer) observer(k, x);
  }
  return x;
}

}  // namespace holosect
