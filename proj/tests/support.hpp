#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "holosect/family.hpp"
#include "holosect/fixtures.hpp"
#include "holosect/geometry.hpp"
#include "holosect/sections.hpp"

namespace testsupport {

using holosect::cplx;
using holosect::GridIndex;
using holosect::Mat;
using holosect::Vec;

// Largest entry modulus of any vector or matrix expression.
template <class Derived>
double sup(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

inline Vec scalar(cplx z) {
  Vec v(1);
  v(0) = z;
  return v;
}

struct Healthy {
  std::shared_ptr<const holosect::Atlas> atlas;
  std::optional<holosect::BumpSystem> bumps;
};

inline Healthy healthy(const std::string& name, std::size_t grid = 16, double margin = 0.1) {
  Healthy h;
  h.atlas = holosect::make_fixture(name, grid);
  const auto cs = holosect::build_compact_system(h.atlas, margin);
  h.bumps.emplace(holosect::build_bump_system(cs));
  return h;
}

// Single-chart polydisk model with every weight set by `profile`.
inline holosect::BumpSystem flat_model(int n, std::size_t grid = 4,
                                       holosect::BumpProfile profile = holosect::BumpProfile::kUnit) {
  holosect::CompactSystem cs;
  cs.atlas = holosect::make_open_model(grid, n);
  cs.margin = 0.1;
  cs.r0 = 0.9;
  cs.shrunk_base = {std::vector<bool>(grid, true)};
  return holosect::BumpSystem(cs, profile);
}

// Base section used across tests. Sphere families: the circle |z| = 1/rho in
// chart 0, winding once. Torus: a small loop around the middle chart centre.
inline holosect::Section loop_section(const holosect::Atlas& atlas) {
  const bool torus = atlas.chart_count() > 2;
  const holosect::ChartId chart = torus ? 4 : 0;
  const double radius = torus ? 0.05 : 1.0 / 1.5;
  std::vector<holosect::Point> pts;
  for (GridIndex t = 0; t < atlas.grid().size(); ++t) {
    const double s = atlas.grid().kind() == holosect::BaseGrid::Kind::kCircle ? atlas.grid().coord(t)
                                                                            : 2.0 * std::numbers::pi * atlas.grid().coord(t);
    Vec z = Vec::Zero(atlas.dim());
    z(0) = std::polar(radius, s);
    pts.push_back({chart, z, t});
  }
  return holosect::make_section(atlas, pts);
}

// Closed forms for the two-chart sphere families, written out independently
// of the library: w = a(t) / z with a(t) = e^{i winding angle} / rho^2.
namespace oracle {

inline constexpr double kRho = 1.5;

inline cplx twist(double angle, int winding = 1) {
  return std::polar(1.0, winding * angle) / (kRho * kRho);
}

inline cplx inversion(cplx z, cplx a) { return a / z; }
inline cplx inversion_derivative(cplx z, cplx a) { return -a / (z * z); }

// Christoffel symbol of the inversion chart displayed in the other chart.
inline cplx inversion_christoffel(cplx z) { return -2.0 / z; }

// Same symbol from the transformation formula with finite-difference
// derivatives of the maps f (display -> owner) and g (owner -> display).
template <class F, class G>
cplx christoffel_by_differences(F f, G g, cplx z, double h = 1e-4) {
  const cplx zeta = f(z);
  const cplx df = (f(z + h) - f(z - h)) / (2.0 * h);
  const cplx d2g = (g(zeta + h) - 2.0 * g(zeta) + g(zeta - h)) / (h * h);
  return -d2g * df * df;
}

// Straight line through the first two samples, evaluated at s.
inline cplx line(cplx w0, cplx wdot, double s) { return w0 + s * wdot; }

}  // namespace oracle

}  // namespace testsupport
