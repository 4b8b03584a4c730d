#pragma once

#include <memory>
#include <string>
#include <vector>

#include "holosect/family.hpp"

namespace holosect {

enum class TwistKind {
  kNone,
  // theta(t) = winding * angle, continuous on the circle.
  kWinding,
  // theta jumps by `jump` at angle pi.
  kJump,
};

// Two-chart family of Riemann spheres over a circle grid. Chart 0 is
// z = zeta / rho, chart 1 is w = e^{i theta(t)} / (rho zeta), so that
// w = e^{i theta(t)} / (rho^2 z) on the overlap.
struct P1Options {
  std::size_t grid = 16;
  double rho = 1.5;
  TwistKind twist = TwistKind::kNone;
  int winding = 1;
  double jump = 1.0;
  // Replace z by conj(z) in the transition formulas.
  bool conjugate = false;
};

// Complex tori C / (Z + tau(t) Z) over an interval grid, covered by
// per_side^2 affine disc charts of radius chart_radius centred at
// (j + k tau(t)) / per_side.
struct TorusOptions {
  std::size_t grid = 16;
  cplx tau0{0.1, 1.0};
  cplx tau1{0.25, 1.1};
  double chart_radius = 0.45;
  int per_side = 3;
};

std::shared_ptr<const Atlas> make_p1_family(const P1Options& options);
std::shared_ptr<const Atlas> make_torus_pencil(const TorusOptions& options);
// Single chart with fiber the unit polydisk in C^n; not compact, test use only.
std::shared_ptr<const Atlas> make_open_model(std::size_t grid, int n);
// Two full charts on the disc glued by conjugation; broken on purpose.
std::shared_ptr<const Atlas> make_conjugate_pair(std::size_t grid);

// Named fixtures: product-p1, twisted-p1, twisted-p1-corrupt, twisted-p1-jump,
// torus-pencil.
std::shared_ptr<const Atlas> make_fixture(const std::string& name, std::size_t grid);
std::vector<std::string> fixture_names();

}  // namespace holosect
