#include "holosect/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "holosect/errors.hpp"

namespace holosect {

namespace {

std::string fmt_c(cplx z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

// w = a(t) / z, or a(t) / conj(z) for the corrupted variant.
class InversionMap final : public TransitionMap {
 public:
  InversionMap(std::vector<cplx> a, bool conjugate, std::string formula)
      : a_(std::move(a)), conjugate_(conjugate), formula_(std::move(formula)) {}

  std::optional<Vec> apply(const Vec& z, GridIndex t) const override {
    if (z.size() != 1 || z(0) == 0.0) return std::nullopt;
    Vec w(1);
    w(0) = a_.at(t) / (conjugate_ ? std::conj(z(0)) : z(0));
    return w;
  }

  std::optional<Mat> jacobian(const Vec& z, GridIndex t) const override {
    if (conjugate_ || z.size() != 1 || z(0) == 0.0) return std::nullopt;
    Mat j(1, 1);
    j(0, 0) = -a_.at(t) / (z(0) * z(0));
    return j;
  }

  std::optional<Hessian> hessian(const Vec& z, GridIndex t) const override {
    if (conjugate_ || z.size() != 1 || z(0) == 0.0) return std::nullopt;
    Mat h(1, 1);
    h(0, 0) = 2.0 * a_.at(t) / (z(0) * z(0) * z(0));
    return Hessian{h};
  }

  std::string formula() const override { return formula_; }

 private:
  std::vector<cplx> a_;
  bool conjugate_;
  std::string formula_;
};

// Affine change between two disc charts on a torus fiber; the lattice
// translate is the one bringing the point closest to the target centre.
class TorusChartMap final : public TransitionMap {
 public:
  TorusChartMap(std::vector<cplx> from_center, std::vector<cplx> to_center, std::vector<cplx> tau,
                double radius)
      : from_(std::move(from_center)), to_(std::move(to_center)), tau_(std::move(tau)), radius_(radius) {}

  std::optional<Vec> apply(const Vec& z, GridIndex t) const override {
    if (z.size() != 1) return std::nullopt;
    const cplx d = from_.at(t) + radius_ * z(0) - to_.at(t);
    const cplx tau = tau_.at(t);
    // Lattice coordinates of d, then the nearest translate among the
    // neighbors of the rounded coordinates.
    const double y = std::round(d.imag() / tau.imag());
    const double x = std::round(d.real() - y * tau.real());
    cplx best = d;
    double best_abs = std::abs(d);
    for (int m = -1; m <= 1; ++m) {
      for (int k = -1; k <= 1; ++k) {
        const cplx c = d - ((x + m) + (y + k) * tau);
        const double a = std::abs(c);
        if (a < best_abs) {
          best = c;
          best_abs = a;
        }
      }
    }
    Vec w(1);
    w(0) = best / radius_;
    return w;
  }

  std::optional<Mat> jacobian(const Vec& z, GridIndex) const override {
    return Mat::Identity(z.size(), z.size());
  }

  std::optional<Hessian> hessian(const Vec& z, GridIndex) const override {
    return Hessian(static_cast<std::size_t>(z.size()), Mat::Zero(z.size(), z.size()));
  }

  std::string formula() const override { return "w = z + (c_from(t) - c_to(t) - lambda) / R"; }

 private:
  std::vector<cplx> from_;
  std::vector<cplx> to_;
  std::vector<cplx> tau_;
  double radius_;
};

class ConjugationMap final : public TransitionMap {
 public:
  std::optional<Vec> apply(const Vec& z, GridIndex) const override { return Vec(z.conjugate()); }
  std::string formula() const override { return "w = conj(z)"; }
};

double twist_angle(const P1Options& o, double angle) {
  switch (o.twist) {
    case TwistKind::kNone:
      return 0.0;
    case TwistKind::kWinding:
      return o.winding * angle;
    case TwistKind::kJump:
      return angle < std::numbers::pi ? 0.0 : o.jump;
  }
  return 0.0;
}

}  // namespace

std::shared_ptr<const Atlas> make_p1_family(const P1Options& o) {
  if (!(o.rho > 1.0)) throw std::invalid_argument("rho must exceed 1 for the two discs to overlap");
  BaseGrid grid = BaseGrid::circle(o.grid);
  std::vector<cplx> a(grid.size());
  std::vector<cplx> a_back(grid.size());
  for (GridIndex t = 0; t < grid.size(); ++t) {
    a[t] = std::polar(1.0 / (o.rho * o.rho), twist_angle(o, grid.coord(t)));
    a_back[t] = o.conjugate ? std::conj(a[t]) : a[t];
  }
  const std::string zz = o.conjugate ? "conj(z)" : "z";
  const std::string ww = o.conjugate ? "conj(w)" : "w";
  Atlas::TransitionTable table;
  table[{0, 1}] = std::make_shared<InversionMap>(a, o.conjugate, "w = e^{i theta(t)} / (rho^2 " + zz + ")");
  table[{1, 0}] = std::make_shared<InversionMap>(a_back, o.conjugate, "z = e^{i theta(t)} / (rho^2 " + ww + ")");
  std::vector<Chart> charts{{0, "north", std::vector<bool>(grid.size(), true)},
                            {1, "south", std::vector<bool>(grid.size(), true)}};

  std::string name = "p1";
  std::string twist;
  switch (o.twist) {
    case TwistKind::kNone:
      name = "product-p1";
      twist = "identity (theta = 0)";
      break;
    case TwistKind::kWinding:
      name = "twisted-p1";
      twist = "theta(t) = " + std::to_string(o.winding) + " * angle(t)";
      break;
    case TwistKind::kJump:
      name = "twisted-p1-jump";
      twist = "theta(t) = 0 for angle < pi, " + std::to_string(o.jump) + " otherwise";
      break;
  }
  if (o.conjugate) name = "twisted-p1-corrupt";

  auto atlas = std::make_shared<Atlas>(name, std::move(grid), 1, std::move(charts), std::move(table));
  std::ostringstream rho;
  rho << o.rho;
  atlas->notes = {
      "fiber: Riemann sphere, dimension 1",
      "charts: 2 (north: z = zeta / rho, south: w = e^{i theta} / (rho zeta)), rho = " + rho.str(),
      "twist: " + twist,
      "transition north -> south: " + atlas->transition(0, 1)->formula(),
      "transition south -> north: " + atlas->transition(1, 0)->formula(),
  };
  return atlas;
}

std::shared_ptr<const Atlas> make_torus_pencil(const TorusOptions& o) {
  if (o.per_side < 2) throw std::invalid_argument("need at least two centres per side");
  BaseGrid grid = BaseGrid::interval(o.grid, 0.0, 1.0);
  std::vector<cplx> tau(grid.size());
  for (GridIndex t = 0; t < grid.size(); ++t) {
    const double s = grid.coord(t);
    tau[t] = (1.0 - s) * o.tau0 + s * o.tau1;
    double shortest = std::abs(tau[t]);
    for (int m = -2; m <= 2; ++m) {
      if (m != 0) shortest = std::min({shortest, std::abs(tau[t] + double(m)), 1.0});
    }
    if (2.0 * o.chart_radius >= shortest || tau[t].imag() <= 0.0) {
      throw std::invalid_argument("chart radius too large for the lattice at t=" + std::to_string(t));
    }
  }
  const int k2 = o.per_side * o.per_side;
  std::vector<std::vector<cplx>> centers(static_cast<std::size_t>(k2), std::vector<cplx>(grid.size()));
  std::vector<Chart> charts;
  for (int j = 0; j < o.per_side; ++j) {
    for (int k = 0; k < o.per_side; ++k) {
      const int id = j * o.per_side + k;
      for (GridIndex t = 0; t < grid.size(); ++t) {
        centers[static_cast<std::size_t>(id)][t] = (double(j) + double(k) * tau[t]) / double(o.per_side);
      }
      charts.push_back({id, "disc(" + std::to_string(j) + "," + std::to_string(k) + ")",
                        std::vector<bool>(grid.size(), true)});
    }
  }
  Atlas::TransitionTable table;
  for (int a = 0; a < k2; ++a) {
    for (int b = 0; b < k2; ++b) {
      if (a == b) continue;
      table[{a, b}] = std::make_shared<TorusChartMap>(centers[static_cast<std::size_t>(a)],
                                                      centers[static_cast<std::size_t>(b)], tau, o.chart_radius);
    }
  }
  auto atlas = std::make_shared<Atlas>("torus-pencil", std::move(grid), 1, std::move(charts), std::move(table));
  std::ostringstream r;
  r << o.chart_radius;
  atlas->notes = {
      "fiber: complex torus C / (Z + tau(t) Z), dimension 1",
      "charts: " + std::to_string(k2) + " affine discs of radius " + r.str() + " centred at (j + k tau(t)) / " +
          std::to_string(o.per_side),
      "tau path: tau(0) = " + fmt_c(o.tau0) + ", tau(1) = " + fmt_c(o.tau1) + ", linear in between",
      "transitions: w = z + (c_from(t) - c_to(t) - lambda) / R, lambda in the lattice",
  };
  return atlas;
}

std::shared_ptr<const Atlas> make_open_model(std::size_t grid_size, int n) {
  BaseGrid grid = BaseGrid::circle(grid_size);
  std::vector<Chart> charts{{0, "polydisk", std::vector<bool>(grid.size(), true)}};
  auto atlas = std::make_shared<Atlas>("open-model", std::move(grid), n, std::move(charts), Atlas::TransitionTable{});
  atlas->test_only = true;
  atlas->notes = {"fiber: open unit polydisk in C^" + std::to_string(n) + " (not compact, test use only)",
                  "charts: 1"};
  return atlas;
}

std::shared_ptr<const Atlas> make_conjugate_pair(std::size_t grid_size) {
  BaseGrid grid = BaseGrid::circle(grid_size);
  std::vector<Chart> charts{{0, "a", std::vector<bool>(grid.size(), true)},
                            {1, "b", std::vector<bool>(grid.size(), true)}};
  Atlas::TransitionTable table;
  table[{0, 1}] = std::make_shared<ConjugationMap>();
  table[{1, 0}] = std::make_shared<ConjugationMap>();
  auto atlas = std::make_shared<Atlas>("conjugate-pair", std::move(grid), 1, std::move(charts), std::move(table));
  atlas->test_only = true;
  atlas->notes = {"fiber: unit disc seen through two charts glued by conjugation (not holomorphic)"};
  return atlas;
}

std::vector<std::string> fixture_names() {
  return {"product-p1", "twisted-p1", "twisted-p1-corrupt", "twisted-p1-jump", "torus-pencil"};
}

std::shared_ptr<const Atlas> make_fixture(const std::string& name, std::size_t grid) {
  if (grid < 3) throw FixtureError("grid must have at least 3 points");
  if (name == "product-p1") return make_p1_family({.grid = grid, .twist = TwistKind::kNone});
  if (name == "twisted-p1") return make_p1_family({.grid = grid, .twist = TwistKind::kWinding});
  if (name == "twisted-p1-corrupt") {
    return make_p1_family({.grid = grid, .twist = TwistKind::kWinding, .conjugate = true});
  }
  if (name == "twisted-p1-jump") return make_p1_family({.grid = grid, .twist = TwistKind::kJump});
  if (name == "torus-pencil") return make_torus_pencil({.grid = grid});
  throw FixtureError("unknown fixture '" + name + "'");
}

}  // namespace holosect
