#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "holosect/analysis.hpp"
#include "holosect/base_algebra.hpp"
#include "holosect/errors.hpp"
#include "support.hpp"

using namespace holosect;
using testsupport::sup;

namespace {

AlgebraElement random_element(const BaseGrid& g, Rng& rng, double scale = 1.0) {
  AlgebraElement f{Vec(static_cast<Eigen::Index>(g.size()))};
  for (GridIndex t = 0; t < g.size(); ++t) f.values(static_cast<Eigen::Index>(t)) = scale * random_in_ball(1, 1.0, rng)(0);
  return f;
}

ModuleElement random_module(const BaseGrid& g, std::size_t n, Rng& rng) {
  ModuleElement u;
  for (std::size_t k = 0; k < n; ++k) u.components.push_back(random_element(g, rng));
  return u;
}

}  // namespace

TEST_CASE("base grid structure") {
  const BaseGrid c = BaseGrid::circle(16);
  CHECK(c.size() == 16);
  CHECK(c.mesh() == doctest::Approx(2.0 * std::numbers::pi / 16));
  CHECK(c.adjacent(0, 15));
  CHECK(c.neighbors(3).size() == 2);
  CHECK(c.adjacent_pairs().size() == 16);

  const BaseGrid i = BaseGrid::interval(11);
  CHECK(i.coord(10) == doctest::Approx(1.0));
  CHECK_FALSE(i.adjacent(0, 10));
  CHECK(i.neighbors(0).size() == 1);
  CHECK(i.adjacent_pairs().size() == 10);
  CHECK(i.mesh() == doctest::Approx(0.1));

  const BaseGrid r = c.refined(2);
  CHECK(r.size() == 32);
  CHECK(r.mesh() == doctest::Approx(c.mesh() / 2));
}

TEST_CASE("sup norm values") {
  const BaseGrid c = BaseGrid::circle(16);
  CHECK(sup_norm(AlgebraElement::constant(c, 1.0)) == 1.0);
  const auto e = AlgebraElement::from(c, [](double a) { return std::polar(1.0, a); });
  CHECK(sup_norm(e) == doctest::Approx(1.0).epsilon(1e-15));
  const BaseGrid i = BaseGrid::interval(11);
  CHECK(sup_norm(AlgebraElement::from(i, [](double x) { return cplx(x, 0.0); })) == 1.0);
}

TEST_CASE("module norm values") {
  const BaseGrid i = BaseGrid::interval(11);
  CHECK(module_norm(ModuleElement::zero(i, 2)) == 0.0);
  ModuleElement u{{AlgebraElement::constant(i, 1.0), AlgebraElement::constant(i, 2.0)}};
  CHECK(module_norm(u) == 2.0);
  ModuleElement v{{AlgebraElement::from(i, [](double x) { return cplx(x); }),
                   AlgebraElement::from(i, [](double x) { return cplx(1.0 - x); })}};
  CHECK(module_norm(v) == 1.0);
}

TEST_CASE("banach algebra and module laws on random samples") {
  Rng rng(5);
  const BaseGrid g = BaseGrid::circle(16);
  CHECK(sup_norm(AlgebraElement::constant(g, 1.0)) == 1.0);
  for (int s = 0; s < 200; ++s) {
    const auto f = random_element(g, rng, 3.0);
    const auto h = random_element(g, rng, 3.0);
    // equality is attained when both peak at one t; allow one rounding
    CHECK(sup_norm(f * h) <= sup_norm(f) * sup_norm(h) * (1.0 + 1e-15));
    CHECK(sup_norm(f + h) <= sup_norm(f) + sup_norm(h) + 1e-15);
    const auto u = random_module(g, 3, rng);
    CHECK(module_norm(f * u) <= sup_norm(f) * module_norm(u) * (1.0 + 1e-15));
  }
}

TEST_CASE("module element pointwise access") {
  const BaseGrid g = BaseGrid::interval(5);
  ModuleElement u = ModuleElement::zero(g, 2);
  Vec z(2);
  z << cplx(1, 2), cplx(-3, 0.5);
  u.set(3, z);
  CHECK(sup(u.at(3) - z) == 0.0);
  CHECK(sup(u.at(2)) == 0.0);
}

TEST_CASE("lorch derivative of the pointwise square") {
  const BaseGrid g = BaseGrid::circle(8);
  const ModuleMap sq = [](const ModuleElement& u) {
    ModuleElement out = u;
    out.components[0] = u.components[0] * u.components[0];
    return out;
  };
  const ModuleElement one{{AlgebraElement::constant(g, 1.0)}};
  const LorchDerivative d = lorch_derivative(sq, one);
  CHECK(d.diagonality_residual == 0.0);
  CHECK(d.cr_residual <= 1e-9);
  CHECK(sup(Mat(d.jacobian - 2.0 * Mat::Identity(8, 8))) <= 1e-9);
}

TEST_CASE("lorch derivative of conjugation is antilinear") {
  const BaseGrid g = BaseGrid::circle(8);
  const ModuleMap conj = [](const ModuleElement& u) {
    ModuleElement out = u;
    out.components[0].values = u.components[0].values.conjugate();
    return out;
  };
  const LorchDerivative d = lorch_derivative(conj, ModuleElement::zero(g, 1));
  CHECK(d.diagonality_residual == 0.0);
  CHECK(d.cr_residual == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("lorch derivative of a base permutation is off-diagonal") {
  const BaseGrid g = BaseGrid::circle(8);
  const ModuleMap shift = [](const ModuleElement& u) {
    ModuleElement out = u;
    const Eigen::Index n = u.components[0].values.size();
    for (Eigen::Index t = 0; t < n; ++t) out.components[0].values(t) = u.components[0].values((t + 1) % n);
    return out;
  };
  Rng rng(3);
  const LorchDerivative d = lorch_derivative(shift, random_module(g, 1, rng));
  CHECK(d.diagonality_residual == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lorch derivative of a finite power series and of a lifted linear map") {
  Rng rng(9);
  const BaseGrid g = BaseGrid::circle(6);
  const PowerSeries s{{random_element(g, rng), random_element(g, rng), random_element(g, rng), random_element(g, rng)},
                      random_element(g, rng, 0.2)};
  const ModuleMap f = [&s](const ModuleElement& u) {
    return ModuleElement{{power_series_eval(s, u.components[0]).value}};
  };
  const ModuleElement p{{random_element(g, rng, 0.3)}};
  const LorchDerivative d = lorch_derivative(f, p, 1e-5);
  CHECK(d.diagonality_residual <= 1e-6);
  CHECK(d.cr_residual <= 1e-6);

  // u(t) -> A u(t) for a fixed complex 2x2 matrix A.
  Mat a(2, 2);
  a << cplx(1, 2), cplx(0, -1), cplx(0.5, 0), cplx(-2, 1);
  const ModuleMap lift = [&a](const ModuleElement& u) {
    ModuleElement out = u;
    for (GridIndex t = 0; t < u.grid_size(); ++t) out.set(t, a * u.at(t));
    return out;
  };
  const LorchDerivative l = lorch_derivative(lift, random_module(g, 2, rng));
  Mat expected = Mat::Zero(12, 12);
  for (Eigen::Index t = 0; t < 6; ++t) expected.block(2 * t, 2 * t, 2, 2) = a;
  CHECK(sup(Mat(l.jacobian - expected)) <= 1e-9);
  CHECK(l.diagonality_residual == 0.0);
}

TEST_CASE("lorch derivative rejects non-finite output") {
  const BaseGrid g = BaseGrid::circle(4);
  const ModuleMap bad = [](const ModuleElement& u) {
    ModuleElement out = u;
    out.components[0].values(0) = cplx(std::nan(""), 0.0);
    return out;
  };
  CHECK_THROWS_AS(lorch_derivative(bad, ModuleElement::zero(g, 1)), NonFinite);
}

TEST_CASE("power series evaluation") {
  const BaseGrid g = BaseGrid::circle(5);
  const auto c0 = AlgebraElement::constant(g, cplx(2, -1));
  const auto zero = AlgebraElement::constant(g, 0.0);
  SUBCASE("constant series") {
    const auto v = power_series_eval({{c0}, zero}, AlgebraElement::constant(g, 100.0));
    CHECK(sup_norm(v.value - c0) == 0.0);
  }
  SUBCASE("geometric series at one half") {
    PowerSeries s{std::vector<AlgebraElement>(200, AlgebraElement::constant(g, 1.0)), zero};
    const auto v = power_series_eval(s, AlgebraElement::constant(g, 0.5));
    CHECK(sup_norm(v.value - AlgebraElement::constant(g, 2.0)) <= 1e-13);
    CHECK(v.terms_used < 200);
  }
  SUBCASE("exponential series at one") {
    std::vector<AlgebraElement> a;
    double fact = 1.0;
    for (int k = 0; k < 40; ++k) {
      if (k > 0) fact *= k;
      a.push_back(AlgebraElement::constant(g, 1.0 / fact));
    }
    const auto v = power_series_eval({a, zero}, AlgebraElement::constant(g, 1.0));
    CHECK(sup_norm(v.value - AlgebraElement::constant(g, std::exp(1.0))) <= 1e-14);
  }
  SUBCASE("outside the radius estimate") {
    PowerSeries s{std::vector<AlgebraElement>(40, AlgebraElement::constant(g, 1.0)), zero};
    CHECK_THROWS_AS(power_series_eval(s, AlgebraElement::constant(g, 1.5)), OutsideRadius);
  }
}

TEST_CASE("convergence radius proxy") {
  const BaseGrid g = BaseGrid::circle(4);
  const auto zero = AlgebraElement::constant(g, 0.0);
  PowerSeries ones{std::vector<AlgebraElement>(20, AlgebraElement::constant(g, 1.0)), zero};
  CHECK(convergence_radius(ones, 8) == 1.0);

  std::vector<AlgebraElement> pow2;
  for (int k = 0; k < 20; ++k) pow2.push_back(AlgebraElement::constant(g, std::pow(2.0, k)));
  CHECK(convergence_radius({pow2, zero}, 8) == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<AlgebraElement> inv_fact;
  double fact = 1.0;
  for (int k = 0; k < 25; ++k) {
    if (k > 0) fact *= k;
    inv_fact.push_back(AlgebraElement::constant(g, 1.0 / fact));
  }
  // windows k = 9..16 and 17..24: (k!)^{1/k} grows without bound
  const double r16 = convergence_radius({std::vector<AlgebraElement>(inv_fact.begin(), inv_fact.begin() + 17), zero}, 8);
  const double r24 = convergence_radius(PowerSeries{inv_fact, zero}, 8);
  CHECK(r16 == doctest::Approx(std::pow(362880.0, 1.0 / 9.0)).epsilon(1e-12));
  CHECK(r24 > r16);
}
