#include <doctest.h>

#include <cmath>
#include <numbers>

#include "holosect/analysis.hpp"
#include "holosect/errors.hpp"
#include "holosect/fixtures.hpp"
#include "support.hpp"

using namespace holosect;
using testsupport::scalar;
using testsupport::sup;
namespace oracle = testsupport::oracle;

TEST_CASE("cauchy coefficients of polynomials") {
  const FiberMap id = [](const Vec& z) { return z; };
  CHECK(std::abs(cauchy_coeff(id, scalar(0.3), 0.5, {1})(0) - 1.0) <= 1e-14);

  const FiberMap cube = [](const Vec& z) { return Vec(z.array().cube()); };
  CHECK(std::abs(cauchy_coeff(cube, scalar(0.0), 0.5, {1})(0)) <= 1e-14);
  CHECK(std::abs(cauchy_coeff(cube, scalar(0.0), 0.5, {2})(0)) <= 1e-14);
  CHECK(std::abs(cauchy_coeff(cube, scalar(0.2), 0.5, {1})(0) - 0.12) <= 1e-14);
  CHECK(std::abs(cauchy_coeff(cube, scalar(0.2), 0.5, {2})(0) - 1.2) <= 1e-13);
}

TEST_CASE("mixed second derivative in two variables") {
  const FiberMap f = [](const Vec& z) { return scalar(z(0) * z(0) * z(1)); };
  Vec c(2);
  c << cplx(0.1, 0.2), cplx(-0.3, 0.1);
  // d0 d1 (z0^2 z1) = 2 z0
  const Vec d = cauchy_coeff(f, c, 0.3, {1, 1});
  CHECK(std::abs(d(0) - 2.0 * c(0)) <= 1e-13);
  const auto h = cauchy_hessian(f, c, 0.3);
  CHECK(std::abs(h[0](0, 1) - 2.0 * c(0)) <= 1e-13);
  CHECK(std::abs(h[0](0, 0) - 2.0 * c(1)) <= 1e-13);
  CHECK(std::abs(h[0](1, 1)) <= 1e-13);
}

TEST_CASE("cauchy derivative of the sphere transition matches its closed form") {
  const cplx a = oracle::twist(0.7);
  const FiberMap f = [a](const Vec& z) { return scalar(oracle::inversion(z(0), a)); };
  Rng rng(12);
  for (int s = 0; s < 50; ++s) {
    const cplx z = std::polar(uniform(rng, 0.5, 0.9), uniform(rng, 0.0, 2 * std::numbers::pi));
    const cplx d = cauchy_coeff(f, scalar(z), 0.2, {1})(0);
    CHECK(std::abs(d - oracle::inversion_derivative(z, a)) <= 1e-10);
    const double twice = std::abs(cauchy_coeff(f, scalar(z), 0.2, {1}, 128)(0) - d);
    CHECK(twice <= 1e-12);
  }
}

TEST_CASE("first-order coefficient agrees with central differences") {
  Rng rng(4);
  for (int s = 0; s < 50; ++s) {
    const cplx c0 = random_in_ball(1, 1.0, rng)(0);
    const cplx c1 = random_in_ball(1, 1.0, rng)(0);
    const FiberMap f = [&](const Vec& z) { return scalar(std::exp(c0 * z(0)) + c1 * z(0) * z(0)); };
    const cplx z = random_in_ball(1, 0.5, rng)(0);
    const double h = 1e-5;
    const cplx fd = (f(scalar(z + h))(0) - f(scalar(z - h))(0)) / (2 * h);
    CHECK(std::abs(cauchy_coeff(f, scalar(z), 0.3, {1})(0) - fd) <= 1e-6);
  }
}

TEST_CASE("cauchy jacobian of a linear map") {
  Mat a(2, 2);
  a << cplx(1, 1), cplx(0, 2), cplx(-1, 0), cplx(3, -1);
  const FiberMap f = [&a](const Vec& z) { return Vec(a * z); };
  CHECK(sup(Mat(cauchy_jacobian(f, Vec::Zero(2), 0.5) - a)) <= 1e-14);
}

TEST_CASE("holomorphy residual") {
  Rng rng(1);
  const DiscDomain d = DiscDomain::polydisk(scalar(0.0), 0.9);
  const FiberMap sq = [](const Vec& z) { return Vec(z.array().square()); };
  CHECK(holomorphy_residual(sq, d, 200, rng) <= 1e-8);
  const FiberMap conj = [](const Vec& z) { return Vec(z.conjugate()); };
  CHECK(holomorphy_residual(conj, d, 200, rng) == doctest::Approx(2.0).epsilon(1e-8));
  const FiberMap abs2 = [](const Vec& z) { return scalar(std::norm(z(0))); };
  const std::vector<Vec> pts{scalar(0.5), scalar(cplx(0, -0.3)), scalar(cplx(0.2, 0.6))};
  CHECK(holomorphy_residual_at(abs2, pts) > 0.1);
}

TEST_CASE("holomorphy residual rejects non-finite maps") {
  const FiberMap bad = [](const Vec& z) { return Vec(z.array().sqrt() * std::nan("")); };
  CHECK_THROWS_AS(holomorphy_residual_at(bad, {scalar(0.0)}), NonFinite);
}

TEST_CASE("taylor bound verification on closed-form maps") {
  Rng rng(7);
  const double eps = 0.4;
  SUBCASE("linear map z / eps") {
    const FiberMap f = [eps](const Vec& z) { return Vec(z / eps); };
    const auto r = taylor_bound_verify(f, eps, 1, 100, rng);
    CHECK(r.derivative_norm == doctest::Approx(1.0 / eps).epsilon(1e-12));
    CHECK(r.derivative_norm <= r.derivative_bound);
    CHECK(r.worst_remainder_ratio <= 1e-12);
  }
  SUBCASE("quadratic map (z / eps)^2") {
    const FiberMap f = [eps](const Vec& z) { return Vec((z / eps).array().square()); };
    const auto r = taylor_bound_verify(f, eps, 1, 100, rng);
    CHECK(r.derivative_norm <= 1e-14);
    // remainder 1/16 at |z| = eps/4 against the bound value 1
    CHECK(r.worst_remainder_ratio == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
  }
  SUBCASE("zero map") {
    const FiberMap f = [](const Vec& z) { return Vec(Vec::Zero(z.size())); };
    const auto r = taylor_bound_verify(f, eps, 2, 50, rng);
    CHECK(r.derivative_norm == 0.0);
    CHECK(r.worst_remainder_ratio == 0.0);
  }
  SUBCASE("map leaving the unit ball") {
    const FiberMap f = [eps](const Vec& z) { return Vec(3.0 * z / eps); };
    CHECK_THROWS_AS(taylor_bound_verify(f, eps, 1, 10, rng), PreconditionViolation);
  }
}

TEST_CASE("parameter continuity of sphere transitions") {
  const std::vector<Vec> samples{scalar(0.6), scalar(cplx(0.0, 0.7)), scalar(cplx(-0.5, -0.4))};
  auto modulus = [&](TwistKind kind, std::size_t n) {
    const auto atlas = make_p1_family({.grid = n, .twist = kind});
    const TransitionMap* tr = atlas->transition(0, 1);
    const FamilyMap f = [tr](const Vec& z, GridIndex t) { return *tr->apply(z, t); };
    return param_continuity(f, atlas->grid(), samples, {1}, 0.1);
  };
  CHECK(modulus(TwistKind::kNone, 16).modulus <= 1e-14);
  const double m16 = modulus(TwistKind::kWinding, 16).modulus;
  const double m32 = modulus(TwistKind::kWinding, 32).modulus;
  CHECK(m16 > 0.0);
  CHECK(m32 / m16 == doctest::Approx(0.5).epsilon(0.05));
  const auto j16 = modulus(TwistKind::kJump, 16);
  const auto j64 = modulus(TwistKind::kJump, 64);
  CHECK(j64.modulus >= 0.75 * j16.modulus);
  CHECK(j64.modulus > 0.5);
}

TEST_CASE("operator norm under Gram matrices") {
  Mat a = Mat::Identity(2, 2);
  Mat g = Mat::Identity(2, 2);
  CHECK(operator_norm(a, g, g) == doctest::Approx(1.0));
  CHECK(operator_norm(a, g, 4.0 * g) == doctest::Approx(2.0));
  CHECK(operator_norm(a, 4.0 * g, g) == doctest::Approx(0.5));
}
