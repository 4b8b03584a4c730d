#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "holosect/base_algebra.hpp"

namespace holosect {

using Rng = std::mt19937_64;

// Map between fibers, C^n -> C^m.
using FiberMap = std::function<Vec(const Vec&)>;
// Fiber map depending on a grid point.
using FamilyMap = std::function<Vec(const Vec&, GridIndex)>;

struct DiscDomain {
  Vec center;
  Eigen::VectorXd radius;
  int nodes = 64;

  static DiscDomain polydisk(const Vec& center, double radius, int nodes = 64);
};

// Partial derivative d^gamma f at the center from the Cauchy integral over the
// distinguished boundary of `domain`, trapezoid rule. Orders up to two.
Vec cauchy_coeff(const FiberMap& f, const DiscDomain& domain, const std::vector<int>& multi_index);
Vec cauchy_coeff(const FiberMap& f, const Vec& center, double radius,
                 const std::vector<int>& multi_index, int nodes = 64);

// Complex Jacobian (m x n) at the center, every column from cauchy_coeff.
Mat cauchy_jacobian(const FiberMap& f, const Vec& center, double radius, int nodes = 64);

// Second derivatives, entry k holds the n x n matrix d_l d_m f_k.
std::vector<Mat> cauchy_hessian(const FiberMap& f, const Vec& center, double radius, int nodes = 64);

// Max over samples of the Cauchy-Riemann defect |df/dx_j + i df/dy_j|.
double holomorphy_residual(const FiberMap& f, const DiscDomain& domain, int samples, Rng& rng,
                           double h = 1e-6);
// Same, at explicitly given points.
double holomorphy_residual_at(const FiberMap& f, const std::vector<Vec>& points, double h = 1e-6);

struct TaylorBoundReport {
  double eps = 0.0;
  int n = 0;
  double derivative_norm = 0.0;
  double derivative_bound = 0.0;
  // Largest remainder / (16 n^3 / eps^2 |z|^2) over the probes.
  double worst_remainder_ratio = 0.0;
  int probes = 0;
};

// Checks the derivative and second-order remainder bounds for a holomorphic f
// mapping the eps-ball of C^n into the unit ball.
TaylorBoundReport taylor_bound_verify(const FiberMap& f, double eps, int n, int probes, Rng& rng);

struct ContinuityReport {
  double modulus = 0.0;
  double mesh = 0.0;
  GridIndex witness_t = 0;
  GridIndex witness_s = 0;
  Vec witness_z;
};

// Modulus of t -> d^gamma f(z, t) across adjacent grid points, derivatives by
// Cauchy integrals of the given radius around each sample.
ContinuityReport param_continuity(const FamilyMap& f, const BaseGrid& grid,
                                  const std::vector<Vec>& samples,
                                  const std::vector<int>& multi_index, double radius);

// Sampling helpers shared across modules.
Vec random_in_polydisk(int n, double radius, Rng& rng);
Vec random_in_ball(int n, double radius, Rng& rng);
Vec random_unit(int n, Rng& rng);
double uniform(Rng& rng, double a = 0.0, double b = 1.0);

// Operator norm of A from (C^n, <.,.>_Gin) to (C^m, <.,.>_Gout).
double operator_norm(const Mat& a, const Mat& g_in, const Mat& g_out);

}  // namespace holosect
