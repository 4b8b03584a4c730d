#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "holosect/geometry.hpp"

namespace holosect {

// Entry k is the symmetric n x n matrix Gamma^k_{ij}.
using Christoffel = std::vector<Mat>;

// Convex weights on chart ids.
struct Weighting {
  std::vector<double> c;

  static Weighting dirac(std::size_t charts, ChartId id);
  static Weighting barycenter(std::size_t charts, const std::vector<ChartId>& support);
  // Throws PreconditionViolation unless c lies in the simplex over `support`.
  void validate(const std::vector<ChartId>& support) const;
};

// Spray of a weighting over t, displayed in chart psi.
class SprayContext {
 public:
  SprayContext(const BumpSystem& bumps, std::vector<ChartId> support, ChartId psi, GridIndex t, Weighting c);

  const BumpSystem& bumps() const noexcept { return *bumps_; }
  const Atlas& atlas() const { return bumps_->atlas(); }
  const std::vector<ChartId>& support() const noexcept { return support_; }
  ChartId psi() const noexcept { return psi_; }
  GridIndex t() const noexcept { return t_; }
  const Weighting& weighting() const noexcept { return c_; }
  // Positions must stay below this modulus in every chart of the support.
  double display_radius() const { return 0.5 * (bumps_->r0() + 1.0); }

  // Throws DomainEscape unless z (psi coordinates) lies in the display domain.
  void guard(const Vec& z) const;

 private:
  const BumpSystem* bumps_;
  std::vector<ChartId> support_;
  ChartId psi_;
  GridIndex t_;
  Weighting c_;
};

// Christoffel symbols of the flat connection of phi, displayed in psi at z.
Christoffel christoffel(const Atlas& atlas, ChartId phi, ChartId psi, const Vec& z, GridIndex t);

struct SprayState {
  Vec zdot;
  Vec z;
};

// (d zdot, d z) of the weighted spray.
SprayState spray_field(const SprayContext& ctx, const Vec& zdot, const Vec& z);

inline constexpr int kExpSteps = 64;

// Time-one flow of the spray; DomainEscape if the trajectory leaves the display domain.
SprayState exp_map(const SprayContext& ctx, const Vec& zdot, const Vec& z, int steps = kExpSteps);
// States at s = k / steps, k = 0..steps.
std::vector<SprayState> exp_trajectory(const SprayContext& ctx, const Vec& zdot, const Vec& z,
                                       int steps = kExpSteps);

struct PicardResult {
  SprayState state;
  int iterations = 0;
  // ||x_{k+1} - x_k|| / ||x_k - x_{k-1}||, sup over the time grid, while above roundoff.
  std::vector<double> ratios;
};

// Fixed-point iteration on the integral form of the geodesic equation.
PicardResult picard_exp(const SprayContext& ctx, const Vec& zdot, const Vec& z, int max_iterations = 100);

struct InverseResult {
  Vec zdot;
  int iterations = 0;
  // Successive update ratios, recorded while updates are well above roundoff.
  std::vector<double> ratios;
};

// zdot with exp(zdot, z).position = w, by the iteration zdot <- zdot - (e(zdot) - w).
InverseResult inverse_exp(const SprayContext& ctx, const Vec& w, const Vec& z, double tol = 1e-12,
                          int max_iterations = 200);

// Complex derivative D_zdot e by central differences.
Mat exp_derivative(const SprayContext& ctx, const Vec& zdot, const Vec& z, double h = 1e-5);

struct ExpConstants {
  double alpha0 = 0.0;
  double beta0 = 0.0;
  double delta0a = 0.0;
  double delta0b = 0.0;
};

struct ExpSampling {
  int points = 8;
  int directions = 8;
  int dirichlet = 8;
  std::uint64_t seed = 31;
};

// Radius ladder factor and final deflation for delta0a.
inline constexpr double kDeltaLadder = 0.8408964152537145;  // 2^{-1/4}
inline constexpr double kDeltaDeflation = 0.8;

ExpConstants estimate_exp_constants(const BumpSystem& bumps, const std::vector<ChartId>& support, ChartId psi,
                                    const ExpSampling& sampling = {});

std::vector<Revalidation> revalidate_exp_constants(const BumpSystem& bumps, const std::vector<ChartId>& support,
                                                   ChartId psi, const ExpConstants& c, const ExpSampling& holdout);

// Grid points of K^R: the intersection of closure(X'_phi) over the support.
std::vector<GridIndex> compact_base(const BumpSystem& bumps, const std::vector<ChartId>& support);
// Random point of K^{R,psi} over t, in psi coordinates; boundary-biased.
Vec sample_compact(const BumpSystem& bumps, const std::vector<ChartId>& support, ChartId psi, GridIndex t,
                   Rng& rng);
// Vertices, barycenter and random simplex points of the weighting space.
std::vector<Weighting> sample_weightings(std::size_t charts, const std::vector<ChartId>& support, int dirichlet,
                                         Rng& rng);

// Memo of exp constants keyed by (support, display chart).
class ExpConstantsCache {
 public:
  explicit ExpConstantsCache(const BumpSystem& bumps, ExpSampling sampling = {}) : bumps_(&bumps), sampling_(sampling) {}
  ExpConstants get(const std::vector<ChartId>& support, ChartId psi);
  std::map<std::pair<std::vector<ChartId>, ChartId>, ExpConstants> entries() const;
  const ExpSampling& sampling() const noexcept { return sampling_; }

 private:
  const BumpSystem* bumps_;
  ExpSampling sampling_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::vector<ChartId>, ChartId>, ExpConstants> cache_;
};

}  // namespace holosect
