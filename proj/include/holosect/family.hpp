#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "holosect/analysis.hpp"
#include "holosect/base_algebra.hpp"

namespace holosect {

using ChartId = int;
// Entry k holds the matrix of second derivatives d_l d_m of component k.
using Hessian = std::vector<Mat>;

// Fiberwise coordinate change between two charts over a grid point.
class TransitionMap {
 public:
  virtual ~TransitionMap() = default;
  // Value of the formula, or nullopt where the formula itself is undefined.
  // Whether the result lies in the target polydisk is decided by the Atlas.
  virtual std::optional<Vec> apply(const Vec& z, GridIndex t) const = 0;
  // Closed-form derivatives, when known.
  virtual std::optional<Mat> jacobian(const Vec& z, GridIndex t) const;
  virtual std::optional<Hessian> hessian(const Vec& z, GridIndex t) const;
  virtual std::string formula() const = 0;
};

struct Chart {
  ChartId id = 0;
  std::string name;
  std::vector<bool> base_domain;
};

struct Point {
  ChartId chart = 0;
  Vec z;
  GridIndex t = 0;
};

std::string describe(const Point& p);

class Atlas {
 public:
  using TransitionTable = std::map<std::pair<ChartId, ChartId>, std::shared_ptr<const TransitionMap>>;

  Atlas(std::string name, BaseGrid grid, int dim, std::vector<Chart> charts, TransitionTable transitions);

  const std::string& name() const noexcept { return name_; }
  const BaseGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  std::size_t chart_count() const noexcept { return charts_.size(); }
  const Chart& chart(ChartId id) const { return charts_.at(static_cast<std::size_t>(id)); }
  const std::vector<Chart>& charts() const noexcept { return charts_; }
  bool in_base(ChartId id, GridIndex t) const { return chart(id).base_domain.at(t); }
  // nullptr when the two charts never overlap.
  const TransitionMap* transition(ChartId from, ChartId to) const;

  // Coordinates of p in `target`, or nullopt if p is not in that chart.
  std::optional<Vec> try_transfer(const Point& p, ChartId target) const;
  Vec transfer(const Point& p, ChartId target) const;
  bool contains(ChartId target, const Point& p) const { return try_transfer(p, target).has_value(); }
  Point expressed_in(const Point& p, ChartId target) const { return {target, transfer(p, target), p.t}; }

  // Derivatives of the transition from -> to at z (coordinates in `from`),
  // closed form when supplied, Cauchy integrals otherwise.
  Mat jacobian(ChartId from, ChartId to, const Vec& z, GridIndex t) const;
  Hessian hessian(ChartId from, ChartId to, const Vec& z, GridIndex t) const;

  // Free-form description lines, set by fixture builders.
  std::vector<std::string> notes;
  bool test_only = false;

 private:
  double contour_radius(const TransitionMap& tr, const Vec& z, GridIndex t) const;

  std::string name_;
  BaseGrid grid_;
  int dim_;
  std::vector<Chart> charts_;
  TransitionTable transitions_;
};

// Equality up to transfer, within tol in the sup norm.
bool same_point(const Atlas& atlas, const Point& p, const Point& q, double tol = 1e-9);

// Grid interior of a base subset: points whose neighbors all belong to it.
std::vector<bool> grid_interior(const BaseGrid& grid, const std::vector<bool>& set);
// Grid closure: the set plus its neighbors.
std::vector<bool> grid_closure(const BaseGrid& grid, const std::vector<bool>& set);

struct CompactSystem {
  std::shared_ptr<const Atlas> atlas;
  double margin = 0.0;
  double r0 = 0.0;
  std::vector<std::vector<bool>> shrunk_base;

  const std::vector<bool>& base(ChartId id) const { return shrunk_base.at(static_cast<std::size_t>(id)); }
  // Membership of p in the compact neighborhood M'_phi.
  bool contains(ChartId id, const Point& p) const;
  // Membership of (z, t) in the closed polydisk of radius r0 over closure(X'_phi).
  bool closed_contains(ChartId id, const Point& p) const;
};

struct CoverageSampling {
  int samples_per_t = 1000;
  std::uint64_t seed = 7;
};

// Random point of the fiber over t, drawn from a chart containing t.
Point sample_fiber_point(const Atlas& atlas, GridIndex t, Rng& rng, double radius = 0.999);

CompactSystem build_compact_system(std::shared_ptr<const Atlas> atlas, double margin,
                                   const CoverageSampling& sampling = {});

// Verdict of an estimated constant on a holdout sample.
struct Revalidation {
  std::string constant;
  double value = 0.0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::string witness;

  bool passed() const { return checks > 0 && violations == 0; }
};

// Covering by the M'_phi at r0 on fresh fiber samples.
Revalidation revalidate_compact_system(const CompactSystem& cs, const CoverageSampling& holdout);

enum class BumpProfile {
  kSmooth,
  // Constant one on every chart. Only for the non-compact test model.
  kUnit,
};

class BumpSystem {
 public:
  BumpSystem(CompactSystem cs, BumpProfile profile);

  const Atlas& atlas() const { return *compact_.atlas; }
  const std::shared_ptr<const Atlas>& atlas_ptr() const { return compact_.atlas; }
  const CompactSystem& compact() const noexcept { return compact_; }
  double r0() const noexcept { return compact_.r0; }
  double r1() const noexcept { return r1_; }
  double r2() const noexcept { return r2_; }
  BumpProfile profile() const noexcept { return profile_; }
  const std::vector<bool>& inner_base(ChartId id) const { return inner_.at(static_cast<std::size_t>(id)); }
  const std::vector<bool>& innermost_base(ChartId id) const { return innermost_.at(static_cast<std::size_t>(id)); }

  double base_bump(ChartId id, GridIndex t) const { return base_bump_.at(static_cast<std::size_t>(id)).at(t); }
  double fiber_bump(const Vec& w) const;
  // Bump of chart `id` at p, zero outside the chart.
  double value(ChartId id, const Point& p) const;
  std::vector<double> values(const Point& p) const;
  double total(const Point& p) const;

 private:
  CompactSystem compact_;
  BumpProfile profile_;
  double r1_ = 0.0;
  double r2_ = 0.0;
  std::vector<std::vector<bool>> inner_;
  std::vector<std::vector<bool>> innermost_;
  std::vector<std::vector<double>> base_bump_;
};

BumpSystem build_bump_system(const CompactSystem& cs, const CoverageSampling& sampling = {},
                             BumpProfile profile = BumpProfile::kSmooth);

struct AtlasTolerances {
  double holomorphy = 1e-6;
  double cocycle = 1e-9;
  double point_equality = 1e-9;
};

struct TransitionCheck {
  ChartId from = 0;
  ChartId to = 0;
  std::size_t samples = 0;
  double holomorphy_residual = 0.0;
  std::string holomorphy_witness;
  double continuity_modulus = 0.0;
  std::string continuity_witness;
};

struct AtlasReport {
  AtlasTolerances tolerances;
  std::vector<TransitionCheck> transitions;
  double max_holomorphy = 0.0;
  double max_continuity = 0.0;
  double mesh = 0.0;
  double cocycle_residual = 0.0;
  std::string cocycle_witness;
  std::size_t cocycle_samples = 0;

  bool holomorphic() const { return max_holomorphy <= tolerances.holomorphy; }
  bool cocycle_ok() const { return cocycle_residual <= tolerances.cocycle; }
};

AtlasReport atlas_validate(const Atlas& atlas, const AtlasTolerances& tol, int samples = 1000,
                           std::uint64_t seed = 11);

}  // namespace holosect
