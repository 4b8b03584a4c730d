#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "holosect/family.hpp"

namespace holosect {

// Real tangent vector at `base`, components in the fiber coordinates of `chart`.
struct TangentVector {
  Point base;
  ChartId chart = 0;
  Vec zdot;
};

// Continuous section over the whole grid: points[t] lies over t.
struct Section {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  const Point& operator[](GridIndex t) const { return points.at(t); }
};

TangentVector pushforward(const Atlas& atlas, const TangentVector& v, ChartId target);

// Flat inner product of chart `phi` pulled back to the base point of v and w.
cplx trivial_inner(const Atlas& atlas, ChartId phi, const TangentVector& v, const TangentVector& w);

// Matrix G of the combined metric at p in the coordinates of `chart`, so that
// <v, w>_p = w^H G v.
Mat gram_matrix(const BumpSystem& bumps, const Point& p, ChartId chart);

cplx inner(const BumpSystem& bumps, const TangentVector& v, const TangentVector& w);
double norm(const BumpSystem& bumps, const TangentVector& v);
// sqrt(v^H G v).
double gram_norm(const Mat& g, const Vec& v);

// Length of the chart-straight segment from a to b (coordinates in `chart`).
double segment_length(const BumpSystem& bumps, ChartId chart, const Vec& a, const Vec& b,
                      GridIndex t, int subdivisions = 64);
double curve_length(const BumpSystem& bumps, const std::vector<Point>& polyline,
                    int subdivisions = 64);

struct FiberGraphOptions {
  // Lattice spacing of graph nodes in chart coordinates (fiber dimension 1).
  double spacing = 1.0 / 12.0;
  // Nodes are kept with every coordinate below this modulus.
  double extent = 0.98;
  int edge_subdivisions = 4;
  int query_subdivisions = 16;
};

// Approximate capped fiber distance, with one lazily built graph per grid point.
// Upper bound of the infimum; the triangle inequality holds only up to a
// fraction of the lattice spacing.
class FiberDistance {
 public:
  explicit FiberDistance(const BumpSystem& bumps, FiberGraphOptions options = {});
  ~FiberDistance();
  FiberDistance(const FiberDistance&) = delete;
  FiberDistance& operator=(const FiberDistance&) = delete;

  double operator()(const Point& p, const Point& q) const;
  const BumpSystem& bumps() const noexcept { return *bumps_; }

 private:
  struct Graph;
  const Graph& graph(GridIndex t) const;

  const BumpSystem* bumps_;
  FiberGraphOptions options_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<Graph>> graphs_;
};

double fiber_distance(const BumpSystem& bumps, const Point& p, const Point& q);
double section_distance(const FiberDistance& dist, const Section& u, const Section& v);

struct MetricConstants {
  double c1a = 0.0;
  double c1b = 0.0;
  double delta2 = 0.0;
  double c2 = 0.0;
};

inline constexpr double kSafetyFactor = 1.25;

struct MetricSampling {
  // Sample points, spread evenly over the charts.
  int samples = 192;
  std::uint64_t seed = 21;
};

// Fills c1a and c1b.
MetricConstants estimate_metric_constants(const BumpSystem& bumps, const MetricSampling& sampling = {});
// Fills delta2 and c2.
MetricConstants estimate_chart_constants(const BumpSystem& bumps, const FiberDistance& dist,
                                         const MetricSampling& sampling = {});

std::vector<Revalidation> revalidate_metric_constants(const BumpSystem& bumps, const MetricConstants& c,
                                                      const MetricSampling& holdout);
std::vector<Revalidation> revalidate_chart_constants(const BumpSystem& bumps, const FiberDistance& dist,
                                                     const MetricConstants& c, const MetricSampling& holdout);

// Random point in the region where the comparison constants are defined:
// closed polydisk of radius (r0 + 1) / 2 over the closure of X'_phi.
Point sample_constant_region(const BumpSystem& bumps, ChartId phi, Rng& rng);

}  // namespace holosect
