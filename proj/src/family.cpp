#include "holosect/family.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "holosect/errors.hpp"

namespace holosect {

namespace {

bool finite(const Vec& v) {
  return std::all_of(v.data(), v.data() + v.size(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Hop distance from every grid point to the nearest member of `set`.
std::vector<double> hop_distance(const BaseGrid& grid, const std::vector<bool>& set) {
  std::vector<double> d(grid.size(), std::numeric_limits<double>::infinity());
  std::deque<GridIndex> queue;
  for (GridIndex t = 0; t < grid.size(); ++t) {
    if (set[t]) {
      d[t] = 0.0;
      queue.push_back(t);
    }
  }
  while (!queue.empty()) {
    const GridIndex t = queue.front();
    queue.pop_front();
    for (GridIndex s : grid.neighbors(t)) {
      if (d[s] > d[t] + 1.0) {
        d[s] = d[t] + 1.0;
        queue.push_back(s);
      }
    }
  }
  return d;
}

// Points on the contours used by Cauchy integrals of the given radius.
std::vector<Vec> contour_probe(const Vec& z, double r) {
  std::vector<Vec> out;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    for (int q = 0; q < 16; ++q) {
      Vec w = z;
      w(j) += std::polar(r, 2.0 * std::numbers::pi * q / 16.0);
      out.push_back(w);
    }
  }
  Vec corner = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) corner(j) += r;
  out.push_back(corner);
  return out;
}

}  // namespace

std::optional<Mat> TransitionMap::jacobian(const Vec&, GridIndex) const { return std::nullopt; }
std::optional<Hessian> TransitionMap::hessian(const Vec&, GridIndex) const { return std::nullopt; }

std::string describe(const Point& p) {
  std::ostringstream os;
  os << "chart " << p.chart << ", t=" << p.t << ", z=(";
  for (Eigen::Index k = 0; k < p.z.size(); ++k) {
    os << (k ? ", " : "") << p.z(k).real() << (p.z(k).imag() < 0 ? "-" : "+")
       << std::abs(p.z(k).imag()) << "i";
  }
  os << ")";
  return os.str();
}

Atlas::Atlas(std::string name, BaseGrid grid, int dim, std::vector<Chart> charts,
             TransitionTable transitions)
    : name_(std::move(name)),
      grid_(std::move(grid)),
      dim_(dim),
      charts_(std::move(charts)),
      transitions_(std::move(transitions)) {
  if (dim_ < 1) throw std::invalid_argument("fiber dimension must be positive");
  if (charts_.empty()) throw std::invalid_argument("atlas needs at least one chart");
  for (std::size_t k = 0; k < charts_.size(); ++k) {
    const Chart& c = charts_[k];
    if (c.id != static_cast<ChartId>(k)) throw std::invalid_argument("chart ids must be 0..count-1");
    if (c.base_domain.size() != grid_.size()) throw std::invalid_argument("base domain size mismatch");
    if (std::none_of(c.base_domain.begin(), c.base_domain.end(), [](bool b) { return b; })) {
      throw std::invalid_argument("chart base domain is empty");
    }
  }
}

const TransitionMap* Atlas::transition(ChartId from, ChartId to) const {
  const auto it = transitions_.find({from, to});
  return it == transitions_.end() ? nullptr : it->second.get();
}

std::optional<Vec> Atlas::try_transfer(const Point& p, ChartId target) const {
  if (!in_base(p.chart, p.t) || !in_base(target, p.t)) return std::nullopt;
  if (target == p.chart) {
    if (sup(p.z) < 1.0) return p.z;
    return std::nullopt;
  }
  const TransitionMap* tr = transition(p.chart, target);
  if (tr == nullptr) return std::nullopt;
  auto w = tr->apply(p.z, p.t);
  if (!w || !finite(*w) || sup(*w) >= 1.0) return std::nullopt;
  return w;
}

Vec Atlas::transfer(const Point& p, ChartId target) const {
  auto w = try_transfer(p, target);
  if (!w) throw OutsideOverlap(describe(p) + " is not in chart " + std::to_string(target));
  return *w;
}

double Atlas::contour_radius(const TransitionMap& tr, const Vec& z, GridIndex t) const {
  double r = 0.25 * std::max(1e-3, 1.0 - sup(z));
  for (int attempt = 0; attempt < 12; ++attempt, r *= 0.5) {
    bool ok = true;
    for (const Vec& w : contour_probe(z, r)) {
      auto v = tr.apply(w, t);
      if (!v || !finite(*v)) {
        ok = false;
        break;
      }
    }
    if (ok) return r;
  }
  throw OutsideOverlap("no holomorphic contour around the requested point");
}

Mat Atlas::jacobian(ChartId from, ChartId to, const Vec& z, GridIndex t) const {
  if (from == to) return Mat::Identity(dim_, dim_);
  const TransitionMap* tr = transition(from, to);
  if (tr == nullptr) throw OutsideOverlap("charts " + std::to_string(from) + " and " + std::to_string(to) + " do not overlap");
  if (auto j = tr->jacobian(z, t)) return *j;
  const FiberMap f = [tr, t](const Vec& w) {
    auto v = tr->apply(w, t);
    if (!v) throw OutsideOverlap("transition undefined on a Cauchy contour");
    return *v;
  };
  return cauchy_jacobian(f, z, contour_radius(*tr, z, t));
}

Hessian Atlas::hessian(ChartId from, ChartId to, const Vec& z, GridIndex t) const {
  if (from == to) return Hessian(static_cast<std::size_t>(dim_), Mat::Zero(dim_, dim_));
  const TransitionMap* tr = transition(from, to);
  if (tr == nullptr) throw OutsideOverlap("charts " + std::to_string(from) + " and " + std::to_string(to) + " do not overlap");
  if (auto h = tr->hessian(z, t)) return *h;
  const FiberMap f = [tr, t](const Vec& w) {
    auto v = tr->apply(w, t);
    if (!v) throw OutsideOverlap("transition undefined on a Cauchy contour");
    return *v;
  };
  return cauchy_hessian(f, z, contour_radius(*tr, z, t));
}

bool same_point(const Atlas& atlas, const Point& p, const Point& q, double tol) {
  if (p.t != q.t) return false;
  auto w = atlas.try_transfer(p, q.chart);
  if (!w) return false;
  return sup(*w - q.z) <= tol;
}

std::vector<bool> grid_interior(const BaseGrid& grid, const std::vector<bool>& set) {
  std::vector<bool> out(grid.size(), false);
  for (GridIndex t = 0; t < grid.size(); ++t) {
    if (!set[t]) continue;
    const auto& nb = grid.neighbors(t);
    out[t] = std::all_of(nb.begin(), nb.end(), [&](GridIndex s) { return set[s]; });
  }
  return out;
}

std::vector<bool> grid_closure(const BaseGrid& grid, const std::vector<bool>& set) {
  std::vector<bool> out = set;
  for (GridIndex t = 0; t < grid.size(); ++t) {
    if (!set[t]) continue;
    for (GridIndex s : grid.neighbors(t)) out[s] = true;
  }
  return out;
}

bool CompactSystem::contains(ChartId id, const Point& p) const {
  if (!base(id).at(p.t)) return false;
  auto w = atlas->try_transfer(p, id);
  return w && sup(*w) < r0;
}

bool CompactSystem::closed_contains(ChartId id, const Point& p) const {
  if (!grid_closure(atlas->grid(), base(id)).at(p.t)) return false;
  auto w = atlas->try_transfer(p, id);
  return w && sup(*w) <= r0;
}

Point sample_fiber_point(const Atlas& atlas, GridIndex t, Rng& rng, double radius) {
  std::vector<ChartId> over;
  for (const Chart& c : atlas.charts()) {
    if (c.base_domain[t]) over.push_back(c.id);
  }
  if (over.empty()) throw CoverageFailure("no chart over the base point", "t=" + std::to_string(t));
  const ChartId id = over[std::uniform_int_distribution<std::size_t>(0, over.size() - 1)(rng)];
  Vec z = random_in_polydisk(atlas.dim(), radius, rng);
  // A quarter of the samples sit on the boundary torus of one coordinate.
  if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
    const auto k = std::uniform_int_distribution<Eigen::Index>(0, z.size() - 1)(rng);
    z(k) = std::polar(radius, uniform(rng, 0.0, 2.0 * std::numbers::pi));
  }
  return {id, z, t};
}

CompactSystem build_compact_system(std::shared_ptr<const Atlas> atlas, double margin,
                                   const CoverageSampling& sampling) {
  if (!(margin > 0.0 && margin < 0.25)) throw std::invalid_argument("margin must lie in (0, 1/4)");
  CompactSystem cs;
  cs.atlas = std::move(atlas);
  cs.margin = margin;
  cs.r0 = 1.0 - margin;
  const Atlas& a = *cs.atlas;
  for (const Chart& c : a.charts()) cs.shrunk_base.push_back(grid_interior(a.grid(), c.base_domain));

  Rng rng(sampling.seed);
  for (GridIndex t = 0; t < a.grid().size(); ++t) {
    for (int s = 0; s < sampling.samples_per_t; ++s) {
      const Point p = sample_fiber_point(a, t, rng);
      bool covered = false;
      for (const Chart& c : a.charts()) {
        if (cs.contains(c.id, p)) {
          covered = true;
          break;
        }
      }
      if (!covered) throw CoverageFailure("compact neighborhoods do not cover the fiber", describe(p));
    }
  }
  return cs;
}

Revalidation revalidate_compact_system(const CompactSystem& cs, const CoverageSampling& holdout) {
  Revalidation out{"r0", cs.r0};
  const Atlas& a = *cs.atlas;
  Rng rng(holdout.seed);
  for (GridIndex t = 0; t < a.grid().size(); ++t) {
    for (int s = 0; s < holdout.samples_per_t; ++s) {
      const Point p = sample_fiber_point(a, t, rng);
      ++out.checks;
      const bool covered = std::any_of(a.charts().begin(), a.charts().end(),
                                       [&](const Chart& c) { return cs.contains(c.id, p); });
      if (!covered) {
        if (out.violations++ == 0) out.witness = describe(p);
      }
    }
  }
  return out;
}

BumpSystem::BumpSystem(CompactSystem cs, BumpProfile profile)
    : compact_(std::move(cs)), profile_(profile) {
  const Atlas& a = *compact_.atlas;
  r2_ = compact_.r0 * (1.0 - compact_.margin);
  r1_ = 0.5 * (compact_.r0 + r2_);
  for (const Chart& c : a.charts()) {
    inner_.push_back(grid_interior(a.grid(), compact_.base(c.id)));
    innermost_.push_back(grid_interior(a.grid(), inner_.back()));
    const std::vector<bool>& inner = inner_.back();
    std::vector<bool> outside(inner.size());
    for (std::size_t t = 0; t < inner.size(); ++t) outside[t] = !inner[t];
    const auto d_out = hop_distance(a.grid(), outside);
    const auto d_in = hop_distance(a.grid(), innermost_.back());
    std::vector<double> bump(a.grid().size(), 0.0);
    for (GridIndex t = 0; t < a.grid().size(); ++t) {
      if (!inner[t]) continue;
      if (std::isinf(d_out[t])) {
        bump[t] = 1.0;
      } else if (!std::isinf(d_in[t])) {
        bump[t] = d_out[t] / (d_out[t] + d_in[t]);
      }
    }
    base_bump_.push_back(std::move(bump));
  }
}

double BumpSystem::fiber_bump(const Vec& w) const {
  if (profile_ == BumpProfile::kUnit) return 1.0;
  double v = 1.0;
  const double r1sq = r1_ * r1_;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double a = std::norm(w(k));
    if (a >= r1sq) return 0.0;
    v *= std::exp(1.0 - r1sq / (r1sq - a));
  }
  return v;
}

double BumpSystem::value(ChartId id, const Point& p) const {
  const double b = base_bump(id, p.t);
  if (b == 0.0) return 0.0;
  auto w = atlas().try_transfer(p, id);
  if (!w) return 0.0;
  return b * fiber_bump(*w);
}

std::vector<double> BumpSystem::values(const Point& p) const {
  std::vector<double> out(atlas().chart_count());
  for (const Chart& c : atlas().charts()) out[static_cast<std::size_t>(c.id)] = value(c.id, p);
  return out;
}

double BumpSystem::total(const Point& p) const {
  double s = 0.0;
  for (double v : values(p)) s += v;
  return s;
}

BumpSystem build_bump_system(const CompactSystem& cs, const CoverageSampling& sampling,
                             BumpProfile profile) {
  BumpSystem bumps(cs, profile);
  Rng rng(sampling.seed ^ 0x9e3779b97f4a7c15ULL);
  const Atlas& a = bumps.atlas();
  for (GridIndex t = 0; t < a.grid().size(); ++t) {
    for (int s = 0; s < sampling.samples_per_t; ++s) {
      const Point p = sample_fiber_point(a, t, rng);
      if (!(bumps.total(p) > 0.0)) throw CoverageFailure("bump functions vanish at a fiber point", describe(p));
    }
  }
  return bumps;
}

AtlasReport atlas_validate(const Atlas& atlas, const AtlasTolerances& tol, int samples,
                           std::uint64_t seed) {
  AtlasReport rep;
  rep.tolerances = tol;
  rep.mesh = atlas.grid().mesh();
  Rng rng(seed);
  const BaseGrid& grid = atlas.grid();
  const int n = atlas.dim();

  auto overlap_points = [&](ChartId from, ChartId to, GridIndex t, int count) {
    std::vector<Vec> pts;
    for (int attempt = 0; attempt < 50 * count && static_cast<int>(pts.size()) < count; ++attempt) {
      const Vec z = random_in_polydisk(n, 0.999, rng);
      if (atlas.try_transfer({from, z, t}, to)) pts.push_back(z);
    }
    return pts;
  };

  for (const Chart& a : atlas.charts()) {
    for (const Chart& b : atlas.charts()) {
      const TransitionMap* tr = atlas.transition(a.id, b.id);
      if (a.id == b.id || tr == nullptr) continue;
      TransitionCheck chk;
      chk.from = a.id;
      chk.to = b.id;

      std::vector<GridIndex> common;
      for (GridIndex t = 0; t < grid.size(); ++t) {
        if (a.base_domain[t] && b.base_domain[t]) common.push_back(t);
      }
      if (common.empty()) continue;
      for (int s = 0; s < samples; ++s) {
        const GridIndex t = common[static_cast<std::size_t>(s) % common.size()];
        const auto pts = overlap_points(a.id, b.id, t, 1);
        if (pts.empty()) continue;
        const FiberMap f = [tr, t](const Vec& w) {
          auto v = tr->apply(w, t);
          if (!v) throw OutsideOverlap("transition undefined near a sampled point");
          return *v;
        };
        const double r = holomorphy_residual_at(f, pts);
        ++chk.samples;
        if (r > chk.holomorphy_residual) {
          chk.holomorphy_residual = r;
          chk.holomorphy_witness = describe(Point{a.id, pts.front(), t});
        }
      }

      for (const auto& [t, s] : grid.adjacent_pairs()) {
        if (!(a.base_domain[t] && b.base_domain[t] && a.base_domain[s] && b.base_domain[s])) continue;
        for (const Vec& z : overlap_points(a.id, b.id, t, 6)) {
          if (!atlas.try_transfer({a.id, z, s}, b.id)) continue;
          const double r = std::min(0.25 * (1.0 - sup(z)), 0.1);
          const FiberMap ft = [tr, t = t](const Vec& w) { return tr->apply(w, t).value_or(Vec::Constant(w.size(), NAN)); };
          const FiberMap fs = [tr, s = s](const Vec& w) { return tr->apply(w, s).value_or(Vec::Constant(w.size(), NAN)); };
          double d = 0.0;
          try {
            d = (cauchy_jacobian(ft, z, r) - cauchy_jacobian(fs, z, r)).cwiseAbs().maxCoeff();
          } catch (const NonFinite&) {
            continue;
          }
          if (d > chk.continuity_modulus) {
            chk.continuity_modulus = d;
            std::ostringstream os;
            os << "t=" << t << " vs t=" << s << " at " << describe(Point{a.id, z, t});
            chk.continuity_witness = os.str();
          }
        }
      }
      rep.max_holomorphy = std::max(rep.max_holomorphy, chk.holomorphy_residual);
      rep.max_continuity = std::max(rep.max_continuity, chk.continuity_modulus);
      rep.transitions.push_back(std::move(chk));
    }
  }

  // Triples a -> b -> c, including round trips c == a.
  const int per_triple = std::max(1, samples / 10);
  for (const Chart& a : atlas.charts()) {
    for (const Chart& b : atlas.charts()) {
      if (b.id == a.id || atlas.transition(a.id, b.id) == nullptr) continue;
      for (const Chart& c : atlas.charts()) {
        if (c.id == b.id) continue;
        int hits = 0;
        for (int attempt = 0; attempt < 20 * per_triple && hits < per_triple; ++attempt) {
          const GridIndex t = std::uniform_int_distribution<GridIndex>(0, grid.size() - 1)(rng);
          const Point p{a.id, random_in_polydisk(n, 0.999, rng), t};
          auto zb = atlas.try_transfer(p, b.id);
          auto zc = atlas.try_transfer(p, c.id);
          if (!zb || !zc) continue;
          auto zbc = atlas.try_transfer({b.id, *zb, t}, c.id);
          if (!zbc) continue;
          ++hits;
          ++rep.cocycle_samples;
          const double d = sup(*zc - *zbc);
          if (d > rep.cocycle_residual) {
            rep.cocycle_residual = d;
            rep.cocycle_witness = describe(p) + " via chart " + std::to_string(b.id) + " to chart " + std::to_string(c.id);
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace holosect
