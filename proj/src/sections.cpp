#include "holosect/sections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "holosect/errors.hpp"

namespace holosect {

namespace {

constexpr double kChartTolerance = 1e-15;

std::string fmt_vec(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v(k);
  os << ")";
  return os.str();
}

// Random direction of unit norm under G.
Vec unit_under(const Mat& g, Rng& rng) {
  Vec d = random_unit(static_cast<int>(g.rows()), rng);
  return d / gram_norm(g, d);
}

}  // namespace

Section make_section(const Atlas& atlas, std::vector<Point> points) {
  if (points.size() != atlas.grid().size()) {
    throw PreconditionViolation("section needs one point per grid point");
  }
  for (GridIndex t = 0; t < points.size(); ++t) {
    if (points[t].t != t) throw PreconditionViolation("point " + std::to_string(t) + " lies over the wrong grid point");
    if (!atlas.contains(points[t].chart, points[t])) {
      throw OutsideChart("point outside its own chart", t);
    }
  }
  return Section{std::move(points)};
}

SectionContinuity section_continuity(const Atlas& atlas, const Section& u) {
  SectionContinuity out;
  for (const auto& [a, b] : atlas.grid().adjacent_pairs()) {
    double best = std::numeric_limits<double>::infinity();
    for (const Chart& c : atlas.charts()) {
      auto za = atlas.try_transfer(u[a], c.id);
      auto zb = atlas.try_transfer(u[b], c.id);
      if (za && zb) best = std::min(best, (*za - *zb).cwiseAbs().maxCoeff());
    }
    if (best > out.modulus || std::isinf(best)) {
      out.modulus = best;
      out.witness_t = a;
      out.witness_s = b;
    }
  }
  return out;
}

double tangent_section_norm(const BumpSystem& bumps, const TangentSection& v) {
  double out = 0.0;
  for (const TangentVector& x : v.vectors) out = std::max(out, norm(bumps, x));
  return out;
}

PartitionOfUnity partition_of_unity(const BumpSystem& bumps, const Section& u) {
  const Atlas& atlas = bumps.atlas();
  const std::size_t k = atlas.chart_count();
  PartitionOfUnity chi;
  chi.chi.assign(k, AlgebraElement::constant(atlas.grid(), 0.0));
  for (GridIndex t = 0; t < u.size(); ++t) {
    const auto rho = bumps.values(u[t]);
    double total = 0.0;
    for (double r : rho) total += r;
    if (!(total > 0.0)) throw NoBumpCoverage("no bump is positive at " + describe(u[t]));
    for (std::size_t id = 0; id < k; ++id) chi.chi[id].values(static_cast<Eigen::Index>(t)) = rho[id] / total;
  }
  return chi;
}

std::vector<std::vector<ChartId>> support_sets(const BaseGrid& grid, const PartitionOfUnity& chi) {
  std::vector<std::vector<ChartId>> out(grid.size());
  for (std::size_t id = 0; id < chi.chi.size(); ++id) {
    std::vector<bool> positive(grid.size());
    for (GridIndex t = 0; t < grid.size(); ++t) positive[t] = chi.at(static_cast<ChartId>(id), t) > 0.0;
    const auto closure = grid_closure(grid, positive);
    for (GridIndex t = 0; t < grid.size(); ++t) {
      if (closure[t]) out[t].push_back(static_cast<ChartId>(id));
    }
  }
  return out;
}

ConstantStore::ConstantStore(const BumpSystem& bumps, MetricSampling metric, ExpSampling exp, FiberGraphOptions graph)
    : bumps_(&bumps), metric_sampling_(metric), distance_(bumps, graph), exp_(bumps, exp) {}

const MetricConstants& ConstantStore::metric() {
  if (!metric_) {
    MetricConstants c = estimate_metric_constants(*bumps_, metric_sampling_);
    const MetricConstants d = estimate_chart_constants(*bumps_, distance_, metric_sampling_);
    c.delta2 = d.delta2;
    c.c2 = d.c2;
    metric_ = c;
  }
  return *metric_;
}

NormalChart NormalChart::build(const Section& u, ConstantStore& store) {
  const BumpSystem& bumps = store.bumps();
  const Atlas& atlas = bumps.atlas();
  NormalChart nc;
  nc.bumps_ = &bumps;
  nc.distance_ = &store.distance();
  nc.u_ = u;
  nc.chi_ = partition_of_unity(bumps, u);
  nc.support_ = support_sets(atlas.grid(), nc.chi_);
  for (GridIndex t = 0; t < u.size(); ++t) {
    for (ChartId phi : nc.support_[t]) {
      if (!bumps.compact().contains(phi, u[t])) {
        throw PreconditionViolation("section too rough: u(" + std::to_string(t) + ") is outside the compact part of chart " +
                                    std::to_string(phi) + " although the chart carries weight nearby");
      }
    }
  }

  NormalChartConstants& c = nc.constants_;
  c.metric = store.metric();
  std::set<std::pair<std::vector<ChartId>, ChartId>> pairs;
  for (GridIndex t = 0; t < u.size(); ++t) pairs.insert({nc.support_[t], nc.display(t)});
  bool first = true;
  for (const auto& [support, psi] : pairs) {
    const ExpConstants e = store.exp(support, psi);
    if (first) {
      c.exp = e;
      first = false;
      continue;
    }
    c.exp.alpha0 = std::max(c.exp.alpha0, e.alpha0);
    c.exp.beta0 = std::max(c.exp.beta0, e.beta0);
    c.exp.delta0a = std::min(c.exp.delta0a, e.delta0a);
    c.exp.delta0b = std::min(c.exp.delta0b, e.delta0b);
  }
  c.m = std::min(c.exp.delta0a, c.exp.delta0b / c.exp.alpha0);
  c.scale = c.m / c.metric.c1a;
  c.derivative_bound = c.exp.alpha0 * c.metric.c1a * c.metric.c1b;

  for (GridIndex t = 0; t < u.size(); ++t) {
    const ChartId psi = nc.display(t);
    nc.centers_.push_back(atlas.transfer(u[t], psi));
    nc.grams_.push_back(gram_matrix(bumps, {psi, nc.centers_.back(), t}, psi));
    Weighting w{std::vector<double>(atlas.chart_count(), 0.0)};
    for (std::size_t id = 0; id < w.c.size(); ++id) w.c[id] = nc.chi_.at(static_cast<ChartId>(id), t);
    nc.contexts_.emplace_back(bumps, nc.support_[t], psi, t, std::move(w));
  }
  return nc;
}

double NormalChart::tangent_norm(GridIndex t, const Vec& x) const { return gram_norm(grams_.at(t), x); }

Vec NormalChart::psi(const Point& q) const {
  const GridIndex t = q.t;
  if (t >= size()) throw OutsideChart("grid point out of range", t);
  auto w = bumps_->atlas().try_transfer(q, display(t));
  if (!w) throw OutsideChart("point outside the display chart", t);
  Vec zdot;
  try {
    zdot = inverse_exp(contexts_[t], *w, centers_[t], kChartTolerance).zdot;
  } catch (const DomainEscape& e) {
    throw OutsideChart(std::string("inverse exponential left the display domain: ") + e.what(), t);
  } catch (const NoConvergence& e) {
    throw OutsideChart(std::string("inverse exponential failed: ") + e.what(), t);
  } catch (const NonFinite& e) {
    throw OutsideChart(std::string("inverse exponential failed: ") + e.what(), t);
  } catch (const OutsideOverlap& e) {
    throw OutsideChart(std::string("inverse exponential left the overlap: ") + e.what(), t);
  }
  const Vec x = zdot / scale();
  if (tangent_norm(t, x) >= 1.0) throw OutsideChart("point outside the chart ball", t);
  return x;
}

Point NormalChart::psi_inverse(GridIndex t, const Vec& x) const {
  if (t >= size()) throw OutsideChart("grid point out of range", t);
  if (!(tangent_norm(t, x) < 1.0)) throw OutsideChart("coordinates outside the unit ball", t);
  const SprayState e = exp_map(contexts_[t], scale() * x, centers_[t]);
  return {display(t), e.z, t};
}

Mat NormalChart::psi_inverse_derivative(GridIndex t, const Vec& x) const {
  return scale() * exp_derivative(contexts_.at(t), scale() * x, centers_.at(t), 1e-5 * scale());
}

double NormalChart::psi_inverse_derivative_norm(GridIndex t, const Vec& x) const {
  const Point q = psi_inverse(t, x);
  return operator_norm(psi_inverse_derivative(t, x), grams_.at(t), gram_matrix(*bumps_, q, q.chart));
}

double NormalChart::delta_for(double r, double eps) const {
  const auto& e = constants_.exp;
  const auto& g = constants_.metric;
  const double k = constants_.m / (e.beta0 * g.c1a * g.c1b * g.c2);
  return std::min({g.delta2, e.delta0b / g.c2 * (1.0 - r), k * (1.0 - r), k * eps});
}

TangentSection chart_forward(const NormalChart& nc, const Section& v) {
  if (v.size() != nc.size()) throw PreconditionViolation("section over a different grid");
  TangentSection out;
  for (GridIndex t = 0; t < v.size(); ++t) {
    out.vectors.push_back({nc.base()[t], nc.display(t), nc.psi(v[t])});
  }
  return out;
}

Section chart_inverse(const NormalChart& nc, const TangentSection& x) {
  const auto coords = chart_coordinates(nc, x);
  Section out;
  for (GridIndex t = 0; t < coords.size(); ++t) out.points.push_back(nc.psi_inverse(t, coords[t]));
  return out;
}

TangentSection chart_vectors(const NormalChart& nc, const std::vector<Vec>& x) {
  if (x.size() != nc.size()) throw PreconditionViolation("coordinates over a different grid");
  TangentSection out;
  for (GridIndex t = 0; t < x.size(); ++t) out.vectors.push_back({nc.base()[t], nc.display(t), x[t]});
  return out;
}

std::vector<Vec> chart_coordinates(const NormalChart& nc, const TangentSection& x) {
  if (x.size() != nc.size()) throw PreconditionViolation("tangent section over a different grid");
  std::vector<Vec> out;
  for (GridIndex t = 0; t < x.size(); ++t) {
    out.push_back(pushforward(nc.bumps().atlas(), x[t], nc.display(t)).zdot);
  }
  return out;
}

DerivativeBoundReport sample_derivative_bound(const NormalChart& nc, int samples_per_t, Rng& rng) {
  DerivativeBoundReport out;
  out.bound = nc.constants().derivative_bound;
  const int n = nc.bumps().atlas().dim();
  for (GridIndex t = 0; t < nc.size(); ++t) {
    for (int s = 0; s < samples_per_t; ++s) {
      const double radius = s == 0 ? 0.0 : 0.999 * std::pow(uniform(rng), 1.0 / (2.0 * n));
      const Vec x = radius * unit_under(nc.gram(t), rng);
      const double d = nc.psi_inverse_derivative_norm(t, x);
      ++out.samples;
      if (d > out.sampled_sup) {
        out.sampled_sup = d;
        out.witness_t = t;
      }
    }
  }
  return out;
}

UniformContinuityReport certify_uniform_continuity(const NormalChart& nc, double r, double eps, int samples_per_t, Rng& rng) {
  UniformContinuityReport out;
  out.r = r;
  out.eps = eps;
  out.delta = nc.delta_for(r, eps);
  const FiberDistance& dist = nc.distance();
  const int n = nc.bumps().atlas().dim();
  for (GridIndex t = 0; t < nc.size(); ++t) {
    for (int s = 0; s < samples_per_t; ++s) {
      const double radius = s == 0 ? r : r * std::pow(uniform(rng), 1.0 / (2.0 * n));
      const Vec x = radius * unit_under(nc.gram(t), rng);
      const Point p = nc.psi_inverse(t, x);
      const Mat gp = gram_matrix(nc.bumps(), p, p.chart);
      const double frac = s % 2 == 0 ? 0.95 : uniform(rng, 0.05, 0.95);
      const Point q{p.chart, p.z + frac * out.delta * unit_under(gp, rng), t};
      if (!(dist(p, q) < out.delta)) continue;
      ++out.checks;
      try {
        const double diff = nc.tangent_norm(t, nc.psi(q) - x);
        out.worst_ratio = std::max(out.worst_ratio, diff / eps);
        if (diff >= eps) {
          ++out.violations;
          out.witness = describe(q) + " moved " + std::to_string(diff);
        }
      } catch (const OutsideChart& e) {
        ++out.violations;
        out.witness = describe(q) + ": " + e.what();
      }
    }
  }
  return out;
}

std::vector<Vec> transition_map(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x) {
  if (x.size() != from.size() || from.size() != to.size()) throw PreconditionViolation("charts over different grids");
  std::vector<Vec> out;
  for (GridIndex t = 0; t < x.size(); ++t) out.push_back(to.psi(from.psi_inverse(t, x[t])));
  return out;
}

std::vector<Vec> TransitionJacobian::apply(const std::vector<Vec>& h) const {
  const Eigen::Index n = blocks.empty() ? 0 : blocks.front().rows();
  Vec flat(static_cast<Eigen::Index>(h.size()) * n);
  for (std::size_t t = 0; t < h.size(); ++t) flat.segment(static_cast<Eigen::Index>(t) * n, n) = h[t];
  const Vec image = full * flat;
  std::vector<Vec> out;
  for (std::size_t t = 0; t < h.size(); ++t) out.push_back(image.segment(static_cast<Eigen::Index>(t) * n, n));
  return out;
}

bool TransitionJacobian::within_bound() const {
  return std::all_of(norms.begin(), norms.end(), [&](double v) { return v <= bound; });
}

double commutation_residual(const TransitionJacobian& jac, const std::vector<Vec>& h, const AlgebraElement& a) {
  std::vector<Vec> ah;
  for (std::size_t t = 0; t < h.size(); ++t) ah.push_back(a.values(static_cast<Eigen::Index>(t)) * h[t]);
  const auto lhs = jac.apply(ah);
  const auto rhs = jac.apply(h);
  double out = 0.0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    out = std::max(out, (lhs[t] - a.values(static_cast<Eigen::Index>(t)) * rhs[t]).cwiseAbs().maxCoeff());
  }
  return out;
}

double measure_overlap_margin(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x, Rng& rng,
                              int steps, int directions) {
  std::vector<std::vector<Vec>> dirs(x.size());
  double hi = 1.0;
  for (GridIndex t = 0; t < x.size(); ++t) {
    for (int d = 0; d < directions; ++d) dirs[t].push_back(unit_under(from.gram(t), rng));
    hi = std::min(hi, 1.0 - from.tangent_norm(t, x[t]));
  }
  auto inside = [&](double r) {
    for (GridIndex t = 0; t < x.size(); ++t) {
      for (const Vec& d : dirs[t]) {
        try {
          to.psi(from.psi_inverse(t, x[t] + r * d));
        } catch (const Error&) {
          return false;
        }
      }
    }
    return true;
  };
  if (!inside(0.0)) throw OutsideOverlap("base coordinates are not in the chart overlap");
  double lo = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (inside(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

TransitionJacobian transition_jacobian(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x,
                                       Rng& rng) {
  const std::size_t nt = x.size();
  const Eigen::Index n = from.bumps().atlas().dim();
  const Eigen::Index size = static_cast<Eigen::Index>(nt) * n;
  TransitionJacobian out;
  out.eps = measure_overlap_margin(from, to, x, rng);
  if (!(out.eps > 0.0)) throw OutsideOverlap("no overlap margin around the base coordinates");
  const double h = std::min(1e-3, out.eps / 8.0);
  out.full = Mat::Zero(size, size);
  for (std::size_t t = 0; t < nt; ++t) {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto shifted = [&](double s) {
        std::vector<Vec> y = x;
        y[t](j) += s;
        const auto image = transition_map(from, to, y);
        Vec flat(size);
        for (std::size_t k = 0; k < nt; ++k) flat.segment(static_cast<Eigen::Index>(k) * n, n) = image[k];
        return flat;
      };
      out.full.col(static_cast<Eigen::Index>(t) * n + j) =
          (-shifted(2.0 * h) + 8.0 * shifted(h) - 8.0 * shifted(-h) + shifted(-2.0 * h)) / (12.0 * h);
    }
  }
  for (std::size_t t = 0; t < nt; ++t) {
    const Eigen::Index o = static_cast<Eigen::Index>(t) * n;
    out.blocks.push_back(out.full.block(o, o, n, n));
    out.norms.push_back(operator_norm(out.blocks.back(), from.gram(t), to.gram(t)));
    for (std::size_t s = 0; s < nt; ++s) {
      if (s == t) continue;
      const Eigen::Index p = static_cast<Eigen::Index>(s) * n;
      out.off_diagonal = std::max(out.off_diagonal, out.full.block(p, o, n, n).cwiseAbs().maxCoeff());
    }
  }
  out.bound = 4.0 * double(n * n) / out.eps * 1.05;
  return out;
}

FrechetReport frechet_remainder_report(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x,
                                       const TransitionJacobian& jac, int probes, Rng& rng, int halvings) {
  const std::size_t nt = x.size();
  const double n = from.bumps().atlas().dim();
  FrechetReport out;
  out.eps = jac.eps;
  out.probes = probes;
  const double coeff = 16.0 * n * n * n / (jac.eps * jac.eps);
  const auto base = transition_map(from, to, x);
  for (int p = 0; p < probes; ++p) {
    std::vector<Vec> dir(nt);
    for (std::size_t t = 0; t < nt; ++t) dir[t] = unit_under(from.gram(t), rng);
    std::vector<double> logr;
    std::vector<double> logrem;
    for (int k = 0; k <= halvings; ++k) {
      const double radius = jac.eps / 4.0 * std::pow(0.5, k);
      std::vector<Vec> h(nt);
      std::vector<Vec> y(nt);
      for (std::size_t t = 0; t < nt; ++t) {
        h[t] = radius * dir[t];
        y[t] = x[t] + h[t];
      }
      const auto image = transition_map(from, to, y);
      const auto linear = jac.apply(h);
      double total = 0.0;
      for (std::size_t t = 0; t < nt; ++t) {
        const double rem = to.tangent_norm(t, image[t] - base[t] - linear[t]);
        const double ratio = rem / (coeff * radius * radius);
        out.worst_ratio = std::max(out.worst_ratio, ratio);
        if (ratio > 1.05) {
          throw BoundViolation("quadratic remainder bound fails",
                               "t=" + std::to_string(t) + " h=" + fmt_vec(h[t]) + " remainder=" + std::to_string(rem));
        }
        total += rem;
      }
      if (total > 0.0) {
        logr.push_back(std::log(radius));
        logrem.push_back(std::log(total));
      }
    }
    if (logr.size() >= 2) {
      const double mx = std::accumulate(logr.begin(), logr.end(), 0.0) / double(logr.size());
      const double my = std::accumulate(logrem.begin(), logrem.end(), 0.0) / double(logrem.size());
      double sxy = 0.0;
      double sxx = 0.0;
      for (std::size_t i = 0; i < logr.size(); ++i) {
        sxy += (logr[i] - mx) * (logrem[i] - my);
        sxx += (logr[i] - mx) * (logr[i] - mx);
      }
      out.slopes.push_back(sxy / sxx);
    }
  }
  out.roundoff_only = out.worst_ratio < kRemainderFloor;
  return out;
}

TangentSection FrameTrivialization::forward(const std::vector<AlgebraElement>& z) const {
  const std::size_t k = orthonormal.vectors.size();
  if (z.size() != k) throw PreconditionViolation("coefficient count differs from the frame size");
  TangentSection out;
  const std::size_t nt = orthonormal.vectors.front().size();
  for (GridIndex t = 0; t < nt; ++t) {
    TangentVector v = orthonormal.vectors[0][t];
    v.zdot = Vec::Zero(v.zdot.size());
    for (std::size_t j = 0; j < k; ++j) {
      v.zdot += z[j].values(static_cast<Eigen::Index>(t)) * orthonormal.vectors[j][t].zdot;
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

std::vector<AlgebraElement> FrameTrivialization::inverse(const TangentSection& v) const {
  const std::size_t k = orthonormal.vectors.size();
  const std::size_t nt = v.size();
  std::vector<AlgebraElement> out(k, AlgebraElement{Vec::Zero(static_cast<Eigen::Index>(nt))});
  for (GridIndex t = 0; t < nt; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      out[j].values(static_cast<Eigen::Index>(t)) = inner(*bumps, v[t], orthonormal.vectors[j][t]);
    }
  }
  return out;
}

FrameTrivialization gram_schmidt_frame(const BumpSystem& bumps, const Section& u, const Frame& frame) {
  const Atlas& atlas = bumps.atlas();
  const std::size_t k = frame.vectors.size();
  if (k != static_cast<std::size_t>(atlas.dim())) throw PreconditionViolation("frame needs one vector per fiber dimension");
  FrameTrivialization out;
  out.bumps = &bumps;
  out.orthonormal.vectors.assign(k, TangentSection{});
  for (GridIndex t = 0; t < u.size(); ++t) {
    const ChartId chart = u[t].chart;
    const Mat g = gram_matrix(bumps, u[t], chart);
    std::vector<Vec> v;
    for (std::size_t j = 0; j < k; ++j) v.push_back(pushforward(atlas, frame.vectors[j][t], chart).zdot);
    Mat gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) gram(a, b) = v[a].dot(g * v[b]);
    }
    if (std::abs(gram.determinant()) <= 1e-10) throw DegenerateFrame("frame vectors are dependent", t);
    std::vector<Vec> e;
    for (std::size_t j = 0; j < k; ++j) {
      Vec w = v[j];
      for (const Vec& q : e) w -= q.dot(g * w) * q;
      // Second pass for orthogonality at roundoff level.
      for (const Vec& q : e) w -= q.dot(g * w) * q;
      w /= gram_norm(g, w);
      e.push_back(w);
      out.orthonormal.vectors[j].vectors.push_back({u[t], chart, w});
    }
  }
  return out;
}

}  // namespace holosect
