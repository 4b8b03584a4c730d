// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "holosect/analysis.hpp"
#include "holosect/base_algebra.hpp"
#include "holosect/errors.hpp"
#include "holosect/fixtures.hpp"
#include "holosect/sections.hpp"
#include "holosect/spray.hpp"
#include "support.hpp"

using namespace holosect;
using testsupport::scalar;
using testsupport::sup;
namespace oracle = testsupport::oracle;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail << "failed: " << what << "; ";
    ok = ok && cond;
  }
};

// Healthy family with a constant store and a normal chart at the loop section.
struct Setup {
  testsupport::Healthy h;
  CompactSystem cs;
  std::unique_ptr<ConstantStore> store;
  Section u;
  std::optional<NormalChart> nc;
};

constexpr int kMetricSamples = 192;
constexpr ExpSampling kExpSampling{6, 6, 6, 4};

Setup& setup(const std::string& name) {
  static std::map<std::string, std::unique_ptr<Setup>> cache;
  auto& slot = cache[name];
  if (!slot) {
    slot = std::make_unique<Setup>();
    Setup& s = *slot;
    s.h.atlas = make_fixture(name, 16);
    s.cs = build_compact_system(s.h.atlas, 0.1, {1000, 7});
    s.h.bumps.emplace(build_bump_system(s.cs));
    s.store = std::make_unique<ConstantStore>(*s.h.bumps, MetricSampling{kMetricSamples, 3}, kExpSampling);
    s.u = testsupport::loop_section(*s.h.atlas);
    s.nc.emplace(NormalChart::build(s.u, *s.store));
  }
  return *slot;
}

struct SupportPair {
  std::vector<ChartId> support;
  ChartId psi;
};

SupportPair pair_of(const std::string& name) {
  if (name == "torus-pencil") return {{1, 3, 4, 5, 7}, 1};
  return {{0, 1}, 0};
}

cplx overlap_point(Rng& rng, double lo, double hi) {
  return std::polar(uniform(rng, lo, hi), uniform(rng, 0.0, 2.0 * std::numbers::pi));
}

const std::vector<std::string> kHealthy{"product-p1", "twisted-p1", "torus-pencil"};

// 1
void christoffel_check(Verdict& v) {
  const auto atlas = make_fixture("twisted-p1", 16);
  Rng rng(101);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const GridIndex t = static_cast<GridIndex>(s % 16);
    const cplx z = overlap_point(rng, 0.55, 0.95);
    const Christoffel g = christoffel(*atlas, 1, 0, scalar(z), t);
    worst = std::max(worst, std::abs(g[0](0, 0) - oracle::inversion_christoffel(z)));
  }
  v.detail << "inversion max error " << worst << "; ";
  v.require(worst <= 1e-9, "inversion symbol within 1e-9");

  const auto torus = make_fixture("torus-pencil", 16);
  int hits = 0;
  int nonzero = 0;
  for (int s = 0; s < 5000 && hits < 100; ++s) {
    const ChartId psi = static_cast<ChartId>(s % 9);
    const ChartId phi = static_cast<ChartId>((s / 9) % 9);
    const Point p{psi, random_in_polydisk(1, 0.95, rng), static_cast<GridIndex>(s % 16)};
    if (phi == psi || !torus->contains(phi, p)) continue;
    ++hits;
    if (christoffel(*torus, phi, psi, p.z, p.t)[0](0, 0) != cplx(0.0)) ++nonzero;
  }
  v.detail << "torus samples " << hits << " nonzero " << nonzero;
  v.require(hits == 100 && nonzero == 0, "affine transitions give zero symbols");

  // symmetry in the lower indices, two-dimensional fiber
  const auto open = make_open_model(4, 2);
  const Christoffel g2 = christoffel(*open, 0, 0, Vec::Zero(2), 1);
  for (const Mat& m : g2) v.require(m == m.transpose(), "symmetric symbols");
}

// 2
void exp_identities(Verdict& v) {
  for (const std::string& name : kHealthy) {
    const Setup& s = setup(name);
    const BumpSystem& b = *s.h.bumps;
    const SupportPair sp = pair_of(name);
    Rng rng(201);
    double zero_err = 0.0;
    double deriv_err = 0.0;
    double line_err = 0.0;
    double agree = 0.0;
    const auto base = compact_base(b, sp.support);
    for (int k = 0; k < 100; ++k) {
      const GridIndex t = base[static_cast<std::size_t>(k) % base.size()];
      const Vec z = sample_compact(b, sp.support, sp.psi, t, rng);
      const auto ws = sample_weightings(b.atlas().chart_count(), sp.support, 2, rng);
      const SprayContext ctx(b, sp.support, sp.psi, t, ws[static_cast<std::size_t>(k) % ws.size()]);
      const Vec zdot = random_in_ball(1, 0.02, rng);
      if (k < 20) {
        const SprayState e0 = exp_map(ctx, Vec::Zero(1), z);
        zero_err = std::max({zero_err, sup(e0.zdot), sup(e0.z - z)});
        deriv_err = std::max(deriv_err, sup(Mat(exp_derivative(ctx, Vec::Zero(1), z) - Mat::Identity(1, 1))));
        const SprayContext trivial(b, sp.support, sp.psi, t, Weighting::dirac(b.atlas().chart_count(), sp.psi));
        const auto traj = exp_trajectory(trivial, zdot, z, 16);
        for (int j = 0; j <= 16; ++j) line_err = std::max(line_err, sup(traj[j].z - (z + (j / 16.0) * zdot)));
      }
      const PicardResult p = picard_exp(ctx, zdot, z);
      const SprayState e = exp_map(ctx, zdot, z);
      agree = std::max({agree, sup(p.state.z - e.z), sup(p.state.zdot - e.zdot)});
    }
    v.detail << name << ": exp(0) " << zero_err << " De(0)-I " << deriv_err << " line " << line_err << " rk4/picard "
             << agree << "; ";
    v.require(zero_err <= 1e-15, name + " exp(0, z) = (0, z)");
    v.require(deriv_err <= 1e-6, name + " derivative at zero");
    v.require(line_err <= 1e-10, name + " trivial geodesics are lines");
    v.require(agree <= 1e-6, name + " rk4 against picard");
  }
}

// 3
void naturality(Verdict& v) {
  const Setup& s = setup("twisted-p1");
  const BumpSystem& b = *s.h.bumps;
  Rng rng(301);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const GridIndex t = static_cast<GridIndex>(k % 16);
    const cplx a = oracle::twist(b.atlas().grid().coord(t));
    // flat spray of chart 1 seen from chart 0
    const SprayContext ctx(b, {0, 1}, 0, t, Weighting::dirac(2, 1));
    const cplx z0 = overlap_point(rng, 0.65, 0.8);
    const cplx zdot0 = random_in_ball(1, 0.04, rng)(0);
    const auto traj = exp_trajectory(ctx, scalar(zdot0), scalar(z0), 64);
    const cplx w0 = oracle::inversion(z0, a);
    const cplx wdot0 = oracle::inversion_derivative(z0, a) * zdot0;
    for (int j = 0; j <= 64; ++j) {
      const double sj = j / 64.0;
      worst = std::max(worst, std::abs(oracle::inversion(traj[j].z(0), a) - oracle::line(w0, wdot0, sj)));
    }
  }
  v.detail << "max deviation from a line " << worst;
  v.require(worst <= 1e-6, "pushed trajectories are straight");
}

// 4
void inverse_exp_check(Verdict& v) {
  for (const std::string& name : kHealthy) {
    Setup& s = setup(name);
    const BumpSystem& b = *s.h.bumps;
    const SupportPair sp = pair_of(name);
    const ExpConstants c = s.store->exp(sp.support, sp.psi);
    Rng rng(401);
    double trip_w = 0.0;
    double trip_v = 0.0;
    double ratio = 0.0;
    const auto base = compact_base(b, sp.support);
    for (int k = 0; k < 50; ++k) {
      const GridIndex t = base[static_cast<std::size_t>(k) % base.size()];
      const Vec z = sample_compact(b, sp.support, sp.psi, t, rng);
      const auto ws = sample_weightings(b.atlas().chart_count(), sp.support, 2, rng);
      const SprayContext ctx(b, sp.support, sp.psi, t, ws[static_cast<std::size_t>(k) % ws.size()]);
      const Vec zdot = random_in_ball(1, c.delta0a, rng);
      const InverseResult back = inverse_exp(ctx, exp_map(ctx, zdot, z).z, z);
      trip_v = std::max(trip_v, sup(back.zdot - zdot));
      const Vec w = z + random_in_ball(1, c.delta0b, rng);
      const InverseResult h = inverse_exp(ctx, w, z);
      trip_w = std::max(trip_w, sup(exp_map(ctx, h.zdot, z).z - w));
      for (const auto* r : {&back.ratios, &h.ratios}) {
        for (double x : *r) ratio = std::max(ratio, x);
      }
    }
    v.detail << name << ": h(e) " << trip_v << " e(h) " << trip_w << " contraction " << ratio << "; ";
    v.require(trip_v <= 1e-9 && trip_w <= 1e-9, name + " round trips");
    v.require(ratio <= 0.5, name + " contraction factor");
  }
}

// 5
void taylor_bounds(Verdict& v) {
  Rng rng(501);
  int trials = 0;
  int violations = 0;
  double worst_d = 0.0;
  double worst_r = 0.0;
  std::string witness;
  for (int k = 0; k < 1000; ++k) {
    const int n = k % 4 == 3 ? 2 : 1;
    const double eps = uniform(rng, 0.05, 2.0);
    // f_i = sum over monomials of degree <= 3, coefficients normalized so |f| < 1 on the eps-ball
    std::vector<std::vector<std::pair<std::vector<int>, cplx>>> terms(static_cast<std::size_t>(n));
    for (auto& comp : terms) {
      double mass = 0.0;
      for (int d0 = 0; d0 <= 3; ++d0) {
        for (int d1 = 0; d1 <= (n == 2 ? 3 - d0 : 0); ++d1) {
          const cplx coef = random_in_ball(1, 1.0, rng)(0);
          std::vector<int> alpha{d0};
          if (n == 2) alpha.push_back(d1);
          comp.push_back({alpha, coef});
          mass += std::abs(coef) * std::pow(eps, d0 + d1);
        }
      }
      const double target = uniform(rng, 0.1, 0.99) / std::sqrt(double(n));
      for (auto& term : comp) term.second *= target / mass;
    }
    const FiberMap f = [&terms, n](const Vec& z) {
      Vec out = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        for (const auto& [alpha, coef] : terms[static_cast<std::size_t>(i)]) {
          cplx m = coef;
          for (int j = 0; j < n; ++j) m *= std::pow(z(j), alpha[static_cast<std::size_t>(j)]);
          out(i) += m;
        }
      }
      return out;
    };
    ++trials;
    try {
      const TaylorBoundReport r = taylor_bound_verify(f, eps, n, 8, rng);
      worst_d = std::max(worst_d, r.derivative_norm / r.derivative_bound);
      worst_r = std::max(worst_r, r.worst_remainder_ratio);
    } catch (const BoundViolation& e) {
      ++violations;
      witness = e.witness();
    }
  }
  v.detail << trials << " maps, violations " << violations << ", worst derivative ratio " << worst_d
           << ", worst remainder ratio " << worst_r;
  if (!witness.empty()) v.detail << ", witness " << witness;
  v.require(trials >= 1000 && violations == 0, "no bound violations");
}

// 6
void normal_charts(Verdict& v) {
  for (const std::string& name : {"twisted-p1", "torus-pencil"}) {
    const Setup& s = setup(name);
    const NormalChart& nc = *s.nc;
    Rng rng(601);
    double center = 0.0;
    for (GridIndex t = 0; t < nc.size(); ++t) center = std::max(center, sup(nc.psi(s.u[t])));
    const DerivativeBoundReport db = sample_derivative_bound(nc, 4, rng);
    v.detail << name << ": centre " << center << " sup|D psi^-1| " << db.sampled_sup << " <= " << db.bound;
    v.require(center == 0.0, std::string(name) + " psi(u) = 0");
    v.require(db.passed(), std::string(name) + " inverse derivative bound");
    std::size_t checks = 0;
    for (double r : {0.25, 0.5, 0.75}) {
      for (double eps : {0.1, 0.01}) {
        const UniformContinuityReport rep = certify_uniform_continuity(nc, r, eps, 2, rng);
        checks += rep.checks;
        if (!rep.passed()) v.detail << " witness (" << r << ", " << eps << "): " << rep.witness;
        v.require(rep.passed(), std::string(name) + " uniform continuity");
      }
    }
    v.detail << " continuity checks " << checks << "; ";
  }
}

// 7
void transitions(Verdict& v) {
  Setup& s = setup("twisted-p1");
  const NormalChart& nc = *s.nc;
  std::vector<Point> pts;
  for (GridIndex t = 0; t < nc.size(); ++t) {
    const Vec x = Vec::Ones(1) * (0.3 / nc.tangent_norm(t, Vec::Ones(1)));
    pts.push_back(nc.psi_inverse(t, x));
  }
  const NormalChart nv = NormalChart::build(make_section(*s.h.atlas, pts), *s.store);
  const std::vector<Vec> x0(nc.size(), Vec::Zero(1));
  Rng rng(701);
  const TransitionJacobian jac = transition_jacobian(nc, nv, x0, rng);
  double comm = 0.0;
  for (int k = 0; k < 50; ++k) {
    std::vector<Vec> h;
    AlgebraElement a{Vec(static_cast<Eigen::Index>(nc.size()))};
    for (GridIndex t = 0; t < nc.size(); ++t) {
      h.push_back(random_in_ball(1, 1.0, rng));
      a.values(static_cast<Eigen::Index>(t)) = random_in_ball(1, 2.0, rng)(0);
    }
    comm = std::max(comm, commutation_residual(jac, h, a));
  }
  const double worst_norm = *std::max_element(jac.norms.begin(), jac.norms.end());
  v.detail << "eps " << jac.eps << " commutation " << comm << " norm " << worst_norm << " <= " << jac.bound;
  v.require(comm <= 1e-8, "commutes with multiplication");
  v.require(jac.within_bound(), "per-t norm bound");
  try {
    const FrechetReport fr = frechet_remainder_report(nc, nv, x0, jac, 6, rng);
    v.detail << " remainder ratio " << fr.worst_ratio << " slopes";
    for (double x : fr.slopes) v.detail << " " << x;
    v.require(!fr.roundoff_only, "remainder above rounding");
    v.require(fr.slopes.size() == 6, "slope per probe");
    for (double x : fr.slopes) v.require(std::abs(x - 2.0) <= 0.1, "quadratic slope");
  } catch (const BoundViolation& e) {
    v.require(false, std::string("quadratic remainder bound: ") + e.witness());
  }
}

// 8
void chart_bijection(Verdict& v) {
  for (const std::string& name : {"twisted-p1", "torus-pencil"}) {
    const Setup& s = setup(name);
    const NormalChart& nc = *s.nc;
    Rng rng(801);
    double trip = 0.0;
    for (int k = 0; k < 5; ++k) {
      std::vector<Vec> x;
      for (GridIndex t = 0; t < nc.size(); ++t) x.push_back(0.95 * random_in_ball(1, 1.0, rng) / nc.tangent_norm(t, Vec::Ones(1)));
      const Section img = chart_inverse(nc, chart_vectors(nc, x));
      const auto back = chart_coordinates(nc, chart_forward(nc, img));
      for (GridIndex t = 0; t < nc.size(); ++t) trip = std::max(trip, sup(back[t] - x[t]));
      // and from the section side
      const Section again = chart_inverse(nc, chart_forward(nc, img));
      for (GridIndex t = 0; t < nc.size(); ++t) trip = std::max(trip, sup(again[t].z - img[t].z));
    }
    double lip = 0.0;
    for (int k = 0; k < 50; ++k) {
      const GridIndex t = static_cast<GridIndex>(k % 16);
      const double unit = 1.0 / nc.tangent_norm(t, Vec::Ones(1));
      const Vec x = 0.9 * unit * random_in_ball(1, 1.0, rng);
      const Vec y = 0.9 * unit * random_in_ball(1, 1.0, rng);
      lip = std::max(lip, nc.distance()(nc.psi_inverse(t, x), nc.psi_inverse(t, y)) / nc.tangent_norm(t, x - y));
    }
    const double bound = nc.constants().derivative_bound;
    v.detail << name << ": round trip " << trip << " lipschitz " << lip << " <= " << bound << "; ";
    v.require(trip <= 1e-8, std::string(name) + " round trips");
    v.require(lip <= bound, std::string(name) + " lipschitz");
  }
}

// 9
void partition_structure(Verdict& v) {
  for (const std::string& name : kHealthy) {
    const Setup& s = setup(name);
    const Atlas& atlas = *s.h.atlas;
    const BumpSystem& b = *s.h.bumps;
    const PartitionOfUnity& chi = s.nc->partition();
    double sum_err = 0.0;
    int outside = 0;
    for (GridIndex t = 0; t < s.u.size(); ++t) {
      double total = 0.0;
      for (std::size_t id = 0; id < atlas.chart_count(); ++id) {
        const double x = chi.at(static_cast<ChartId>(id), t);
        total += x;
        if (x < 0.0) ++outside;
        if (x > 0.0) {
          auto z = atlas.try_transfer(s.u[t], static_cast<ChartId>(id));
          if (!z || sup(*z) >= b.r0() || !b.compact().base(static_cast<ChartId>(id))[t]) ++outside;
        }
      }
      sum_err = std::max(sum_err, std::abs(total - 1.0));
      // R_t holds every chart carrying weight at t
      for (std::size_t id = 0; id < atlas.chart_count(); ++id) {
        if (chi.at(static_cast<ChartId>(id), t) > 0.0) {
          const auto& r = s.nc->support(t);
          if (std::find(r.begin(), r.end(), static_cast<ChartId>(id)) == r.end()) ++outside;
        }
      }
    }
    Rng rng(901);
    double lowest = std::numeric_limits<double>::infinity();
    int leaks = 0;
    for (GridIndex t = 0; t < atlas.grid().size(); ++t) {
      for (int k = 0; k < 1000; ++k) {
        const Point p = sample_fiber_point(atlas, t, rng);
        lowest = std::min(lowest, b.total(p));
        for (const Chart& c : atlas.charts()) {
          if (b.value(c.id, p) > 0.0 && sup(atlas.transfer(p, c.id)) >= b.r0()) ++leaks;
        }
      }
    }
    v.detail << name << ": |sum chi - 1| " << sum_err << " support violations " << outside + leaks << " min sum rho "
             << lowest << "; ";
    v.require(sum_err <= 1e-12, name + " partition sums to one");
    v.require(outside == 0 && leaks == 0, name + " supports");
    v.require(lowest > 0.0, name + " bumps cover");
  }
}

struct FrameStats {
  double ortho = 0.0;
  double fwd_inv = 0.0;
  double inv_fwd = 0.0;
  int sandwich_fail = 0;
};

FrameStats frame_stats(const BumpSystem& b, const Section& u, Rng& rng) {
  const int n = b.atlas().dim();
  const std::size_t nt = u.size();
  Frame f;
  for (int k = 0; k < n; ++k) {
    TangentSection s;
    for (GridIndex t = 0; t < nt; ++t) s.vectors.push_back({u[t], u[t].chart, random_unit(n, rng)});
    f.vectors.push_back(s);
  }
  const FrameTrivialization tr = gram_schmidt_frame(b, u, f);
  FrameStats st;
  for (GridIndex t = 0; t < nt; ++t) {
    for (int a = 0; a < n; ++a) {
      for (int c = 0; c < n; ++c) {
        const cplx ip = inner(b, tr.orthonormal.vectors[a][t], tr.orthonormal.vectors[c][t]);
        st.ortho = std::max(st.ortho, std::abs(ip - (a == c ? 1.0 : 0.0)));
      }
    }
  }
  for (int k = 0; k < 1000; ++k) {
    std::vector<AlgebraElement> z;
    for (int j = 0; j < n; ++j) {
      AlgebraElement e{Vec(static_cast<Eigen::Index>(nt))};
      for (GridIndex t = 0; t < nt; ++t) e.values(static_cast<Eigen::Index>(t)) = random_in_ball(1, 3.0, rng)(0);
      z.push_back(e);
    }
    const TangentSection v = tr.forward(z);
    const auto back = tr.inverse(v);
    double zmax = 0.0;
    for (int j = 0; j < n; ++j) {
      st.inv_fwd = std::max(st.inv_fwd, sup_norm(back[j] - z[j]));
      zmax = std::max(zmax, sup_norm(z[j]));
    }
    const double vn = tangent_section_norm(b, v);
    if (zmax > vn * (1.0 + 1e-12) || vn > n * zmax * (1.0 + 1e-12)) ++st.sandwich_fail;

    TangentSection w;
    for (GridIndex t = 0; t < nt; ++t) w.vectors.push_back({u[t], u[t].chart, random_in_ball(n, 2.0, rng)});
    const TangentSection ww = tr.forward(tr.inverse(w));
    for (GridIndex t = 0; t < nt; ++t) st.fwd_inv = std::max(st.fwd_inv, sup(Vec(ww[t].zdot - w[t].zdot)));
  }
  return st;
}

// 10
void frames(Verdict& v) {
  Rng rng(1001);
  const Setup& s = setup("twisted-p1");
  const FrameStats a = frame_stats(*s.h.bumps, s.u, rng);
  const BumpSystem flat = testsupport::flat_model(2, 16, BumpProfile::kSmooth);
  std::vector<Point> pts;
  for (GridIndex t = 0; t < 16; ++t) pts.push_back({0, random_in_polydisk(2, 0.6, rng), t});
  const FrameStats c = frame_stats(flat, make_section(flat.atlas(), pts), rng);
  for (const auto& [label, st] : {std::pair{"twisted-p1", a}, std::pair{"polydisk n=2", c}}) {
    v.detail << label << ": orthonormality " << st.ortho << " F(Finv) " << st.fwd_inv << " Finv(F) " << st.inv_fwd
             << " sandwich failures " << st.sandwich_fail << "; ";
    v.require(st.ortho <= 1e-10, "orthonormal frame");
    v.require(st.fwd_inv <= 1e-10 && st.inv_fwd <= 1e-10, "trivialization inverses");
    v.require(st.sandwich_fail == 0, "norm sandwich");
  }
}

// 11
void negative_controls(Verdict& v) {
  const AtlasReport bad = atlas_validate(*make_fixture("twisted-p1-corrupt", 16), {}, 1000);
  std::string hw;
  for (const auto& tr : bad.transitions) {
    if (!tr.holomorphy_witness.empty()) hw = tr.holomorphy_witness;
  }
  v.detail << "corrupt holomorphy residual " << bad.max_holomorphy << " witness [" << hw << "]; ";
  v.require(!bad.holomorphic() && !hw.empty(), "corrupt fixture rejected with a witness");
  const AtlasReport good = atlas_validate(*make_fixture("twisted-p1", 16), {}, 1000);
  v.require(good.holomorphic(), "healthy twisted fixture accepted");

  const std::vector<Vec> samples{scalar(0.6), scalar(cplx(0.0, 0.7)), scalar(cplx(-0.5, -0.4))};
  auto modulus = [&](TwistKind kind, std::size_t n) {
    const auto atlas = make_p1_family({.grid = n, .twist = kind});
    const TransitionMap* tr = atlas->transition(0, 1);
    const FamilyMap f = [tr](const Vec& z, GridIndex t) { return *tr->apply(z, t); };
    return param_continuity(f, atlas->grid(), samples, {1}, 0.1);
  };
  const ContinuityReport j16 = modulus(TwistKind::kJump, 16);
  const ContinuityReport j64 = modulus(TwistKind::kJump, 64);
  const double ratio = j64.modulus / j16.modulus;
  v.detail << "jump modulus ratio under 4x refinement " << ratio << " witness t=" << j64.witness_t
           << " s=" << j64.witness_s << "; ";
  v.require(ratio >= 0.75 && j64.witness_t != j64.witness_s, "jump fails refinement with a witness");
  const double w_ratio = modulus(TwistKind::kWinding, 64).modulus / modulus(TwistKind::kWinding, 16).modulus;
  v.require(w_ratio < 0.75, "winding twist shrinks under refinement");

  const BaseGrid g = BaseGrid::circle(8);
  const ModuleMap shift = [](const ModuleElement& u) {
    ModuleElement out = u;
    const Eigen::Index n = u.components[0].values.size();
    for (Eigen::Index t = 0; t < n; ++t) out.components[0].values(t) = u.components[0].values((t + 1) % n);
    return out;
  };
  Rng rng(1101);
  ModuleElement p{{AlgebraElement{Vec(8)}}};
  for (Eigen::Index t = 0; t < 8; ++t) p.components[0].values(t) = random_in_ball(1, 1.0, rng)(0);
  const LorchDerivative d = lorch_derivative(shift, p);
  v.detail << "permutation diagonality residual " << d.diagonality_residual << " witness (" << d.witness_t << ", "
           << d.witness_s << ")";
  v.require(d.diagonality_residual > 0.5 && d.witness_t != d.witness_s, "permutation rejected with a witness");
}

// 12
void revalidation(Verdict& v) {
  for (const std::string& name : {"twisted-p1", "torus-pencil"}) {
    Setup& s = setup(name);
    const BumpSystem& b = *s.h.bumps;
    std::vector<Revalidation> all;
    all.push_back(revalidate_compact_system(s.cs, {1000, 1207}));
    const MetricConstants m = s.store->metric();
    for (auto& r : revalidate_metric_constants(b, m, {kMetricSamples, 1208})) all.push_back(r);
    for (auto& r : revalidate_chart_constants(b, s.store->distance(), m, {kMetricSamples, 1209})) all.push_back(r);
    const SupportPair sp = pair_of(name);
    const ExpConstants e = s.store->exp(sp.support, sp.psi);
    ExpSampling holdout = kExpSampling;
    holdout.seed = 1210;
    for (auto& r : revalidate_exp_constants(b, sp.support, sp.psi, e, holdout)) all.push_back(r);
    v.detail << name << ":";
    for (const Revalidation& r : all) {
      v.detail << " " << r.constant << "=" << r.value << " (" << r.checks - r.violations << "/" << r.checks << ")";
      if (!r.passed()) v.detail << " witness " << r.witness;
      v.require(r.passed(), name + " " + r.constant);
    }
    v.detail << "; ";
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"christoffel symbols", christoffel_check},
      {"exponential map identities", exp_identities},
      {"geodesic naturality", naturality},
      {"inverse exponential", inverse_exp_check},
      {"holomorphic map bounds", taylor_bounds},
      {"normal chart certification", normal_charts},
      {"chart transition derivative", transitions},
      {"chart bijection and lipschitz", chart_bijection},
      {"partition and bumps", partition_structure},
      {"frame trivialization", frames},
      {"negative controls", negative_controls},
      {"constant revalidation", revalidation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.ok) ++failed;
    std::cout << (v.ok ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << " [" << secs << " s] "
              << v.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
