#include "holosect/spray.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "holosect/errors.hpp"
#include "holosect/ode.hpp"

namespace holosect {

namespace {

double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool finite(const Vec& v) { return v.allFinite(); }

Vec pack(const Vec& zdot, const Vec& z) {
  Vec x(zdot.size() + z.size());
  x << zdot, z;
  return x;
}

SprayState unpack(const Vec& x) {
  const Eigen::Index n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

std::string fmt_vec(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v(k);
  os << ")";
  return os.str();
}

}  // namespace

Weighting Weighting::dirac(std::size_t charts, ChartId id) {
  Weighting w{std::vector<double>(charts, 0.0)};
  w.c.at(static_cast<std::size_t>(id)) = 1.0;
  return w;
}

Weighting Weighting::barycenter(std::size_t charts, const std::vector<ChartId>& support) {
  Weighting w{std::vector<double>(charts, 0.0)};
  for (ChartId id : support) w.c.at(static_cast<std::size_t>(id)) = 1.0 / double(support.size());
  return w;
}

void Weighting::validate(const std::vector<ChartId>& support) const {
  double total = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const bool in = std::find(support.begin(), support.end(), static_cast<ChartId>(k)) != support.end();
    if (c[k] < 0.0 || c[k] > 1.0 || (!in && c[k] != 0.0)) {
      throw PreconditionViolation("weight of chart " + std::to_string(k) + " outside the weighting space");
    }
    total += c[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw PreconditionViolation("weights do not sum to one");
}

SprayContext::SprayContext(const BumpSystem& bumps, std::vector<ChartId> support, ChartId psi, GridIndex t,
                           Weighting c)
    : bumps_(&bumps), support_(std::move(support)), psi_(psi), t_(t), c_(std::move(c)) {
  std::sort(support_.begin(), support_.end());
  support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  if (support_.empty()) throw PreconditionViolation("empty chart set");
  if (std::find(support_.begin(), support_.end(), psi_) == support_.end()) {
    throw PreconditionViolation("display chart outside the chart set");
  }
  if (c_.c.size() != bumps.atlas().chart_count()) throw PreconditionViolation("weighting has the wrong length");
  c_.validate(support_);
  const auto base = compact_base(bumps, support_);
  if (std::find(base.begin(), base.end(), t_) == base.end()) {
    throw PreconditionViolation("grid point " + std::to_string(t_) + " outside the common compact base");
  }
}

void SprayContext::guard(const Vec& z) const {
  const double r = display_radius();
  if (!finite(z)) throw NonFinite("non-finite position in the spray flow");
  if (sup(z) >= r) throw DomainEscape("position " + fmt_vec(z) + " left the display polydisk");
  for (ChartId phi : support_) {
    if (phi == psi_) continue;
    auto w = atlas().try_transfer({psi_, z, t_}, phi);
    if (!w || sup(*w) >= r) {
      throw DomainEscape("position " + fmt_vec(z) + " left the display domain of chart " + std::to_string(phi));
    }
  }
}

Christoffel christoffel(const Atlas& atlas, ChartId phi, ChartId psi, const Vec& z, GridIndex t) {
  const Eigen::Index n = atlas.dim();
  Christoffel gamma(static_cast<std::size_t>(n), Mat::Zero(n, n));
  if (phi == psi) {
    atlas.transfer({psi, z, t}, psi);
    return gamma;
  }
  const Vec zeta = atlas.transfer({psi, z, t}, phi);
  const Mat j = atlas.jacobian(psi, phi, z, t);
  const Hessian h = atlas.hessian(phi, psi, zeta, t);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Mat g = -(j.transpose() * h[static_cast<std::size_t>(k)] * j);
    gamma[static_cast<std::size_t>(k)] = 0.5 * (g + g.transpose());
  }
  return gamma;
}

SprayState spray_field(const SprayContext& ctx, const Vec& zdot, const Vec& z) {
  const Atlas& atlas = ctx.atlas();
  const Eigen::Index n = atlas.dim();
  Vec acc = Vec::Zero(n);
  for (ChartId phi : ctx.support()) {
    const double c = ctx.weighting().c[static_cast<std::size_t>(phi)];
    if (c == 0.0 || phi == ctx.psi()) continue;
    const Christoffel g = christoffel(atlas, phi, ctx.psi(), z, ctx.t());
    for (Eigen::Index k = 0; k < n; ++k) {
      acc(k) += c * (zdot.transpose() * g[static_cast<std::size_t>(k)] * zdot).value();
    }
  }
  return {-acc, zdot};
}

namespace {

VectorField guarded_field(const SprayContext& ctx) {
  return [&ctx](const Vec& x) {
    const SprayState s = unpack(x);
    ctx.guard(s.z);
    const SprayState f = spray_field(ctx, s.zdot, s.z);
    return pack(f.zdot, f.z);
  };
}

}  // namespace

std::vector<SprayState> exp_trajectory(const SprayContext& ctx, const Vec& zdot, const Vec& z, int steps) {
  ctx.guard(z);
  std::vector<SprayState> out{{zdot, z}};
  rk4(guarded_field(ctx), pack(zdot, z), 1.0, steps, [&](int, const Vec& x) {
    if (!finite(x)) throw NonFinite("non-finite state in the spray flow");
    const SprayState s = unpack(x);
    ctx.guard(s.z);
    out.push_back(s);
  });
  return out;
}

SprayState exp_map(const SprayContext& ctx, const Vec& zdot, const Vec& z, int steps) {
  ctx.guard(z);
  const Vec x = rk4(guarded_field(ctx), pack(zdot, z), 1.0, steps, [&](int, const Vec& x) {
    if (!finite(x)) throw NonFinite("non-finite state in the spray flow");
    ctx.guard(unpack(x).z);
  });
  return unpack(x);
}

PicardResult picard_exp(const SprayContext& ctx, const Vec& zdot, const Vec& z, int max_iterations) {
  constexpr int kNodes = 128;
  constexpr double kTol = 1e-14;
  const VectorField f = guarded_field(ctx);
  const Vec x0 = pack(zdot, z);
  const double h = 1.0 / kNodes;
  std::vector<Vec> x(kNodes + 1, x0);
  std::vector<Vec> fx(kNodes + 1);
  PicardResult out;
  double previous = -1.0;
  for (int it = 1; it <= max_iterations; ++it) {
    for (int i = 0; i <= kNodes; ++i) fx[i] = f(x[i]);
    // Cumulative fourth-order quadrature of f over each cell.
    std::vector<Vec> next(kNodes + 1);
    next[0] = x0;
    for (int i = 0; i < kNodes; ++i) {
      Vec cell;
      if (i == 0) {
        cell = h / 24.0 * (9.0 * fx[0] + 19.0 * fx[1] - 5.0 * fx[2] + fx[3]);
      } else if (i == kNodes - 1) {
        cell = h / 24.0 * (fx[i - 2] - 5.0 * fx[i - 1] + 19.0 * fx[i] + 9.0 * fx[i + 1]);
      } else {
        cell = h / 24.0 * (-fx[i - 1] + 13.0 * fx[i] + 13.0 * fx[i + 1] - fx[i + 2]);
      }
      next[i + 1] = next[i] + cell;
    }
    double diff = 0.0;
    for (int i = 0; i <= kNodes; ++i) diff = std::max(diff, sup(next[i] - x[i]));
    if (!std::isfinite(diff)) throw NonFinite("Picard iterate is not finite");
    x = std::move(next);
    out.iterations = it;
    // Ratios near the rounding floor carry no contraction information.
    if (previous > 1e-12) out.ratios.push_back(diff / previous);
    previous = diff;
    if (diff < kTol) {
      out.state = unpack(x.back());
      ctx.guard(out.state.z);
      return out;
    }
  }
  throw NoConvergence("Picard iteration did not settle in " + std::to_string(max_iterations) + " iterations");
}

InverseResult inverse_exp(const SprayContext& ctx, const Vec& w, const Vec& z, double tol, int max_iterations) {
  InverseResult out;
  out.zdot = Vec::Zero(z.size());
  double previous = -1.0;
  for (int it = 0; it <= max_iterations; ++it) {
    const Vec r = exp_map(ctx, out.zdot, z).z - w;
    const double size = sup(r);
    if (!std::isfinite(size)) throw NonFinite("inverse iteration produced a non-finite residual");
    if (previous > 1e-11) out.ratios.push_back(size / previous);
    out.iterations = it;
    if (size < tol) return out;
    // Roundoff floor reached just above a very tight tolerance.
    if (previous >= 0.0 && size >= previous && size < 100.0 * tol) return out;
    previous = size;
    out.zdot -= r;
  }
  throw NoConvergence("inverse exponential iteration did not converge");
}

Mat exp_derivative(const SprayContext& ctx, const Vec& zdot, const Vec& z, double h) {
  const Eigen::Index n = z.size();
  Mat d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e(j) = h;
    d.col(j) = (exp_map(ctx, zdot + e, z).z - exp_map(ctx, zdot - e, z).z) / (2.0 * h);
  }
  return d;
}

std::vector<GridIndex> compact_base(const BumpSystem& bumps, const std::vector<ChartId>& support) {
  const BaseGrid& grid = bumps.atlas().grid();
  std::vector<bool> in(grid.size(), true);
  for (ChartId phi : support) {
    const auto closure = grid_closure(grid, bumps.compact().base(phi));
    for (GridIndex t = 0; t < grid.size(); ++t) in[t] = in[t] && closure[t];
  }
  std::vector<GridIndex> out;
  for (GridIndex t = 0; t < grid.size(); ++t) {
    if (in[t]) out.push_back(t);
  }
  return out;
}

namespace {

bool in_compact(const BumpSystem& bumps, const std::vector<ChartId>& support, ChartId psi, GridIndex t,
                const Vec& z) {
  for (ChartId phi : support) {
    auto w = bumps.atlas().try_transfer({psi, z, t}, phi);
    if (!w || sup(*w) > bumps.r0()) return false;
  }
  return true;
}

}  // namespace

Vec sample_compact(const BumpSystem& bumps, const std::vector<ChartId>& support, ChartId psi, GridIndex t,
                   Rng& rng) {
  const Atlas& atlas = bumps.atlas();
  const double r0 = bumps.r0();
  for (int attempt = 0; attempt < 20000; ++attempt) {
    Vec z;
    if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) {
      // Boundary ring of some chart in the set.
      const ChartId phi = support[std::uniform_int_distribution<std::size_t>(0, support.size() - 1)(rng)];
      Vec w = random_in_polydisk(atlas.dim(), r0, rng);
      const auto k = std::uniform_int_distribution<Eigen::Index>(0, w.size() - 1)(rng);
      w(k) = std::polar(r0 * (1.0 - 1e-12), uniform(rng, 0.0, 2.0 * std::numbers::pi));
      auto zp = atlas.try_transfer({phi, w, t}, psi);
      if (!zp) continue;
      z = *zp;
    } else {
      z = random_in_polydisk(atlas.dim(), r0, rng);
    }
    if (in_compact(bumps, support, psi, t, z)) return z;
  }
  throw PreconditionViolation("no sample found in the compact set over t=" + std::to_string(t));
}

std::vector<Weighting> sample_weightings(std::size_t charts, const std::vector<ChartId>& support, int dirichlet,
                                         Rng& rng) {
  std::vector<Weighting> out;
  for (ChartId id : support) out.push_back(Weighting::dirac(charts, id));
  if (support.size() == 1) return out;
  out.push_back(Weighting::barycenter(charts, support));
  std::exponential_distribution<double> expo(1.0);
  for (int k = 0; k < dirichlet; ++k) {
    Weighting w{std::vector<double>(charts, 0.0)};
    double total = 0.0;
    for (ChartId id : support) total += (w.c[static_cast<std::size_t>(id)] = expo(rng));
    for (ChartId id : support) w.c[static_cast<std::size_t>(id)] /= total;
    // Exact unit sum.
    double rest = 1.0;
    for (std::size_t i = 0; i + 1 < support.size(); ++i) rest -= w.c[static_cast<std::size_t>(support[i])];
    w.c[static_cast<std::size_t>(support.back())] = std::max(0.0, rest);
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

struct ExpSample {
  GridIndex t;
  Vec z;
  Weighting c;
  std::vector<Vec> directions;
};

std::vector<ExpSample> draw_samples(const BumpSystem& bumps, const std::vector<ChartId>& support, ChartId psi,
                                    const ExpSampling& sampling, Rng& rng) {
  const auto ts = compact_base(bumps, support);
  if (ts.empty()) throw PreconditionViolation("chart set has an empty common compact base");
  const Atlas& atlas = bumps.atlas();
  std::vector<ExpSample> out;
  for (int i = 0; i < sampling.points; ++i) {
    const GridIndex t = ts[std::uniform_int_distribution<std::size_t>(0, ts.size() - 1)(rng)];
    const Vec z = sample_compact(bumps, support, psi, t, rng);
    for (Weighting& c : sample_weightings(atlas.chart_count(), support, sampling.dirichlet, rng)) {
      ExpSample s{t, z, std::move(c), {}};
      for (int d = 0; d < sampling.directions; ++d) s.directions.push_back(random_unit(atlas.dim(), rng));
      out.push_back(std::move(s));
    }
  }
  return out;
}

double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

double inverse_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  return smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
}

bool escapes(const SprayContext& ctx, const Vec& zdot, const Vec& z) {
  try {
    exp_map(ctx, zdot, z);
    return false;
  } catch (const DomainEscape&) {
    return true;
  } catch (const NonFinite&) {
    return true;
  } catch (const OutsideOverlap&) {
    return true;
  }
}

std::string where(const ExpSample& s, const Vec& v) {
  return "t=" + std::to_string(s.t) + " z=" + fmt_vec(s.z) + " at " + fmt_vec(v);
}

}  // namespace

ExpConstants estimate_exp_constants(const BumpSystem& bumps, const std::vector<ChartId>& support, ChartId psi,
                                    const ExpSampling& sampling) {
  Rng rng(sampling.seed);
  const auto samples = draw_samples(bumps, support, psi, sampling, rng);
  std::vector<SprayContext> ctx;
  for (const auto& s : samples) ctx.emplace_back(bumps, support, psi, s.t, s.c);

  double radius = 1.0;
  while (radius > 1e-8) {
    bool escaped = false;
    for (std::size_t i = 0; i < samples.size() && !escaped; ++i) {
      for (const Vec& d : samples[i].directions) {
        if (escapes(ctx[i], radius * d, samples[i].z)) {
          escaped = true;
          break;
        }
      }
    }
    if (!escaped) break;
    radius *= kDeltaLadder;
  }
  // The ladder only saw the sampled directions; an escape in a later phase
  // shrinks the radius and starts over.
  const int n = bumps.atlas().dim();
  while (true) {
    ExpConstants c;
    c.delta0a = kDeltaDeflation * radius;
    try {
      double alpha = 1.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        for (const Vec& zdot : {Vec(random_in_ball(n, c.delta0a, rng)), Vec(c.delta0a * samples[i].directions[0])}) {
          alpha = std::max(alpha, spectral_norm(exp_derivative(ctx[i], zdot, samples[i].z)));
        }
      }
      c.alpha0 = kSafetyFactor * alpha;
      c.delta0b = c.delta0a / (2.0 * c.alpha0);

      double beta = 1.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vec& z = samples[i].z;
        for (const Vec& xi : {Vec(random_in_ball(n, c.delta0b, rng)), Vec(0.999 * c.delta0b * samples[i].directions[1 % samples[i].directions.size()])}) {
          const Vec zdot = inverse_exp(ctx[i], z + xi, z).zdot;
          beta = std::max(beta, inverse_norm(exp_derivative(ctx[i], zdot, z)));
        }
      }
      c.beta0 = kSafetyFactor * beta;
      return c;
    } catch (const Error&) {
      if (radius < 1e-8) throw;
      radius *= kDeltaLadder;
    }
  }
}

std::vector<Revalidation> revalidate_exp_constants(const BumpSystem& bumps, const std::vector<ChartId>& support,
                                                   ChartId psi, const ExpConstants& c, const ExpSampling& holdout) {
  Rng rng(holdout.seed);
  const auto samples = draw_samples(bumps, support, psi, holdout, rng);
  const int n = bumps.atlas().dim();
  Revalidation ra{"delta0a", c.delta0a};
  Revalidation rl{"alpha0", c.alpha0};
  Revalidation rb{"delta0b", c.delta0b};
  Revalidation rt{"beta0", c.beta0};
  for (const auto& s : samples) {
    const SprayContext ctx(bumps, support, psi, s.t, s.c);
    std::vector<Vec> probes{random_in_ball(n, c.delta0a, rng)};
    for (const Vec& d : s.directions) probes.push_back(0.999 * c.delta0a * d);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      ++ra.checks;
      if (escapes(ctx, probes[k], s.z)) {
        ++ra.violations;
        ra.witness = where(s, probes[k]);
        continue;
      }
      if (k > 1) continue;
      ++rl.checks;
      if (spectral_norm(exp_derivative(ctx, probes[k], s.z)) > c.alpha0) {
        ++rl.violations;
        rl.witness = where(s, probes[k]);
      }
    }
    for (const Vec& xi : {Vec(random_in_ball(n, c.delta0b, rng)), Vec(0.999 * c.delta0b * s.directions[0])}) {
      ++rb.checks;
      Vec zdot;
      try {
        zdot = inverse_exp(ctx, s.z + xi, s.z).zdot;
      } catch (const Error&) {
        ++rb.violations;
        rb.witness = where(s, xi);
        continue;
      }
      if (zdot.norm() >= c.delta0a) {
        ++rb.violations;
        rb.witness = where(s, xi);
        continue;
      }
      ++rt.checks;
      if (inverse_norm(exp_derivative(ctx, zdot, s.z)) > c.beta0) {
        ++rt.violations;
        rt.witness = where(s, xi);
      }
    }
  }
  return {ra, rl, rb, rt};
}

ExpConstants ExpConstantsCache::get(const std::vector<ChartId>& support, ChartId psi) {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto key = std::make_pair(support, psi);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const ExpConstants c = estimate_exp_constants(*bumps_, support, psi, sampling_);
  cache_[key] = c;
  return c;
}

std::map<std::pair<std::vector<ChartId>, ChartId>, ExpConstants> ExpConstantsCache::entries() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_;
}

}  // namespace holosect
