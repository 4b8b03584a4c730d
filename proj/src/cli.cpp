#include "holosect/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "holosect/errors.hpp"
#include "holosect/fixtures.hpp"
#include "holosect/sections.hpp"
#include "holosect/spray.hpp"

namespace holosect {

using nlohmann::json;

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t k) { return seed * 7919u + k; }

double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

cplx parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError("complex numbers are written as [re, im]");
}

json revalidation_json(const std::vector<Revalidation>& rs) {
  json a = json::array();
  for (const auto& r : rs) {
    json e{{"constant", r.constant}, {"value", r.value}, {"checks", r.checks},
           {"violations", r.violations}, {"passed", r.passed()}};
    if (!r.witness.empty()) e["witness"] = r.witness;
    a.push_back(e);
  }
  return a;
}

bool all_passed(const std::vector<Revalidation>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const Revalidation& r) { return r.passed(); });
}

std::string join(const std::vector<ChartId>& ids) {
  std::string s;
  for (ChartId id : ids) s += (s.empty() ? "" : ",") + std::to_string(id);
  return "{" + s + "}";
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"atlas", "bumps", "metric", "spray", "sections"};
  return names;
}

json tolerances_json(const Tolerances& t) {
  return {{"holomorphy", t.holomorphy},
          {"cocycle", t.cocycle},
          {"point_equality", t.point_equality},
          {"christoffel_symmetry", t.christoffel_symmetry},
          {"exp_identity", t.exp_identity},
          {"picard_agreement", t.picard_agreement},
          {"inverse_roundtrip", t.inverse_roundtrip},
          {"chart_roundtrip", t.chart_roundtrip},
          {"commutation", t.commutation},
          {"frame", t.frame},
          {"partition", t.partition},
          {"refinement_ratio", t.refinement_ratio}};
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    if (doc.contains("schema") && doc["schema"].get<std::string>() != kConfigSchema) {
      throw ConfigError("unsupported schema '" + doc["schema"].get<std::string>() + "'");
    }
    static const std::set<std::string> known{"schema", "fixture", "family", "grid",      "suites",  "suite",
                                             "out",    "seed",    "margin", "tolerances", "section", "timing"};
    for (const auto& [key, value] : doc.items()) {
      if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    if (doc.contains("fixture")) c.fixture = doc["fixture"].get<std::string>();
    if (doc.contains("family")) {
      if (!doc["family"].is_object() || !doc["family"].contains("kind")) {
        throw ConfigError("family description needs a 'kind'");
      }
      c.family = doc["family"];
    }
    if (doc.contains("grid")) {
      const auto g = doc["grid"].get<long long>();
      if (g < 3) throw ConfigError("grid must have at least 3 points");
      c.grid = static_cast<std::size_t>(g);
    }
    for (const char* key : {"suites", "suite"}) {
      if (!doc.contains(key)) continue;
      c.suites.clear();
      if (doc[key].is_string()) {
        c.suites.push_back(doc[key].get<std::string>());
      } else {
        for (const auto& s : doc[key]) c.suites.push_back(s.get<std::string>());
      }
    }
    for (const auto& s : c.suites) {
      if (s != "all" && std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end()) {
        throw ConfigError("unknown suite '" + s + "'");
      }
    }
    if (doc.contains("out")) c.out = doc["out"].get<std::string>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("timing")) c.timing = doc["timing"].get<bool>();
    if (doc.contains("margin")) {
      c.margin = doc["margin"].get<double>();
      if (!(c.margin > 0.0 && c.margin < 0.25)) throw ConfigError("margin must lie in (0, 0.25)");
    }
    if (doc.contains("tolerances")) {
      const json& t = doc["tolerances"];
      json current = tolerances_json(c.tolerances);
      for (const auto& [key, value] : t.items()) {
        if (!current.contains(key)) throw ConfigError("unknown tolerance '" + key + "'");
        if (!value.is_number() || value.get<double>() < 0.0) throw ConfigError("tolerance '" + key + "' must be >= 0");
        current[key] = value;
      }
      Tolerances& o = c.tolerances;
      o.holomorphy = current["holomorphy"];
      o.cocycle = current["cocycle"];
      o.point_equality = current["point_equality"];
      o.christoffel_symmetry = current["christoffel_symmetry"];
      o.exp_identity = current["exp_identity"];
      o.picard_agreement = current["picard_agreement"];
      o.inverse_roundtrip = current["inverse_roundtrip"];
      o.chart_roundtrip = current["chart_roundtrip"];
      o.commutation = current["commutation"];
      o.frame = current["frame"];
      o.partition = current["partition"];
      o.refinement_ratio = current["refinement_ratio"];
    }
    if (doc.contains("section")) {
      for (const auto& p : doc["section"]) {
        SectionPoint s;
        s.chart = p.at("chart").get<int>();
        s.t = p.at("t").get<std::size_t>();
        const json& z = p.at("z");
        if (z.is_array() && !z.empty() && z[0].is_array()) {
          s.z.resize(static_cast<Eigen::Index>(z.size()));
          for (std::size_t k = 0; k < z.size(); ++k) s.z(static_cast<Eigen::Index>(k)) = parse_complex(z[k]);
        } else {
          s.z.resize(1);
          s.z(0) = parse_complex(z);
        }
        c.section.push_back(std::move(s));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::shared_ptr<const Atlas> build_family(const RunConfig& config, std::size_t grid) {
  if (grid < 3) throw ConfigError("grid must have at least 3 points");
  if (!config.family) return make_fixture(config.fixture, grid);
  const json& f = *config.family;
  const json params = f.value("params", json::object());
  try {
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "p1") {
      P1Options o;
      o.grid = grid;
      o.rho = params.value("rho", o.rho);
      const std::string twist = params.value("twist", std::string("none"));
      if (twist == "none") {
        o.twist = TwistKind::kNone;
      } else if (twist == "winding") {
        o.twist = TwistKind::kWinding;
      } else if (twist == "jump") {
        o.twist = TwistKind::kJump;
      } else {
        throw ConfigError("unknown twist '" + twist + "'");
      }
      o.winding = params.value("winding", o.winding);
      o.jump = params.value("jump", o.jump);
      o.conjugate = params.value("conjugate", o.conjugate);
      return make_p1_family(o);
    }
    if (kind == "torus") {
      TorusOptions o;
      o.grid = grid;
      if (params.contains("tau0")) o.tau0 = parse_complex(params["tau0"]);
      if (params.contains("tau1")) o.tau1 = parse_complex(params["tau1"]);
      o.chart_radius = params.value("chart_radius", o.chart_radius);
      o.per_side = params.value("per_side", o.per_side);
      return make_torus_pencil(o);
    }
    throw FixtureError("unknown family kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed family description: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid family parameters: ") + e.what());
  }
}

namespace {

// Default base section. P1: a loop on the overlap circle. Torus: a small loop at the middle chart centre.
Section default_section(const Atlas& atlas) {
  const BaseGrid& grid = atlas.grid();
  std::vector<Point> pts;
  const bool torus = atlas.chart_count() > 2;
  const ChartId chart = torus ? static_cast<ChartId>(atlas.chart_count() / 2) : 0;
  for (GridIndex t = 0; t < grid.size(); ++t) {
    const double angle = grid.kind() == BaseGrid::Kind::kCircle ? grid.coord(t) : 2.0 * std::numbers::pi * grid.coord(t);
    double radius = 0.05;
    if (!torus) {
      Vec one = Vec::Ones(atlas.dim());
      auto w = atlas.transition(0, 1) ? atlas.transition(0, 1)->apply(one, t) : std::nullopt;
      radius = w ? std::sqrt(std::abs((*w)(0))) : 0.5;
    }
    Vec z = Vec::Zero(atlas.dim());
    z(0) = std::polar(radius, angle);
    pts.push_back({chart, z, t});
  }
  return make_section(atlas, pts);
}

Section configured_section(const RunConfig& cfg, const Atlas& atlas) {
  if (cfg.section.empty()) return default_section(atlas);
  std::vector<Point> pts;
  for (const auto& s : cfg.section) pts.push_back({s.chart, s.z, s.t});
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.t < b.t; });
  try {
    return make_section(atlas, pts);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid section: ") + e.what());
  }
}

struct Env {
  const RunConfig& cfg;
  std::shared_ptr<const Atlas> atlas;
  std::optional<BumpSystem> bumps;
  std::unique_ptr<ConstantStore> store;
  std::optional<Section> section;

  void ensure_bumps() {
    if (bumps) return;
    const CompactSystem cs = build_compact_system(atlas, cfg.margin, {1000, derive(cfg.seed, 1)});
    bumps.emplace(build_bump_system(cs, {1000, derive(cfg.seed, 2)}));
    store = std::make_unique<ConstantStore>(*bumps, MetricSampling{192, derive(cfg.seed, 3)},
                                            ExpSampling{8, 8, 8, derive(cfg.seed, 4)});
  }
  const Section& base_section() {
    if (!section) section = configured_section(cfg, *atlas);
    return *section;
  }
  // (R_t, psi_t) pairs realized by the base section.
  std::set<std::pair<std::vector<ChartId>, ChartId>> pairs() {
    ensure_bumps();
    const auto chi = partition_of_unity(*bumps, base_section());
    const auto sets = support_sets(atlas->grid(), chi);
    std::set<std::pair<std::vector<ChartId>, ChartId>> out;
    for (const auto& r : sets) out.insert({r, r.front()});
    return out;
  }
};

json suite_atlas(Env& env) {
  const Tolerances& tol = env.cfg.tolerances;
  const AtlasTolerances at{tol.holomorphy, tol.cocycle, tol.point_equality};
  const AtlasReport rep = atlas_validate(*env.atlas, at, 1000, derive(env.cfg.seed, 10));
  const auto refined_atlas = build_family(env.cfg, 2 * env.cfg.grid);
  const AtlasReport refined = atlas_validate(*refined_atlas, at, 200, derive(env.cfg.seed, 11));
  const double ratio = rep.max_continuity > 1e-12 ? refined.max_continuity / rep.max_continuity : 0.0;
  const bool continuous = ratio <= tol.refinement_ratio;
  json j;
  j["holomorphy_residual"] = rep.max_holomorphy;
  j["cocycle_residual"] = rep.cocycle_residual;
  j["cocycle_samples"] = rep.cocycle_samples;
  j["continuity_modulus"] = rep.max_continuity;
  j["continuity_modulus_refined"] = refined.max_continuity;
  j["continuity_refinement_ratio"] = ratio;
  j["mesh"] = rep.mesh;
  json tr = json::array();
  for (const auto& t : rep.transitions) {
    json e{{"from", t.from}, {"to", t.to}, {"samples", t.samples}, {"holomorphy_residual", t.holomorphy_residual},
           {"continuity_modulus", t.continuity_modulus}};
    if (t.holomorphy_residual > tol.holomorphy) e["holomorphy_witness"] = t.holomorphy_witness;
    tr.push_back(e);
  }
  j["transitions"] = tr;
  json w = json::object();
  if (!rep.holomorphic()) {
    for (const auto& t : rep.transitions) {
      if (t.holomorphy_residual > tol.holomorphy) {
        w["holomorphy"] = "chart " + std::to_string(t.from) + " -> " + std::to_string(t.to) + ": " + t.holomorphy_witness;
        break;
      }
    }
  }
  if (!rep.cocycle_ok()) w["cocycle"] = rep.cocycle_witness;
  if (!continuous) {
    for (const auto& t : refined.transitions) {
      if (t.continuity_modulus == refined.max_continuity) w["continuity"] = t.continuity_witness;
    }
  }
  if (!w.empty()) j["witnesses"] = w;
  j["passed"] = rep.holomorphic() && rep.cocycle_ok() && continuous;
  return j;
}

json suite_bumps(Env& env) {
  env.ensure_bumps();
  const BumpSystem& b = *env.bumps;
  const Atlas& atlas = *env.atlas;
  Rng rng(derive(env.cfg.seed, 20));
  double min_total = std::numeric_limits<double>::infinity();
  std::string witness;
  for (GridIndex t = 0; t < atlas.grid().size(); ++t) {
    for (int s = 0; s < 1000; ++s) {
      const Point p = sample_fiber_point(atlas, t, rng);
      const double total = b.total(p);
      if (total < min_total) {
        min_total = total;
        witness = describe(p);
      }
    }
  }
  const Revalidation r0 = revalidate_compact_system(b.compact(), {1000, derive(env.cfg.seed, 21)});
  json j{{"r0", b.r0()}, {"r1", b.r1()}, {"r2", b.r2()}, {"margin", b.compact().margin},
         {"samples_per_t", 1000}, {"min_bump_total", min_total}, {"revalidation", revalidation_json({r0})}};
  j["passed"] = min_total > 0.0 && r0.passed();
  if (!(min_total > 0.0)) j["witnesses"] = {{"coverage", witness}};
  return j;
}

json suite_metric(Env& env) {
  env.ensure_bumps();
  const MetricConstants& c = env.store->metric();
  const MetricSampling holdout{env.store->metric_sampling().samples, derive(env.cfg.seed, 30)};
  auto rv = revalidate_metric_constants(*env.bumps, c, holdout);
  const auto rc = revalidate_chart_constants(*env.bumps, env.store->distance(), c, holdout);
  rv.insert(rv.end(), rc.begin(), rc.end());
  json j{{"constants", {{"C1a", c.c1a}, {"C1b", c.c1b}, {"delta2", c.delta2}, {"C2", c.c2}}},
         {"revalidation", revalidation_json(rv)}};
  j["passed"] = all_passed(rv);
  return j;
}

json suite_spray(Env& env) {
  env.ensure_bumps();
  const Tolerances& tol = env.cfg.tolerances;
  const BumpSystem& b = *env.bumps;
  const Atlas& atlas = *env.atlas;
  Rng rng(derive(env.cfg.seed, 40));
  json pairs = json::array();
  bool passed = true;
  double symmetry = 0.0, zero = 0.0, identity = 0.0, straight = 0.0, picard = 0.0, inverse = 0.0;
  double contraction = 0.0;
  for (const auto& [support, psi] : env.pairs()) {
    const ExpConstants c = env.store->exp(support, psi);
    const ExpSampling holdout{env.store->exp_cache().sampling().points, env.store->exp_cache().sampling().directions,
                              env.store->exp_cache().sampling().dirichlet, derive(env.cfg.seed, 41)};
    const auto rv = revalidate_exp_constants(b, support, psi, c, holdout);
    passed = passed && all_passed(rv);
    pairs.push_back({{"support", join(support)},
                     {"display_chart", psi},
                     {"constants", {{"alpha0", c.alpha0}, {"beta0", c.beta0}, {"delta0a", c.delta0a}, {"delta0b", c.delta0b}}},
                     {"revalidation", revalidation_json(rv)}});

    const auto ts = compact_base(b, support);
    for (int s = 0; s < 10; ++s) {
      const GridIndex t = ts[std::uniform_int_distribution<std::size_t>(0, ts.size() - 1)(rng)];
      const Vec z = sample_compact(b, support, psi, t, rng);
      const auto ws = sample_weightings(atlas.chart_count(), support, 1, rng);
      const SprayContext ctx(b, support, psi, t, ws[std::uniform_int_distribution<std::size_t>(0, ws.size() - 1)(rng)]);
      for (ChartId phi : support) {
        for (const Mat& g : christoffel(atlas, phi, psi, z, t)) symmetry = std::max(symmetry, (g - g.transpose()).cwiseAbs().maxCoeff());
      }
      const Vec zero_v = Vec::Zero(atlas.dim());
      const SprayState e0 = exp_map(ctx, zero_v, z);
      zero = std::max({zero, sup(e0.zdot), sup(e0.z - z)});
      identity = std::max(identity, (exp_derivative(ctx, zero_v, z) - Mat::Identity(atlas.dim(), atlas.dim())).cwiseAbs().maxCoeff());
      const Vec zdot = random_in_ball(atlas.dim(), 0.5 * c.delta0a, rng);
      const SprayContext flat(b, support, psi, t, Weighting::dirac(atlas.chart_count(), psi));
      const SprayState ef = exp_map(flat, zdot, z);
      straight = std::max({straight, sup(ef.z - (z + zdot)), sup(ef.zdot - zdot)});
      const SprayState e = exp_map(ctx, zdot, z);
      const PicardResult pr = picard_exp(ctx, zdot, z);
      picard = std::max({picard, sup(e.z - pr.state.z), sup(e.zdot - pr.state.zdot)});
      const InverseResult inv = inverse_exp(ctx, e.z, z);
      inverse = std::max({inverse, sup(inv.zdot - zdot), sup(exp_map(ctx, inv.zdot, z).z - e.z)});
      for (double r : inv.ratios) contraction = std::max(contraction, r);
    }
  }
  json j{{"pairs", pairs},
         {"christoffel_symmetry_residual", symmetry},
         {"exp_at_zero_residual", zero},
         {"exp_derivative_identity_residual", identity},
         {"trivial_weighting_line_residual", straight},
         {"rk4_picard_residual", picard},
         {"inverse_roundtrip_residual", inverse},
         {"inverse_contraction_factor", contraction}};
  passed = passed && symmetry <= tol.christoffel_symmetry && zero == 0.0 && identity <= tol.exp_identity &&
           straight <= 1e-10 && picard <= tol.picard_agreement && inverse <= tol.inverse_roundtrip && contraction <= 0.5;
  j["passed"] = passed;
  return j;
}

json suite_sections(Env& env) {
  env.ensure_bumps();
  const Tolerances& tol = env.cfg.tolerances;
  const BumpSystem& b = *env.bumps;
  const Atlas& atlas = *env.atlas;
  const Section& u = env.base_section();
  Rng rng(derive(env.cfg.seed, 50));
  json j;
  json w = json::object();
  bool passed = true;

  const SectionContinuity cont = section_continuity(atlas, u);
  j["section_continuity_modulus"] = cont.modulus;
  const NormalChart nc = NormalChart::build(u, *env.store);
  const auto& c = nc.constants();
  j["constants"] = {{"alpha0", c.exp.alpha0}, {"beta0", c.exp.beta0},  {"delta0a", c.exp.delta0a},
                    {"delta0b", c.exp.delta0b}, {"C1a", c.metric.c1a},  {"C1b", c.metric.c1b},
                    {"delta2", c.metric.delta2}, {"C2", c.metric.c2},   {"m", c.m},
                    {"scale", c.scale},          {"derivative_bound", c.derivative_bound}};

  double partition = 0.0;
  std::size_t support_violations = 0;
  double center = 0.0;
  for (GridIndex t = 0; t < u.size(); ++t) {
    double total = 0.0;
    for (std::size_t id = 0; id < atlas.chart_count(); ++id) {
      const double x = nc.partition().at(static_cast<ChartId>(id), t);
      total += x;
      if (x > 0.0) {
        auto z = atlas.try_transfer(u[t], static_cast<ChartId>(id));
        if (!z || sup(*z) >= b.r0()) ++support_violations;
      }
    }
    partition = std::max(partition, std::abs(total - 1.0));
    center = std::max(center, nc.tangent_norm(t, nc.psi(u[t])));
  }
  j["partition_sum_residual"] = partition;
  j["partition_support_violations"] = support_violations;
  j["center_coordinate_norm"] = center;
  passed = passed && partition <= tol.partition && support_violations == 0 && center == 0.0;

  const DerivativeBoundReport db = sample_derivative_bound(nc, 2, rng);
  j["inverse_derivative"] = {{"sampled_sup", db.sampled_sup}, {"bound", db.bound}, {"samples", db.samples}};
  passed = passed && db.passed();
  if (!db.passed()) w["inverse_derivative"] = "t=" + std::to_string(db.witness_t);

  json uc = json::array();
  for (double r : {0.25, 0.5, 0.75}) {
    for (double eps : {0.1, 0.01}) {
      const UniformContinuityReport rep = certify_uniform_continuity(nc, r, eps, 2, rng);
      json e{{"r", r}, {"eps", eps}, {"delta", rep.delta}, {"checks", rep.checks}, {"violations", rep.violations},
             {"worst_ratio", rep.worst_ratio}};
      if (!rep.passed()) {
        e["witness"] = rep.witness;
        passed = false;
      }
      uc.push_back(e);
    }
  }
  j["uniform_continuity"] = uc;

  // Nearby section: fixed displacement of 0.3 in chart coordinates.
  std::vector<Vec> shift;
  std::vector<Point> vp;
  for (GridIndex t = 0; t < u.size(); ++t) {
    Vec x = Vec::Ones(atlas.dim());
    x *= 0.3 / nc.tangent_norm(t, x);
    shift.push_back(x);
    vp.push_back(nc.psi_inverse(t, x));
  }
  const Section v = make_section(atlas, vp);
  const TangentSection fv = chart_forward(nc, v);
  const Section back = chart_inverse(nc, fv);
  double roundtrip = 0.0;
  for (GridIndex t = 0; t < u.size(); ++t) {
    roundtrip = std::max({roundtrip, sup(atlas.transfer(back[t], v[t].chart) - v[t].z), sup(fv[t].zdot - shift[t])});
  }
  j["chart_roundtrip_residual"] = roundtrip;
  passed = passed && roundtrip <= tol.chart_roundtrip;

  const NormalChart nv = NormalChart::build(v, *env.store);
  const std::vector<Vec> x0(u.size(), Vec::Zero(atlas.dim()));
  const TransitionJacobian jac = transition_jacobian(nc, nv, x0, rng);
  double worst_norm = 0.0;
  for (double x : jac.norms) worst_norm = std::max(worst_norm, x);
  double commutation = 0.0;
  for (int k = 0; k < 10; ++k) {
    std::vector<Vec> h;
    for (GridIndex t = 0; t < u.size(); ++t) h.push_back(random_in_ball(atlas.dim(), 1.0, rng));
    AlgebraElement a{Vec(u.size())};
    for (GridIndex t = 0; t < u.size(); ++t) a.values(static_cast<Eigen::Index>(t)) = random_in_ball(1, 1.0, rng)(0);
    commutation = std::max(commutation, commutation_residual(jac, h, a));
  }
  json jj{{"eps", jac.eps}, {"max_norm", worst_norm}, {"norm_bound", jac.bound},
          {"off_diagonal", jac.off_diagonal}, {"commutation_residual", commutation}};
  passed = passed && jac.within_bound() && commutation <= tol.commutation;
  try {
    const FrechetReport fr = frechet_remainder_report(nc, nv, x0, jac, 2, rng);
    jj["remainder_worst_ratio"] = fr.worst_ratio;
    jj["remainder_slopes"] = fr.slopes;
    jj["remainder_roundoff_only"] = fr.roundoff_only;
    if (!fr.roundoff_only)
      for (double s : fr.slopes) passed = passed && std::abs(s - 2.0) <= 0.1;
  } catch (const BoundViolation& e) {
    passed = false;
    w["remainder"] = e.witness();
  }
  j["transition"] = jj;

  Frame frame;
  for (int k = 0; k < atlas.dim(); ++k) {
    TangentSection s;
    for (GridIndex t = 0; t < u.size(); ++t) {
      Vec d = Vec::Zero(atlas.dim());
      d(k) = 1.0;
      if (k + 1 < atlas.dim()) d(k + 1) = cplx(0.0, 0.3);
      d(k) += cplx(0.2 * std::cos(double(t)), 0.0);
      s.vectors.push_back({u[t], u[t].chart, d});
    }
    frame.vectors.push_back(std::move(s));
  }
  const FrameTrivialization tr = gram_schmidt_frame(b, u, frame);
  double ortho = 0.0;
  double inverse = 0.0;
  for (GridIndex t = 0; t < u.size(); ++t) {
    for (int a = 0; a < atlas.dim(); ++a) {
      for (int bb = 0; bb < atlas.dim(); ++bb) {
        const cplx ip = inner(b, tr.orthonormal.vectors[a][t], tr.orthonormal.vectors[bb][t]);
        ortho = std::max(ortho, std::abs(ip - (a == bb ? 1.0 : 0.0)));
      }
    }
  }
  std::vector<AlgebraElement> z;
  for (int k = 0; k < atlas.dim(); ++k) {
    AlgebraElement e{Vec(u.size())};
    for (GridIndex t = 0; t < u.size(); ++t) e.values(static_cast<Eigen::Index>(t)) = random_in_ball(1, 1.0, rng)(0);
    z.push_back(e);
  }
  const auto zz = tr.inverse(tr.forward(z));
  for (int k = 0; k < atlas.dim(); ++k) inverse = std::max(inverse, sup_norm(zz[k] - z[k]));
  j["frame"] = {{"orthonormality_residual", ortho}, {"inverse_residual", inverse}};
  passed = passed && ortho <= tol.frame && inverse <= tol.frame;

  if (!w.empty()) j["witnesses"] = w;
  j["passed"] = passed;
  return j;
}

using SuiteFn = json (*)(Env&);

}  // namespace

RunResult run(const RunConfig& config) {
  std::vector<std::string> selected;
  const bool all = std::find(config.suites.begin(), config.suites.end(), "all") != config.suites.end();
  for (const auto& s : suite_names()) {
    if (all || std::find(config.suites.begin(), config.suites.end(), s) != config.suites.end()) selected.push_back(s);
  }
  if (selected.empty()) throw ConfigError("no suites selected");

  Env env{config, build_family(config, config.grid), std::nullopt, nullptr, std::nullopt};
  const std::vector<std::pair<std::string, SuiteFn>> table{{"atlas", suite_atlas},
                                                           {"bumps", suite_bumps},
                                                           {"metric", suite_metric},
                                                           {"spray", suite_spray},
                                                           {"sections", suite_sections}};
  RunResult out;
  out.passed = true;
  json suites = json::array();
  bool blocked = false;
  for (const auto& [name, fn] : table) {
    if (std::find(selected.begin(), selected.end(), name) == selected.end()) continue;
    json s;
    const auto start = std::chrono::steady_clock::now();
    if (blocked) {
      s = {{"passed", false}, {"skipped", "an earlier suite failed"}};
    } else {
      try {
        s = fn(env);
      } catch (const Error& e) {
        s = {{"passed", false}, {"error", e.what()}};
      }
    }
    s["name"] = name;
    if (config.timing) {
      s["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    const bool ok = s["passed"].get<bool>();
    out.passed = out.passed && ok;
    blocked = blocked || !ok;
    suites.push_back(s);
  }
  out.report = {{"schema", kReportSchema},
                {"family", env.atlas->name()},
                {"grid", config.grid},
                {"seed", config.seed},
                {"margin", config.margin},
                {"tolerances", tolerances_json(config.tolerances)},
                {"suites", suites},
                {"passed", out.passed}};
  return out;
}

json constants_report(const RunConfig& config) {
  Env env{config, build_family(config, config.grid), std::nullopt, nullptr, std::nullopt};
  env.ensure_bumps();
  json j{{"schema", kReportSchema}, {"family", env.atlas->name()}, {"grid", config.grid}, {"seed", config.seed}};
  j["r0"] = env.bumps->r0();
  const json metric = suite_metric(env);
  j["metric"] = metric;
  json pairs = json::array();
  bool passed = metric["passed"].get<bool>();
  for (const auto& [support, psi] : env.pairs()) {
    const ExpConstants c = env.store->exp(support, psi);
    const ExpSampling& s = env.store->exp_cache().sampling();
    const auto rv = revalidate_exp_constants(*env.bumps, support, psi, c, {s.points, s.directions, s.dirichlet, derive(config.seed, 41)});
    passed = passed && all_passed(rv);
    pairs.push_back({{"support", join(support)},
                     {"display_chart", psi},
                     {"constants", {{"alpha0", c.alpha0}, {"beta0", c.beta0}, {"delta0a", c.delta0a}, {"delta0b", c.delta0b}}},
                     {"revalidation", revalidation_json(rv)}});
  }
  j["exp"] = pairs;
  j["passed"] = passed;
  return j;
}

std::string describe_fixture(const RunConfig& config) {
  const auto atlas = build_family(config, config.grid);
  std::ostringstream os;
  os << "family: " << atlas->name() << "\n";
  os << "charts: " << atlas->chart_count() << "\n";
  os << "fiber dimension: " << atlas->dim() << "\n";
  os << "base grid: " << (atlas->grid().kind() == BaseGrid::Kind::kCircle ? "circle" : "interval [0, 1]") << ", "
     << atlas->grid().size() << " points\n";
  for (const auto& line : atlas->notes) os << line << "\n";
  os << "suites:\n"
     << "  atlas     transition holomorphy, cocycle identity, continuity in the base under refinement\n"
     << "  bumps     compact shrinkings, bump functions and their positive sum\n"
     << "  metric    comparison constants C1a, C1b and chart constants delta2, C2, with holdout revalidation\n"
     << "  spray     Christoffel symbols, exponential map identities, Picard oracle, inverse exponential, "
        "alpha0/beta0/delta0a/delta0b\n"
     << "  sections  partition of unity, normal charts, chart transitions and their derivatives, frame "
        "trivialization\n";
  return os.str();
}

}  // namespace holosect
