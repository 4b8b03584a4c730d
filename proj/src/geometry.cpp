#include "holosect/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>

#include "holosect/errors.hpp"

namespace holosect {

namespace {

double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void require_based_at_same_point(const Atlas& atlas, const TangentVector& v, const TangentVector& w) {
  if (!same_point(atlas, v.base, w.base)) throw std::invalid_argument("tangent vectors have different base points");
}

std::vector<ChartId> charts_containing(const Atlas& atlas, const Point& p) {
  std::vector<ChartId> out;
  for (const Chart& c : atlas.charts()) {
    if (atlas.contains(c.id, p)) out.push_back(c.id);
  }
  return out;
}

std::vector<int> lattice_floor(const Vec& z, double h) {
  std::vector<int> idx;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    idx.push_back(static_cast<int>(std::floor(z(k).real() / h)));
    idx.push_back(static_cast<int>(std::floor(z(k).imag() / h)));
  }
  return idx;
}

Vec lattice_point(const std::vector<int>& idx, double h) {
  Vec z(static_cast<Eigen::Index>(idx.size() / 2));
  for (std::size_t k = 0; k < idx.size() / 2; ++k) {
    z(static_cast<Eigen::Index>(k)) = cplx(h * idx[2 * k], h * idx[2 * k + 1]);
  }
  return z;
}

// All offsets in {-r..r}^dim; `half` keeps one of each +/- pair.
std::vector<std::vector<int>> offsets(std::size_t dim, int r, bool half) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(dim, -r);
  while (true) {
    bool zero = std::all_of(cur.begin(), cur.end(), [](int v) { return v == 0; });
    bool positive = false;
    for (int v : cur) {
      if (v != 0) {
        positive = v > 0;
        break;
      }
    }
    if (!zero && (!half || positive)) out.push_back(cur);
    std::size_t k = 0;
    while (k < dim && ++cur[k] > r) cur[k++] = -r;
    if (k == dim) break;
  }
  return out;
}

int gcd(int a, int b) { return b == 0 ? std::abs(a) : gcd(b, a % b); }

}  // namespace

TangentVector pushforward(const Atlas& atlas, const TangentVector& v, ChartId target) {
  if (v.chart == target) return v;
  const Vec z = atlas.transfer(v.base, v.chart);
  atlas.transfer(v.base, target);
  const Mat j = atlas.jacobian(v.chart, target, z, v.base.t);
  return {v.base, target, j * v.zdot};
}

cplx trivial_inner(const Atlas& atlas, ChartId phi, const TangentVector& v, const TangentVector& w) {
  require_based_at_same_point(atlas, v, w);
  const Vec a = pushforward(atlas, v, phi).zdot;
  const Vec b = pushforward(atlas, w, phi).zdot;
  return b.dot(a);
}

Mat gram_matrix(const BumpSystem& bumps, const Point& p, ChartId chart) {
  const Atlas& atlas = bumps.atlas();
  const Vec z = atlas.transfer(p, chart);
  const Point pc{chart, z, p.t};
  Mat g = Mat::Zero(atlas.dim(), atlas.dim());
  double total = 0.0;
  for (const Chart& c : atlas.charts()) {
    const double rho = bumps.value(c.id, pc);
    if (rho <= 0.0) continue;
    total += rho;
    const Mat j = atlas.jacobian(chart, c.id, z, p.t);
    g += rho * j.adjoint() * j;
  }
  if (!(total > 0.0)) throw NoBumpCoverage("every bump vanishes at " + describe(p));
  return g;
}

cplx inner(const BumpSystem& bumps, const TangentVector& v, const TangentVector& w) {
  const Atlas& atlas = bumps.atlas();
  require_based_at_same_point(atlas, v, w);
  const Mat g = gram_matrix(bumps, v.base, v.chart);
  const Vec b = pushforward(atlas, w, v.chart).zdot;
  return b.dot(g * v.zdot);
}

double norm(const BumpSystem& bumps, const TangentVector& v) {
  return gram_norm(gram_matrix(bumps, v.base, v.chart), v.zdot);
}

double gram_norm(const Mat& g, const Vec& v) {
  return std::sqrt(std::max(0.0, v.dot(g * v).real()));
}

double segment_length(const BumpSystem& bumps, ChartId chart, const Vec& a, const Vec& b,
                      GridIndex t, int subdivisions) {
  const Vec step = (b - a) / double(subdivisions);
  if (step.norm() == 0.0) return 0.0;
  double len = 0.0;
  for (int k = 0; k < subdivisions; ++k) {
    const Vec mid = a + (k + 0.5) * step;
    len += gram_norm(gram_matrix(bumps, {chart, mid, t}, chart), step);
  }
  return len;
}

double curve_length(const BumpSystem& bumps, const std::vector<Point>& polyline, int subdivisions) {
  const Atlas& atlas = bumps.atlas();
  double len = 0.0;
  for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
    const Point& a = polyline[k];
    const Point& b = polyline[k + 1];
    if (a.t != b.t) throw std::invalid_argument("curve leaves the fiber");
    auto bz = atlas.try_transfer(b, a.chart);
    if (!bz) throw ChartBreak("consecutive points share no chart: " + describe(a) + " and " + describe(b));
    len += segment_length(bumps, a.chart, a.z, *bz, a.t, subdivisions);
  }
  return len;
}

struct FiberDistance::Graph {
  struct Node {
    ChartId chart;
    Vec z;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<std::map<std::vector<int>, int>> index;  // per chart
};

FiberDistance::FiberDistance(const BumpSystem& bumps, FiberGraphOptions options)
    : bumps_(&bumps), options_(options), graphs_(bumps.atlas().grid().size()) {}

FiberDistance::~FiberDistance() = default;

const FiberDistance::Graph& FiberDistance::graph(GridIndex t) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (graphs_.at(t)) return *graphs_[t];
  const Atlas& atlas = bumps_->atlas();
  const int n = atlas.dim();
  const double extent = options_.extent;
  // Keep the graph small in higher fiber dimension.
  const double h = n == 1 ? options_.spacing : extent / 3.0;
  const int m = static_cast<int>(std::floor(extent / h));
  const std::size_t dim = 2 * static_cast<std::size_t>(n);

  auto g = std::make_unique<Graph>();
  g->index.resize(atlas.chart_count());
  for (const Chart& c : atlas.charts()) {
    if (!c.base_domain[t]) continue;
    std::vector<int> cur(dim, -m);
    while (true) {
      const Vec z = lattice_point(cur, h);
      if (sup(z) < extent) {
        g->index[static_cast<std::size_t>(c.id)][cur] = static_cast<int>(g->nodes.size());
        g->nodes.push_back({c.id, z});
      }
      std::size_t k = 0;
      while (k < dim && ++cur[k] > m) cur[k++] = -m;
      if (k == dim) break;
    }
  }
  g->adj.resize(g->nodes.size());
  auto link = [&](int a, int b, double w) {
    g->adj[static_cast<std::size_t>(a)].emplace_back(b, w);
    g->adj[static_cast<std::size_t>(b)].emplace_back(a, w);
  };

  std::vector<std::vector<int>> steps;
  if (n == 1) {
    for (const auto& o : offsets(2, 2, true)) {
      if (gcd(o[0], o[1]) == 1) steps.push_back(o);
    }
  } else {
    steps = offsets(dim, 1, true);
  }
  for (const Chart& c : atlas.charts()) {
    const auto& idx = g->index[static_cast<std::size_t>(c.id)];
    for (const auto& [key, a] : idx) {
      for (const auto& s : steps) {
        std::vector<int> nb = key;
        for (std::size_t k = 0; k < dim; ++k) nb[k] += s[k];
        const auto it = idx.find(nb);
        if (it == idx.end()) continue;
        link(a, it->second,
             segment_length(*bumps_, c.id, g->nodes[static_cast<std::size_t>(a)].z,
                            g->nodes[static_cast<std::size_t>(it->second)].z, t, options_.edge_subdivisions));
      }
    }
  }
  // Cross-chart edges: from each node to the lattice cell around its image.
  const auto corners = offsets(dim, 1, false);
  const std::size_t base_count = g->nodes.size();
  for (std::size_t a = 0; a < base_count; ++a) {
    const auto node = g->nodes[a];
    for (const Chart& c : atlas.charts()) {
      if (c.id == node.chart) continue;
      auto w = atlas.try_transfer({node.chart, node.z, t}, c.id);
      if (!w || sup(*w) >= extent) continue;
      const auto base = lattice_floor(*w, h);
      const auto& idx = g->index[static_cast<std::size_t>(c.id)];
      std::vector<std::vector<int>> cell{base};
      for (const auto& o : corners) {
        if (std::all_of(o.begin(), o.end(), [](int v) { return v >= 0; })) {
          std::vector<int> k = base;
          for (std::size_t d = 0; d < dim; ++d) k[d] += o[d];
          cell.push_back(k);
        }
      }
      for (const auto& key : cell) {
        const auto it = idx.find(key);
        if (it == idx.end()) continue;
        link(static_cast<int>(a), it->second,
             segment_length(*bumps_, c.id, *w, g->nodes[static_cast<std::size_t>(it->second)].z, t,
                            options_.edge_subdivisions));
      }
    }
  }
  graphs_[t] = std::move(g);
  return *graphs_[t];
}

namespace {

// Strict order on chart representations; makes the distance exactly symmetric.
bool precedes(const Point& a, const Point& b) {
  if (a.chart != b.chart) return a.chart < b.chart;
  for (Eigen::Index k = 0; k < a.z.size(); ++k) {
    if (a.z(k).real() != b.z(k).real()) return a.z(k).real() < b.z(k).real();
    if (a.z(k).imag() != b.z(k).imag()) return a.z(k).imag() < b.z(k).imag();
  }
  return false;
}

}  // namespace

double FiberDistance::operator()(const Point& p_in, const Point& q_in) const {
  if (p_in.t != q_in.t) throw std::invalid_argument("fiber distance needs points over the same base point");
  const bool swap = precedes(q_in, p_in);
  const Point& p = swap ? q_in : p_in;
  const Point& q = swap ? p_in : q_in;
  const Atlas& atlas = bumps_->atlas();
  const GridIndex t = p.t;

  // Direct chart-straight edges between p and q.
  double best = std::numeric_limits<double>::infinity();
  bool local = false;
  for (const Chart& c : atlas.charts()) {
    auto a = atlas.try_transfer(p, c.id);
    auto b = atlas.try_transfer(q, c.id);
    if (!a || !b) continue;
    if (sup(*a - *b) < options_.spacing) local = true;
    best = std::min(best, segment_length(*bumps_, c.id, *a, *b, t, options_.query_subdivisions));
  }
  if (local || best == 0.0) return std::min(1.0, best);

  const Graph& g = graph(t);
  const int n = atlas.dim();
  const double h = n == 1 ? options_.spacing : options_.extent / 3.0;
  const std::size_t dim = 2 * static_cast<std::size_t>(n);
  const auto around = offsets(dim, 1, false);

  // Edges from an off-lattice point to nearby lattice nodes in every chart.
  auto attach = [&](const Point& x) {
    std::vector<std::pair<int, double>> out;
    for (const Chart& c : atlas.charts()) {
      auto w = atlas.try_transfer(x, c.id);
      if (!w) continue;
      const auto base = lattice_floor(*w, h);
      std::vector<std::vector<int>> keys{base};
      for (const auto& o : around) {
        std::vector<int> k = base;
        for (std::size_t d = 0; d < dim; ++d) k[d] += o[d];
        keys.push_back(k);
      }
      const auto& idx = g.index[static_cast<std::size_t>(c.id)];
      for (const auto& key : keys) {
        const auto it = idx.find(key);
        if (it == idx.end()) continue;
        out.emplace_back(it->second, segment_length(*bumps_, c.id, *w, g.nodes[static_cast<std::size_t>(it->second)].z,
                                                    t, options_.query_subdivisions));
      }
    }
    return out;
  };
  const auto from_p = attach(p);
  const auto to_q = attach(q);
  std::map<int, double> exit_cost;
  for (const auto& [node, w] : to_q) {
    auto it = exit_cost.find(node);
    if (it == exit_cost.end() || w < it->second) exit_cost[node] = w;
  }

  const double cap = std::min(1.0, best);
  std::vector<double> dist(g.nodes.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (const auto& [node, w] : from_p) {
    if (w < dist[static_cast<std::size_t>(node)]) {
      dist[static_cast<std::size_t>(node)] = w;
      queue.emplace(w, node);
    }
  }
  double answer = cap;
  while (!queue.empty()) {
    const auto [d, a] = queue.top();
    queue.pop();
    if (d >= answer) break;
    if (d > dist[static_cast<std::size_t>(a)]) continue;
    if (auto it = exit_cost.find(a); it != exit_cost.end()) answer = std::min(answer, d + it->second);
    for (const auto& [b, w] : g.adj[static_cast<std::size_t>(a)]) {
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(b)]) {
        dist[static_cast<std::size_t>(b)] = nd;
        queue.emplace(nd, b);
      }
    }
  }
  return std::min(1.0, answer);
}

double fiber_distance(const BumpSystem& bumps, const Point& p, const Point& q) {
  return FiberDistance(bumps)(p, q);
}

double section_distance(const FiberDistance& dist, const Section& u, const Section& v) {
  if (u.size() != v.size()) throw std::invalid_argument("sections over different grids");
  double d = 0.0;
  for (GridIndex t = 0; t < u.size(); ++t) d = std::max(d, dist(u[t], v[t]));
  return d;
}

Point sample_constant_region(const BumpSystem& bumps, ChartId phi, Rng& rng) {
  const Atlas& atlas = bumps.atlas();
  const auto closure = grid_closure(atlas.grid(), bumps.compact().base(phi));
  std::vector<GridIndex> ts;
  for (GridIndex t = 0; t < closure.size(); ++t) {
    if (closure[t]) ts.push_back(t);
  }
  if (ts.empty()) throw std::invalid_argument("chart has an empty compact base");
  const GridIndex t = ts[std::uniform_int_distribution<std::size_t>(0, ts.size() - 1)(rng)];
  const double radius = 0.5 * (bumps.r0() + 1.0);
  Vec z = random_in_polydisk(atlas.dim(), radius, rng);
  if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
    const auto k = std::uniform_int_distribution<Eigen::Index>(0, z.size() - 1)(rng);
    z(k) = std::polar(radius, uniform(rng, 0.0, 2.0 * std::numbers::pi));
  }
  return {phi, z, t};
}

namespace {

// Extreme ratios |v|_phi / |v|_p and |v|_p / |v|_phi at p (chart coordinates).
std::pair<double, double> comparison_ratios(const BumpSystem& bumps, const Point& p) {
  const Mat g = gram_matrix(bumps, p, p.chart);
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return {1.0 / std::sqrt(lo), std::sqrt(hi)};
}

ChartId chart_for_sample(const Atlas& atlas, int s) {
  return static_cast<ChartId>(static_cast<std::size_t>(s) % atlas.chart_count());
}

struct ChartPairSample {
  double distance;
  bool inside;
  double ratio;
  std::string where;
};

// Pairs (p, q) with q displaced along chart-straight rays from p.
std::vector<ChartPairSample> chart_pairs(const BumpSystem& bumps, const FiberDistance& dist,
                                         const Point& p, Rng& rng, double max_step) {
  const Atlas& atlas = bumps.atlas();
  std::vector<ChartPairSample> out;
  const ChartId phi = p.chart;
  for (ChartId psi : charts_containing(atlas, p)) {
    const Vec zp = atlas.transfer(p, psi);
    for (int d = 0; d < 4; ++d) {
      const Vec dir = random_unit(atlas.dim(), rng);
      for (int k = 0; k < 6; ++k) {
        const double step = max_step * std::pow(2.0, -k);
        const Point q{psi, zp + step * dir, p.t};
        if (sup(q.z) >= 1.0) continue;
        const double dq = dist(p, q);
        if (!(dq > 0.0)) continue;
        auto w = atlas.try_transfer(q, phi);
        ChartPairSample s{dq, w.has_value(), 0.0, describe(q)};
        if (w) s.ratio = (*w - p.z).norm() / dq;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace

MetricConstants estimate_metric_constants(const BumpSystem& bumps, const MetricSampling& sampling) {
  const Atlas& atlas = bumps.atlas();
  Rng rng(sampling.seed);
  double a = 0.0;
  double b = 0.0;
  const int total = sampling.samples;
  for (int s = 0; s < total; ++s) {
    const Point p = sample_constant_region(bumps, chart_for_sample(atlas, s), rng);
    const auto [ra, rb] = comparison_ratios(bumps, p);
    a = std::max(a, ra);
    b = std::max(b, rb);
  }
  MetricConstants c;
  c.c1a = kSafetyFactor * a;
  c.c1b = kSafetyFactor * b;
  return c;
}

MetricConstants estimate_chart_constants(const BumpSystem& bumps, const FiberDistance& dist,
                                         const MetricSampling& sampling) {
  const Atlas& atlas = bumps.atlas();
  Rng rng(sampling.seed);
  const double max_step = 0.08;
  std::vector<ChartPairSample> all;
  const int total = sampling.samples;
  for (int s = 0; s < total; ++s) {
    const Point p = sample_constant_region(bumps, chart_for_sample(atlas, s), rng);
    auto pairs = chart_pairs(bumps, dist, p, rng, max_step);
    all.insert(all.end(), pairs.begin(), pairs.end());
  }
  double escape = 1.0;
  for (const auto& s : all) {
    if (!s.inside) escape = std::min(escape, s.distance);
  }
  // Largest value of a half-octave ladder strictly below the escape distance.
  double delta2 = 1.0;
  while (delta2 >= escape) delta2 *= std::pow(2.0, -0.5);
  double ratio = 0.0;
  for (const auto& s : all) {
    if (s.inside && s.distance < delta2) ratio = std::max(ratio, s.ratio);
  }
  MetricConstants c;
  c.delta2 = delta2;
  c.c2 = kSafetyFactor * ratio;
  return c;
}

std::vector<Revalidation> revalidate_metric_constants(const BumpSystem& bumps, const MetricConstants& c,
                                                      const MetricSampling& holdout) {
  const Atlas& atlas = bumps.atlas();
  Rng rng(holdout.seed);
  Revalidation ra{"C1a", c.c1a};
  Revalidation rb{"C1b", c.c1b};
  const int total = holdout.samples;
  for (int s = 0; s < total; ++s) {
    const Point p = sample_constant_region(bumps, chart_for_sample(atlas, s), rng);
    const Mat g = gram_matrix(bumps, p, p.chart);
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    std::vector<Vec> probes{random_unit(atlas.dim(), rng), es.eigenvectors().col(0),
                            es.eigenvectors().col(atlas.dim() - 1)};
    for (const Vec& v : probes) {
      const double flat = v.norm();
      const double combined = gram_norm(g, v);
      ++ra.checks;
      ++rb.checks;
      if (flat > c.c1a * combined) {
        ++ra.violations;
        ra.witness = describe(p);
      }
      if (combined > c.c1b * flat) {
        ++rb.violations;
        rb.witness = describe(p);
      }
    }
  }
  return {ra, rb};
}

std::vector<Revalidation> revalidate_chart_constants(const BumpSystem& bumps, const FiberDistance& dist,
                                                     const MetricConstants& c, const MetricSampling& holdout) {
  const Atlas& atlas = bumps.atlas();
  Rng rng(holdout.seed);
  Revalidation rd{"delta2", c.delta2};
  Revalidation rc{"C2", c.c2};
  const int total = holdout.samples;
  for (int s = 0; s < total; ++s) {
    const Point p = sample_constant_region(bumps, chart_for_sample(atlas, s), rng);
    for (const auto& pair : chart_pairs(bumps, dist, p, rng, 0.08)) {
      if (pair.distance >= c.delta2) continue;
      ++rd.checks;
      if (!pair.inside) {
        ++rd.violations;
        rd.witness = pair.where;
        continue;
      }
      ++rc.checks;
      if (pair.ratio > c.c2) {
        ++rc.violations;
        rc.witness = pair.where;
      }
    }
  }
  return {rd, rc};
}

}  // namespace holosect
