#include "holosect/base_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "holosect/errors.hpp"

namespace holosect {

namespace {

void require_same_size(const AlgebraElement& a, const AlgebraElement& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("algebra elements live on different grids");
  }
}

bool all_finite(const Vec& v) {
  return std::all_of(v.data(), v.data() + v.size(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

Vec flatten(const ModuleElement& u) {
  const std::size_t n = u.dim();
  const std::size_t grid = u.grid_size();
  Vec out(static_cast<Eigen::Index>(n * grid));
  for (std::size_t t = 0; t < grid; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      out(static_cast<Eigen::Index>(t * n + k)) = u.components[k](t);
    }
  }
  return out;
}

ModuleElement bump(const ModuleElement& p, std::size_t t, std::size_t k, cplx h) {
  ModuleElement q = p;
  q.components[k].values(static_cast<Eigen::Index>(t)) += h;
  return q;
}

}  // namespace

BaseGrid::BaseGrid(Kind kind, std::vector<double> coords, double a, double b)
    : kind_(kind), coords_(std::move(coords)), lo_(a), hi_(b) {
  const std::size_t n = coords_.size();
  adjacency_.resize(n);
  if (kind_ == Kind::kCircle) {
    for (std::size_t t = 0; t < n && n > 1; ++t) {
      const std::size_t next = (t + 1) % n;
      const std::size_t prev = (t + n - 1) % n;
      adjacency_[t].push_back(prev);
      if (next != prev) adjacency_[t].push_back(next);
    }
  } else {
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) adjacency_[t].push_back(t - 1);
      if (t + 1 < n) adjacency_[t].push_back(t + 1);
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    for (GridIndex s : adjacency_[t]) mesh_ = std::max(mesh_, separation(t, s));
  }
  if (n == 1) mesh_ = kind_ == Kind::kCircle ? 2.0 * std::numbers::pi : (hi_ - lo_);
}

BaseGrid BaseGrid::circle(std::size_t n) {
  if (n == 0) throw std::invalid_argument("grid must be nonempty");
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = 2.0 * std::numbers::pi * double(k) / double(n);
  return BaseGrid(Kind::kCircle, std::move(c), 0.0, 2.0 * std::numbers::pi);
}

BaseGrid BaseGrid::interval(std::size_t n, double a, double b) {
  if (n == 0) throw std::invalid_argument("grid must be nonempty");
  if (!(b > a)) throw std::invalid_argument("interval must have positive length");
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) {
    c[k] = n == 1 ? a : a + (b - a) * double(k) / double(n - 1);
  }
  return BaseGrid(Kind::kInterval, std::move(c), a, b);
}

bool BaseGrid::adjacent(GridIndex a, GridIndex b) const {
  const auto& nb = adjacency_.at(a);
  return std::find(nb.begin(), nb.end(), b) != nb.end();
}

std::vector<std::pair<GridIndex, GridIndex>> BaseGrid::adjacent_pairs() const {
  std::vector<std::pair<GridIndex, GridIndex>> out;
  for (GridIndex t = 0; t < size(); ++t) {
    for (GridIndex s : adjacency_[t]) {
      if (t < s) out.emplace_back(t, s);
    }
  }
  return out;
}

double BaseGrid::separation(GridIndex a, GridIndex b) const {
  const double d = std::abs(coords_.at(a) - coords_.at(b));
  if (kind_ == Kind::kCircle) return std::min(d, 2.0 * std::numbers::pi - d);
  return d;
}

BaseGrid BaseGrid::refined(std::size_t factor) const {
  if (kind_ == Kind::kCircle) return circle(size() * factor);
  return interval((size() - 1) * factor + 1, lo_, hi_);
}

AlgebraElement AlgebraElement::constant(const BaseGrid& grid, cplx c) {
  return {Vec::Constant(static_cast<Eigen::Index>(grid.size()), c)};
}

AlgebraElement AlgebraElement::from(const BaseGrid& grid, const std::function<cplx(double)>& f) {
  Vec v(static_cast<Eigen::Index>(grid.size()));
  for (GridIndex t = 0; t < grid.size(); ++t) v(static_cast<Eigen::Index>(t)) = f(grid.coord(t));
  return {std::move(v)};
}

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  require_same_size(a, b);
  return {a.values + b.values};
}

AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
  require_same_size(a, b);
  return {a.values - b.values};
}

AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b) {
  require_same_size(a, b);
  return {a.values.cwiseProduct(b.values)};
}

AlgebraElement operator*(cplx s, const AlgebraElement& a) { return {s * a.values}; }

ModuleElement ModuleElement::zero(const BaseGrid& grid, std::size_t n) {
  return {std::vector<AlgebraElement>(n, AlgebraElement::constant(grid, 0.0))};
}

Vec ModuleElement::at(GridIndex t) const {
  Vec z(static_cast<Eigen::Index>(dim()));
  for (std::size_t k = 0; k < dim(); ++k) z(static_cast<Eigen::Index>(k)) = components[k](t);
  return z;
}

void ModuleElement::set(GridIndex t, const Vec& z) {
  for (std::size_t k = 0; k < dim(); ++k) {
    components[k].values(static_cast<Eigen::Index>(t)) = z(static_cast<Eigen::Index>(k));
  }
}

ModuleElement operator+(const ModuleElement& a, const ModuleElement& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("module dimension mismatch");
  ModuleElement out = a;
  for (std::size_t k = 0; k < a.dim(); ++k) out.components[k] = a.components[k] + b.components[k];
  return out;
}

ModuleElement operator-(const ModuleElement& a, const ModuleElement& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("module dimension mismatch");
  ModuleElement out = a;
  for (std::size_t k = 0; k < a.dim(); ++k) out.components[k] = a.components[k] - b.components[k];
  return out;
}

ModuleElement operator*(const AlgebraElement& f, const ModuleElement& u) {
  ModuleElement out = u;
  for (auto& c : out.components) c = f * c;
  return out;
}

ModuleElement operator*(cplx s, const ModuleElement& u) {
  ModuleElement out = u;
  for (auto& c : out.components) c = s * c;
  return out;
}

double sup_norm(const AlgebraElement& f) {
  return f.values.size() == 0 ? 0.0 : f.values.cwiseAbs().maxCoeff();
}

double module_norm(const ModuleElement& u) {
  double m = 0.0;
  for (const auto& c : u.components) m = std::max(m, sup_norm(c));
  return m;
}

LorchDerivative lorch_derivative(const ModuleMap& f, const ModuleElement& p, double h) {
  const std::size_t n = p.dim();
  const std::size_t grid = p.grid_size();
  const auto dim = static_cast<Eigen::Index>(n * grid);
  const cplx i(0.0, 1.0);

  auto probe = [&](const ModuleElement& q) {
    Vec out = flatten(f(q));
    if (out.size() != dim) throw std::invalid_argument("module map changed the dimension");
    if (!all_finite(out)) throw NonFinite("module map produced a non-finite value");
    return out;
  };

  Mat d_real(dim, dim);
  Mat d_imag(dim, dim);
  for (std::size_t t = 0; t < grid; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto col = static_cast<Eigen::Index>(t * n + k);
      d_real.col(col) = (probe(bump(p, t, k, h)) - probe(bump(p, t, k, -h))) / (2.0 * h);
      d_imag.col(col) = (probe(bump(p, t, k, i * h)) - probe(bump(p, t, k, -i * h))) / (2.0 * h);
    }
  }

  LorchDerivative out;
  // Wirtinger derivative with respect to z.
  out.jacobian = 0.5 * (d_real - i * d_imag);
  const Mat antilinear = d_imag - i * d_real;
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const bool same_point = static_cast<std::size_t>(r) / n == static_cast<std::size_t>(c) / n;
      if (same_point) {
        out.cr_residual = std::max(out.cr_residual, std::abs(antilinear(r, c)));
      } else {
        const double v = std::max(std::abs(d_real(r, c)), std::abs(d_imag(r, c)));
        if (v > out.diagonality_residual) {
          out.diagonality_residual = v;
          out.witness_t = static_cast<std::size_t>(r) / n;
          out.witness_s = static_cast<std::size_t>(c) / n;
        }
      }
    }
  }
  return out;
}

double convergence_radius(const PowerSeries& s, std::size_t window) {
  const std::size_t len = s.coefficients.size();
  if (window == 0 || len <= window) {
    throw std::invalid_argument("coefficient list must be longer than the window");
  }
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t k = len - window; k < len; ++k) {
    if (k == 0) continue;
    const double a = sup_norm(s.coefficients[k]);
    if (a > 0.0) r = std::min(r, std::pow(a, -1.0 / double(k)));
  }
  return r;
}

SeriesValue power_series_eval(const PowerSeries& s, const AlgebraElement& x, std::size_t window) {
  if (s.coefficients.empty()) throw std::invalid_argument("power series needs a coefficient");
  const AlgebraElement d = x - s.center;
  const double dn = sup_norm(d);
  double radius = std::numeric_limits<double>::infinity();
  if (s.coefficients.size() > window) {
    radius = convergence_radius(s, window);
    if (dn >= radius) {
      throw OutsideRadius("sup norm of x - c is " + std::to_string(dn) + ", radius estimate " +
                          std::to_string(radius));
    }
  }

  const std::size_t len = std::min(s.coefficients.size(), kSeriesMaxTerms);
  std::vector<double> bound(len);
  double power = 1.0;
  for (std::size_t k = 0; k < len; ++k) {
    bound[k] = sup_norm(s.coefficients[k]) * power;
    power *= dn;
  }
  // Cut where every remaining listed term is negligible.
  std::vector<double> suffix_max(len + 1, 0.0);
  for (std::size_t k = len; k-- > 0;) suffix_max[k] = std::max(suffix_max[k + 1], bound[k]);
  std::size_t used = len;
  for (std::size_t k = 1; k < len; ++k) {
    if (suffix_max[k] < kSeriesTermTolerance) {
      used = k;
      break;
    }
  }

  AlgebraElement acc = s.coefficients[used - 1];
  for (std::size_t k = used - 1; k-- > 0;) acc = acc * d + s.coefficients[k];

  SeriesValue out{acc, used, 0.0};
  for (std::size_t k = used; k < len; ++k) out.tail_bound += bound[k];
  if (len < s.coefficients.size() || (used == len && s.coefficients.size() > window)) {
    const double q = std::isfinite(radius) ? dn / radius : 0.0;
    if (q < 1.0) out.tail_bound += bound[len - 1] * q / (1.0 - q);
  }
  if (!all_finite(acc.values)) throw NonFinite("series value is not finite");
  return out;
}

}  // namespace holosect
