#include "holosect/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "holosect/errors.hpp"

namespace holosect {

namespace {

constexpr cplx kI(0.0, 1.0);

bool finite(const Vec& v) {
  return std::all_of(v.data(), v.data() + v.size(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

Vec checked(const FiberMap& f, const Vec& z) {
  Vec out = f(z);
  if (!finite(out)) throw NonFinite("fiber map produced a non-finite value");
  return out;
}

double factorial(int k) { return k == 2 ? 2.0 : 1.0; }

std::string describe(const Vec& z) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    os << (k ? ", " : "") << z(k).real() << (z(k).imag() < 0 ? "-" : "+") << std::abs(z(k).imag())
       << "i";
  }
  os << ")";
  return os.str();
}

}  // namespace

DiscDomain DiscDomain::polydisk(const Vec& center, double radius, int nodes) {
  return {center, Eigen::VectorXd::Constant(center.size(), radius), nodes};
}

Vec cauchy_coeff(const FiberMap& f, const DiscDomain& domain, const std::vector<int>& multi_index) {
  const auto n = domain.center.size();
  if (static_cast<Eigen::Index>(multi_index.size()) != n) {
    throw std::invalid_argument("multi-index length must match the dimension");
  }
  if (domain.nodes < 16) throw std::invalid_argument("at least 16 quadrature nodes required");
  std::vector<Eigen::Index> active;
  int order = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int g = multi_index[static_cast<std::size_t>(j)];
    if (g < 0) throw std::invalid_argument("negative multi-index entry");
    if (g > 0) {
      if (!(domain.radius(j) > 0.0)) throw std::invalid_argument("contour radius must be positive");
      active.push_back(j);
    }
    order += g;
  }
  if (order > 2) throw std::invalid_argument("only derivatives up to order two are supported");
  if (active.empty()) return checked(f, domain.center);

  const int nodes = domain.nodes;
  std::vector<cplx> unit(static_cast<std::size_t>(nodes));
  for (int q = 0; q < nodes; ++q) unit[static_cast<std::size_t>(q)] = std::polar(1.0, 2.0 * std::numbers::pi * q / nodes);

  // Iterate over the torus of the active variables.
  std::vector<int> idx(active.size(), 0);
  Vec acc;
  bool first = true;
  while (true) {
    Vec z = domain.center;
    cplx weight = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Eigen::Index j = active[a];
      const cplx e = unit[static_cast<std::size_t>(idx[a])];
      z(j) += domain.radius(j) * e;
      const int g = multi_index[static_cast<std::size_t>(j)];
      weight *= g == 1 ? std::conj(e) : std::conj(e * e);
    }
    Vec term = weight * checked(f, z);
    if (first) {
      acc = term;
      first = false;
    } else {
      acc += term;
    }
    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == nodes) idx[a++] = 0;
    if (a == idx.size()) break;
  }
  double scale = 1.0;
  for (Eigen::Index j : active) {
    const int g = multi_index[static_cast<std::size_t>(j)];
    scale *= factorial(g) / (std::pow(domain.radius(j), g) * nodes);
  }
  return scale * acc;
}

Vec cauchy_coeff(const FiberMap& f, const Vec& center, double radius,
                 const std::vector<int>& multi_index, int nodes) {
  return cauchy_coeff(f, DiscDomain::polydisk(center, radius, nodes), multi_index);
}

Mat cauchy_jacobian(const FiberMap& f, const Vec& center, double radius, int nodes) {
  const auto n = center.size();
  Mat jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    std::vector<int> gamma(static_cast<std::size_t>(n), 0);
    gamma[static_cast<std::size_t>(j)] = 1;
    Vec col = cauchy_coeff(f, center, radius, gamma, nodes);
    if (j == 0) jac.resize(col.size(), n);
    jac.col(j) = col;
  }
  return jac;
}

std::vector<Mat> cauchy_hessian(const FiberMap& f, const Vec& center, double radius, int nodes) {
  const auto n = center.size();
  std::vector<Mat> hess;
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index m = l; m < n; ++m) {
      std::vector<int> gamma(static_cast<std::size_t>(n), 0);
      gamma[static_cast<std::size_t>(l)] += 1;
      gamma[static_cast<std::size_t>(m)] += 1;
      const Vec d = cauchy_coeff(f, center, radius, gamma, nodes);
      if (hess.empty()) hess.assign(static_cast<std::size_t>(d.size()), Mat::Zero(n, n));
      for (Eigen::Index k = 0; k < d.size(); ++k) {
        hess[static_cast<std::size_t>(k)](l, m) = d(k);
        hess[static_cast<std::size_t>(k)](m, l) = d(k);
      }
    }
  }
  return hess;
}

double holomorphy_residual_at(const FiberMap& f, const std::vector<Vec>& points, double h) {
  double worst = 0.0;
  for (const Vec& z : points) {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      Vec e = Vec::Zero(z.size());
      e(j) = h;
      const Vec fx = (checked(f, z + e) - checked(f, z - e)) / (2.0 * h);
      const Vec fy = (checked(f, z + kI * e) - checked(f, z - kI * e)) / (2.0 * h);
      worst = std::max(worst, (fx + kI * fy).norm());
    }
  }
  return worst;
}

double holomorphy_residual(const FiberMap& f, const DiscDomain& domain, int samples, Rng& rng,
                           double h) {
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    Vec z = domain.center;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      z(j) += std::polar(domain.radius(j) * std::sqrt(uniform(rng)), uniform(rng, 0.0, 2.0 * std::numbers::pi));
    }
    pts.push_back(std::move(z));
  }
  return holomorphy_residual_at(f, pts, h);
}

TaylorBoundReport taylor_bound_verify(const FiberMap& f, double eps, int n, int probes, Rng& rng) {
  if (!(eps > 0.0) || n < 1) throw std::invalid_argument("eps must be positive and n >= 1");
  // Unit-ball precondition on the eps-ball, interior and near-boundary.
  for (int s = 0; s < 256; ++s) {
    const Vec z = s % 2 ? random_in_ball(n, eps, rng) : Vec(0.999 * eps * random_unit(n, rng));
    const Vec w = checked(f, z);
    if (w.norm() >= 1.0) {
      throw PreconditionViolation("f leaves the unit ball at z = " + describe(z));
    }
  }

  TaylorBoundReport rep;
  rep.eps = eps;
  rep.n = n;
  rep.probes = probes;
  const Vec origin = Vec::Zero(n);
  const Mat df0 = cauchy_jacobian(f, origin, eps / 4.0);
  rep.derivative_norm = df0.size() ? Eigen::JacobiSVD<Mat>(df0).singularValues()(0) : 0.0;
  rep.derivative_bound = 4.0 * n * n / eps;
  if (rep.derivative_norm > rep.derivative_bound * (1.0 + 1e-12)) {
    throw BoundViolation("derivative bound exceeded",
                         "norm " + std::to_string(rep.derivative_norm) + " > " +
                             std::to_string(rep.derivative_bound));
  }

  const Vec f0 = checked(f, origin);
  const double c = 16.0 * n * n * n / (eps * eps);
  for (int s = 0; s < probes; ++s) {
    const Vec z = s % 4 == 0 ? Vec((eps / 4.0) * random_unit(n, rng)) : random_in_ball(n, eps / 4.0, rng);
    const double zz = z.squaredNorm();
    if (zz == 0.0) continue;
    const double rem = (checked(f, z) - f0 - df0 * z).norm();
    rep.worst_remainder_ratio = std::max(rep.worst_remainder_ratio, rem / (c * zz));
    if (rem > c * zz * (1.0 + 1e-9) + 1e-13) {
      throw BoundViolation("remainder bound exceeded", "z = " + describe(z));
    }
  }
  return rep;
}

ContinuityReport param_continuity(const FamilyMap& f, const BaseGrid& grid,
                                  const std::vector<Vec>& samples,
                                  const std::vector<int>& multi_index, double radius) {
  ContinuityReport rep;
  rep.mesh = grid.mesh();
  for (const auto& [t, s] : grid.adjacent_pairs()) {
    const FiberMap ft = [&f, t = t](const Vec& z) { return f(z, t); };
    const FiberMap fs = [&f, s = s](const Vec& z) { return f(z, s); };
    for (const Vec& z : samples) {
      const Vec a = cauchy_coeff(ft, z, radius, multi_index);
      const Vec b = cauchy_coeff(fs, z, radius, multi_index);
      const double d = (a - b).cwiseAbs().maxCoeff();
      if (d > rep.modulus) {
        rep.modulus = d;
        rep.witness_t = t;
        rep.witness_s = s;
        rep.witness_z = z;
      }
    }
  }
  return rep;
}

double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

Vec random_unit(int n, Rng& rng) {
  std::normal_distribution<double> g;
  Vec v(n);
  do {
    for (int k = 0; k < n; ++k) v(k) = cplx(g(rng), g(rng));
  } while (v.norm() == 0.0);
  return v / v.norm();
}

Vec random_in_ball(int n, double radius, Rng& rng) {
  return radius * std::pow(uniform(rng), 1.0 / (2.0 * n)) * random_unit(n, rng);
}

Vec random_in_polydisk(int n, double radius, Rng& rng) {
  Vec v(n);
  for (int k = 0; k < n; ++k) {
    v(k) = std::polar(radius * std::sqrt(uniform(rng)), uniform(rng, 0.0, 2.0 * std::numbers::pi));
  }
  return v;
}

double operator_norm(const Mat& a, const Mat& g_in, const Mat& g_out) {
  Eigen::LLT<Mat> llt(g_in);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("input Gram matrix is not positive definite");
  const Mat l_inv = llt.matrixL().solve(Mat::Identity(g_in.rows(), g_in.cols()));
  const Mat b = a * l_inv.adjoint();
  const Mat h = b.adjoint() * g_out * b;
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace holosect
