#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace holosect {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using GridIndex = std::size_t;

// Finite sample of the compact base space, either points on a circle
// (coordinate = angle) or on an interval (coordinate = position).
class BaseGrid {
 public:
  enum class Kind { kCircle, kInterval };

  static BaseGrid circle(std::size_t n);
  static BaseGrid interval(std::size_t n, double a = 0.0, double b = 1.0);

  std::size_t size() const noexcept { return coords_.size(); }
  Kind kind() const noexcept { return kind_; }
  double coord(GridIndex t) const { return coords_.at(t); }
  const std::vector<GridIndex>& neighbors(GridIndex t) const { return adjacency_.at(t); }
  bool adjacent(GridIndex a, GridIndex b) const;
  // Each unordered adjacent pair once, smaller index first.
  std::vector<std::pair<GridIndex, GridIndex>> adjacent_pairs() const;
  double mesh() const noexcept { return mesh_; }
  // Separation in the reference space (arc length on the circle).
  double separation(GridIndex a, GridIndex b) const;
  // The same kind of grid with `factor` times as many points.
  BaseGrid refined(std::size_t factor) const;

 private:
  BaseGrid(Kind kind, std::vector<double> coords, double a, double b);

  Kind kind_;
  std::vector<double> coords_;
  std::vector<std::vector<GridIndex>> adjacency_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double mesh_ = 0.0;
};

// Element of C(T): one complex value per grid point.
struct AlgebraElement {
  Vec values;

  static AlgebraElement constant(const BaseGrid& grid, cplx c);
  static AlgebraElement from(const BaseGrid& grid, const std::function<cplx(double)>& f);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  cplx operator()(GridIndex t) const { return values(static_cast<Eigen::Index>(t)); }

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b);
  friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b);
  friend AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b);
  friend AlgebraElement operator*(cplx s, const AlgebraElement& a);
};

// Element of C(T)^n.
struct ModuleElement {
  std::vector<AlgebraElement> components;

  static ModuleElement zero(const BaseGrid& grid, std::size_t n);
  std::size_t dim() const { return components.size(); }
  std::size_t grid_size() const { return components.empty() ? 0 : components.front().size(); }
  // Fiber vector at t.
  Vec at(GridIndex t) const;
  void set(GridIndex t, const Vec& z);

  friend ModuleElement operator+(const ModuleElement& a, const ModuleElement& b);
  friend ModuleElement operator-(const ModuleElement& a, const ModuleElement& b);
  friend ModuleElement operator*(const AlgebraElement& f, const ModuleElement& u);
  friend ModuleElement operator*(cplx s, const ModuleElement& u);
};

double sup_norm(const AlgebraElement& f);
double module_norm(const ModuleElement& u);

using ModuleMap = std::function<ModuleElement(const ModuleElement&)>;

struct LorchDerivative {
  // Rows and columns indexed by t * n + k.
  Mat jacobian;
  double diagonality_residual = 0.0;
  double cr_residual = 0.0;
  // Grid points (row, column) of the largest cross-point entry.
  std::size_t witness_t = 0;
  std::size_t witness_s = 0;
};

LorchDerivative lorch_derivative(const ModuleMap& f, const ModuleElement& p, double h = 1e-5);

struct PowerSeries {
  std::vector<AlgebraElement> coefficients;
  AlgebraElement center;
};

struct SeriesValue {
  AlgebraElement value;
  std::size_t terms_used = 0;
  double tail_bound = 0.0;
};

inline constexpr double kSeriesTermTolerance = 1e-14;
inline constexpr std::size_t kSeriesMaxTerms = 512;

// Coefficient lists no longer than `window` are treated as polynomials.
SeriesValue power_series_eval(const PowerSeries& s, const AlgebraElement& x, std::size_t window = 8);
double convergence_radius(const PowerSeries& s, std::size_t window);

}  // namespace holosect
