#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "holosect/geometry.hpp"
#include "holosect/spray.hpp"

namespace holosect {

// Checks pi(u(t)) = t and that every point lies in its chart.
Section make_section(const Atlas& atlas, std::vector<Point> points);

struct SectionContinuity {
  double modulus = 0.0;
  GridIndex witness_t = 0;
  GridIndex witness_s = 0;
};

// Largest coordinate jump between adjacent grid points, measured in a chart
// holding both; infinite when no chart does.
SectionContinuity section_continuity(const Atlas& atlas, const Section& u);

// Tangent vectors along a section, one per grid point.
struct TangentSection {
  std::vector<TangentVector> vectors;

  std::size_t size() const { return vectors.size(); }
  const TangentVector& operator[](GridIndex t) const { return vectors.at(t); }
};

// sup over t of the combined norm at the base point.
double tangent_section_norm(const BumpSystem& bumps, const TangentSection& v);

struct PartitionOfUnity {
  // One element per chart id.
  std::vector<AlgebraElement> chi;

  double at(ChartId id, GridIndex t) const { return chi.at(static_cast<std::size_t>(id)).values(static_cast<Eigen::Index>(t)).real(); }
};

PartitionOfUnity partition_of_unity(const BumpSystem& bumps, const Section& u);
// R_t: charts whose weight is positive at t or at a grid neighbor of t.
std::vector<std::vector<ChartId>> support_sets(const BaseGrid& grid, const PartitionOfUnity& chi);

// Constants shared by every normal chart over one bump system.
class ConstantStore {
 public:
  explicit ConstantStore(const BumpSystem& bumps, MetricSampling metric = {}, ExpSampling exp = {},
                         FiberGraphOptions graph = {});

  const BumpSystem& bumps() const noexcept { return *bumps_; }
  const FiberDistance& distance() const noexcept { return distance_; }
  // Estimated on first use.
  const MetricConstants& metric();
  ExpConstants exp(const std::vector<ChartId>& support, ChartId psi) { return exp_.get(support, psi); }
  const ExpConstantsCache& exp_cache() const noexcept { return exp_; }
  const MetricSampling& metric_sampling() const noexcept { return metric_sampling_; }

 private:
  const BumpSystem* bumps_;
  MetricSampling metric_sampling_;
  FiberDistance distance_;
  ExpConstantsCache exp_;
  std::optional<MetricConstants> metric_;
};

struct NormalChartConstants {
  ExpConstants exp;  // worst case over the (R_t, psi_t) pairs in use
  MetricConstants metric;
  // min{delta0a, delta0b / alpha0}
  double m = 0.0;
  // Radius of the chart ball in the combined norm, and the coordinate scale.
  double scale = 0.0;
  // alpha0 C1a C1b
  double derivative_bound = 0.0;
};

class NormalChart {
 public:
  // Throws PreconditionViolation when u(t) is outside M'_phi for some phi in R_t.
  static NormalChart build(const Section& u, ConstantStore& store);

  const Section& base() const noexcept { return u_; }
  const BumpSystem& bumps() const noexcept { return *bumps_; }
  const PartitionOfUnity& partition() const noexcept { return chi_; }
  const std::vector<ChartId>& support(GridIndex t) const { return support_.at(t); }
  ChartId display(GridIndex t) const { return support_.at(t).front(); }
  const NormalChartConstants& constants() const noexcept { return constants_; }
  double scale() const noexcept { return constants_.scale; }
  std::size_t size() const noexcept { return u_.size(); }

  const SprayContext& context(GridIndex t) const { return contexts_.at(t); }
  // u(t) in display coordinates.
  const Vec& center(GridIndex t) const { return centers_.at(t); }
  // Combined metric at u(t), display coordinates.
  const Mat& gram(GridIndex t) const { return grams_.at(t); }
  double tangent_norm(GridIndex t, const Vec& x) const;

  // Chart coordinates (display chart) of q over t; OutsideChart if q is not in U_t.
  Vec psi(const Point& q) const;
  // Point exp(scale * x) over t, in the display chart; OutsideChart unless |x| < 1.
  Point psi_inverse(GridIndex t, const Vec& x) const;
  // D(Psi^{-1}) at x, display coordinates on both sides.
  Mat psi_inverse_derivative(GridIndex t, const Vec& x) const;
  // Operator norm of D(Psi^{-1}) from the norm at u(t) to the norm at the image.
  double psi_inverse_derivative_norm(GridIndex t, const Vec& x) const;

  // delta for given (r, eps) from the chart constants.
  double delta_for(double r, double eps) const;
  const FiberDistance& distance() const noexcept { return *distance_; }

 private:
  NormalChart() = default;

  const BumpSystem* bumps_ = nullptr;
  const FiberDistance* distance_ = nullptr;
  Section u_;
  PartitionOfUnity chi_;
  std::vector<std::vector<ChartId>> support_;
  std::vector<Vec> centers_;
  std::vector<Mat> grams_;
  std::vector<SprayContext> contexts_;
  NormalChartConstants constants_;
};

// Tangent section of chart coordinates; OutsideChart names the first bad t.
TangentSection chart_forward(const NormalChart& nc, const Section& v);
Section chart_inverse(const NormalChart& nc, const TangentSection& x);
// Tangent section in display coordinates from raw coordinate vectors.
TangentSection chart_vectors(const NormalChart& nc, const std::vector<Vec>& x);
std::vector<Vec> chart_coordinates(const NormalChart& nc, const TangentSection& x);

struct DerivativeBoundReport {
  double sampled_sup = 0.0;
  double bound = 0.0;
  std::size_t samples = 0;
  GridIndex witness_t = 0;

  bool passed() const { return samples > 0 && sampled_sup <= bound; }
};

DerivativeBoundReport sample_derivative_bound(const NormalChart& nc, int samples_per_t, Rng& rng);

struct UniformContinuityReport {
  double r = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // largest |Psi(q) - Psi(p)| / eps
  std::string witness;

  bool passed() const { return checks > 0 && violations == 0; }
};

// Samples p with |Psi(p)| <= r and q within delta of p; checks q in U and
// |Psi(q) - Psi(p)| < eps.
UniformContinuityReport certify_uniform_continuity(const NormalChart& nc, double r, double eps, int samples_per_t, Rng& rng);

// Per-t map Phi o Psi^{-1} between two normal charts, in display coordinates.
std::vector<Vec> transition_map(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x);

struct TransitionJacobian {
  // Section-level Jacobian, (t, k) flattened to t * n + k.
  Mat full;
  // Its diagonal blocks, one per grid point.
  std::vector<Mat> blocks;
  // Largest entry of the full section-level Jacobian outside the diagonal blocks.
  double off_diagonal = 0.0;
  // Overlap margin around the base coordinates.
  double eps = 0.0;
  std::vector<double> norms;
  double bound = 0.0;

  std::vector<Vec> apply(const std::vector<Vec>& h) const;
  bool within_bound() const;
};

// max_t |J(a h)(t) - a(t) J(h)(t)|, sup norm.
double commutation_residual(const TransitionJacobian& jac, const std::vector<Vec>& h, const AlgebraElement& a);

// Largest radius keeping base + h inside the overlap at every t, by bisection.
double measure_overlap_margin(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x, Rng& rng,
                              int steps = 8, int directions = 4);

// Full finite-difference Jacobian of the section-level transition at x.
TransitionJacobian transition_jacobian(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x,
                                       Rng& rng);

struct FrechetReport {
  double eps = 0.0;
  // Largest remainder / (16 n^3 / eps^2 |h|^2) over probes and t.
  double worst_ratio = 0.0;
  // Least-squares slope of log remainder against log |h| under halving.
  std::vector<double> slopes;
  int probes = 0;
  // Remainder indistinguishable from rounding (affine transition); slopes carry no signal.
  bool roundoff_only = false;
};

inline constexpr double kRemainderFloor = 1e-8;

// Remainder of the linearization at probes of norm eps/4 and their halvings.
// Throws BoundViolation when the quadratic bound fails.
FrechetReport frechet_remainder_report(const NormalChart& from, const NormalChart& to, const std::vector<Vec>& x,
                                       const TransitionJacobian& jac, int probes, Rng& rng, int halvings = 4);

struct Frame {
  std::vector<TangentSection> vectors;
};

struct FrameTrivialization {
  Frame orthonormal;
  const BumpSystem* bumps = nullptr;

  // sum_k z_k(t) e_k(t)
  TangentSection forward(const std::vector<AlgebraElement>& z) const;
  // z_k(t) = <v(t), e_k(t)>
  std::vector<AlgebraElement> inverse(const TangentSection& v) const;
};

// Pointwise Gram-Schmidt under the combined metric. DegenerateFrame names the
// first t where the Gram determinant falls to 1e-10.
FrameTrivialization gram_schmidt_frame(const BumpSystem& bumps, const Section& u, const Frame& frame);

}  // namespace holosect
