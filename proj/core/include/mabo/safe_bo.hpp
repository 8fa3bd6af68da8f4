#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mabo/gp.hpp"
#include "mabo/kernels.hpp"
#include "mabo/points.hpp"

namespace mabo {

/// Candidate parameters of one agent: a regular lattice over [lower, upper]^dims,
/// optionally merged with extra off-lattice points (already-sampled
/// parameters). Points are unique and sorted lexicographically, so position
/// order doubles as the tie-breaking order.
class ParamGrid {
 public:
  static ParamGrid lattice(std::size_t dims, std::size_t resolution, double lower, double upper);

  /// Copy of this grid with `extras` merged in. Extras that coincide with an
  /// existing point are not duplicated.
  ParamGrid with_extra_points(const PointMatrix& extras) const;

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dims() const { return dims_; }
  std::size_t resolution() const { return resolution_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const PointMatrix& points() const { return points_; }
  std::span<const double> point(std::size_t pos) const { return row_span(points_, static_cast<Eigen::Index>(pos)); }

  /// Positions of the rows passed to the last with_extra_points, in input order.
  const std::vector<std::size_t>& extra_positions() const { return extra_positions_; }

  /// Position of an exact match, if any.
  std::optional<std::size_t> find(std::span<const double> point) const;

  /// Calls visit(pos) for every point within Euclidean distance `radius` of
  /// `center`. Stops early when visit returns true; returns whether it did.
  bool visit_ball(std::span<const double> center, double radius,
                  const std::function<bool(std::size_t)>& visit) const;

 private:
  std::size_t lattice_size() const { return lattice_to_pos_.size(); }

  std::size_t dims_ = 0;
  std::size_t resolution_ = 0;
  double lower_ = 0.0;
  double upper_ = 1.0;
  PointMatrix points_;
  std::vector<std::size_t> lattice_to_pos_;
  std::vector<std::size_t> off_lattice_;
  std::vector<std::size_t> extra_positions_;
};

/// sqrt(max(0, k(x,x) - 2 k(x,x') + k(x',x'))) with both inputs at `time`.
double kernel_metric(const KernelSpec& kernel, std::span<const double> x, std::span<const double> x_prime,
                     double time);

/// Pairwise metric over grid positions, with a neighbor search that returns a
/// superset of the points within a metric radius.
class GridMetric {
 public:
  /// Kernel-induced metric at one time slice.
  GridMetric(const ParamGrid& grid, const KernelSpec& kernel, double time);
  /// Arbitrary metric; neighbor searches scan the whole grid.
  GridMetric(const ParamGrid& grid, std::function<double(std::size_t, std::size_t)> metric);

  double operator()(std::size_t a, std::size_t b) const;

  /// Calls visit(pos) for candidates that may lie within metric `radius` of `a`.
  bool visit_candidates(std::size_t a, double radius, const std::function<bool(std::size_t)>& visit) const;

  /// Euclidean radius enclosing every point within metric `radius`, or
  /// nullopt when no finite bound exists.
  std::optional<double> euclidean_bound(double radius) const;

 private:
  const ParamGrid* grid_;
  std::optional<KernelSpec> kernel_;
  double time_ = 1.0;
  std::vector<double> diagonal_;
  std::function<double(std::size_t, std::size_t)> custom_;
  bool prunable_ = false;
  double metric_sup_ = 0.0;
};

struct SafeBoSets {
  std::vector<std::uint8_t> safe;
  std::vector<std::uint8_t> maximizer;
  std::vector<std::uint8_t> expander;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  std::size_t size() const { return safe.size(); }
  std::size_t count_safe() const;
  std::size_t count_maximizers() const;
  std::size_t count_expanders() const;
};

struct SafeSetStats {
  /// Safe-set size after each sweep of the fixed-point iteration.
  std::vector<std::size_t> sweep_sizes;
};

/// Fixed point of: z is safe iff some anchor z' (a seed or an already
/// certified point) has lower(z') - B d(z', z) >= h. Seeds are always safe.
std::vector<std::uint8_t> certify_safe(const GridMetric& metric, std::span<const double> lower, double bound_B,
                                       double h, std::span<const std::size_t> seeds, SafeSetStats* stats = nullptr);

/// Predicts at `time`, forms mu -/+ beta sigma, and certifies the safe set.
SafeBoSets compute_safe_set(const ParamGrid& grid, const Posterior& posterior, double beta, double bound_B, double h,
                            std::span<const std::size_t> sampled_safe_points, double time,
                            Prediction* prediction = nullptr, SafeSetStats* stats = nullptr);

/// Safe points whose upper bound reaches the best safe lower bound.
std::vector<std::uint8_t> compute_maximizers(const SafeBoSets& sets);

/// Safe points whose optimistic certificate reaches an unsafe point.
std::vector<std::uint8_t> compute_expanders(const SafeBoSets& sets, const GridMetric& metric, double bound_B,
                                            double h);
std::vector<std::uint8_t> compute_expanders(const SafeBoSets& sets, const ParamGrid& grid, const KernelSpec& kernel,
                                            double bound_B, double h, double time);

struct Acquisition {
  std::size_t position = 0;
  /// True when M and G were empty and the best safe lower bound was used.
  bool fallback = false;
};

/// argmax of stddev over M u G (lowest position on ties), else argmax of the
/// lower bound over S.
Acquisition acquire(const SafeBoSets& sets, std::span<const double> stddev);

}  // namespace mabo
