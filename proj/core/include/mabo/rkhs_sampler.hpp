#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mabo/kernels.hpp"
#include "mabo/points.hpp"
#include "mabo/rng.hpp"

namespace mabo {

/// Axis-aligned sampling box over the spatial block plus a time interval.
/// A time interval of zero width pins every sample to that time.
struct DomainBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double time_lower = 1.0;
  double time_upper = 1.0;

  static DomainBox spatial(std::size_t dims, double lower, double upper);
  static DomainBox temporal(double time_lower, double time_upper);
};

/// f(x) = sum_j c_j k(x, x_j), with RKHS norm sqrt(c^T G c).
class PreRkhsFunction {
 public:
  PreRkhsFunction(KernelSpec kernel, std::vector<SpatioTemporalInput> centers, Eigen::VectorXd coefficients);

  double operator()(const InputView& x) const;
  /// Values at every row of `points`, all at `time`.
  Eigen::VectorXd evaluate(const PointMatrix& points, double time = 1.0) const;

  /// sqrt(c^T G c), recomputed from the centers.
  double rkhs_norm() const;
  double squared_rkhs_norm() const;

  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<SpatioTemporalInput>& centers() const { return centers_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }

 private:
  KernelSpec kernel_;
  std::vector<SpatioTemporalInput> centers_;
  Eigen::VectorXd coefficients_;
};

/// Range of the coefficients before rescaling.
struct CoefficientRange {
  double lower = -1.0;
  double upper = 1.0;
};

/// Uniform centers in `box`, coefficients uniform in `range`, rescaled so the
/// RKHS norm equals `target_norm`.
PreRkhsFunction sample_pre_rkhs(const KernelSpec& kernel, std::size_t num_centers, double target_norm,
                                const DomainBox& box, RandomStream& rng, CoefficientRange range = {});
PreRkhsFunction sample_pre_rkhs(const KernelSpec& kernel, std::size_t num_centers, double target_norm,
                                const DomainBox& box, std::uint64_t seed, CoefficientRange range = {});

/// Empirical q-quantile with lower interpolation: sorted[floor(q (n - 1))].
double quantile_lower(std::span<const double> values, double q);

/// quantile_lower of `func` over the rows of `grid` at `time`.
double quantile_threshold(const PreRkhsFunction& func, const PointMatrix& grid, double q, double time = 1.0);

}  // namespace mabo
