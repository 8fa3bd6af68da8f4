#include "mabo/rkhs_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "mabo/error.hpp"

namespace mabo {

DomainBox DomainBox::spatial(std::size_t dims, double lower, double upper) {
  DomainBox box;
  box.lower = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dims), lower);
  box.upper = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dims), upper);
  return box;
}

DomainBox DomainBox::temporal(double time_lower, double time_upper) {
  DomainBox box;
  box.time_lower = time_lower;
  box.time_upper = time_upper;
  return box;
}

PreRkhsFunction::PreRkhsFunction(KernelSpec kernel, std::vector<SpatioTemporalInput> centers,
                                 Eigen::VectorXd coefficients)
    : kernel_(std::move(kernel)), centers_(std::move(centers)), coefficients_(std::move(coefficients)) {
  if (static_cast<Eigen::Index>(centers_.size()) != coefficients_.size()) {
    throw InputError("pre-RKHS function needs one coefficient per center");
  }
}

double PreRkhsFunction::operator()(const InputView& x) const {
  double value = 0.0;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    value += coefficients_(static_cast<Eigen::Index>(j)) * kernel_(x, centers_[j].view());
  }
  return value;
}

Eigen::VectorXd PreRkhsFunction::evaluate(const PointMatrix& points, double time) const {
  Eigen::VectorXd values(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) values(i) = (*this)(row_view(points, i, time));
  return values;
}

double PreRkhsFunction::squared_rkhs_norm() const {
  return coefficients_.dot(gram(kernel_, centers_) * coefficients_);
}

double PreRkhsFunction::rkhs_norm() const { return std::sqrt(std::max(squared_rkhs_norm(), 0.0)); }

namespace {

void validate_box(const DomainBox& box) {
  if (box.lower.size() != box.upper.size()) throw InputError("domain box bounds differ in dimension");
  bool has_extent = box.time_upper > box.time_lower;
  for (Eigen::Index d = 0; d < box.lower.size(); ++d) {
    if (!(box.lower(d) <= box.upper(d))) throw InputError("domain box axis inverted");
    has_extent = has_extent || box.upper(d) > box.lower(d);
  }
  if (!(box.time_lower <= box.time_upper)) throw InputError("domain box time interval inverted");
  if (!has_extent) throw InputError("domain box is degenerate");
}

}  // namespace

PreRkhsFunction sample_pre_rkhs(const KernelSpec& kernel, std::size_t num_centers, double target_norm,
                                const DomainBox& box, RandomStream& rng, CoefficientRange range) {
  if (num_centers == 0) throw InputError("need at least one center");
  if (!(range.lower < range.upper)) throw InputError("coefficient range is empty");
  if (!(target_norm > 0.0) || !std::isfinite(target_norm)) throw InputError("target_norm must be positive");
  validate_box(box);

  const auto m = static_cast<Eigen::Index>(num_centers);
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<SpatioTemporalInput> centers(num_centers);
    for (auto& c : centers) {
      c.spatial.resize(box.lower.size());
      for (Eigen::Index d = 0; d < box.lower.size(); ++d) c.spatial(d) = rng.uniform(box.lower(d), box.upper(d));
      c.time = box.time_upper > box.time_lower ? rng.uniform(box.time_lower, box.time_upper) : box.time_lower;
    }
    Eigen::VectorXd coefficients(m);
    for (Eigen::Index j = 0; j < m; ++j) coefficients(j) = rng.uniform(range.lower, range.upper);

    const double sq_norm = coefficients.dot(gram(kernel, centers) * coefficients);
    if (!(sq_norm > 0.0) || !std::isfinite(sq_norm)) continue;
    coefficients *= target_norm / std::sqrt(sq_norm);
    return PreRkhsFunction(kernel, std::move(centers), std::move(coefficients));
  }
  throw NumericalError("pre-RKHS draw has zero norm twice in a row");
}

PreRkhsFunction sample_pre_rkhs(const KernelSpec& kernel, std::size_t num_centers, double target_norm,
                                const DomainBox& box, std::uint64_t seed, CoefficientRange range) {
  RandomStream rng(seed);
  return sample_pre_rkhs(kernel, num_centers, target_norm, box, rng, range);
}

double quantile_lower(std::span<const double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty set");
  if (!(q > 0.0 && q < 1.0)) throw InputError("quantile level must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  const auto index = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(index), sorted.end());
  return sorted[index];
}

double quantile_threshold(const PreRkhsFunction& func, const PointMatrix& grid, double q, double time) {
  if (grid.rows() == 0) throw InputError("quantile grid is empty");
  const Eigen::VectorXd values = func.evaluate(grid, time);
  return quantile_lower(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), q);
}

}  // namespace mabo
