#pragma once

#include <Eigen/Dense>
#include <span>

#include "mabo/kernels.hpp"

namespace mabo {

/// Row-major point set; each row is one spatial parameter vector.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline InputView row_view(const PointMatrix& points, Eigen::Index row, double time) {
  return {std::span<const double>(points.data() + row * points.cols(), static_cast<std::size_t>(points.cols())),
          time};
}

inline std::span<const double> row_span(const PointMatrix& points, Eigen::Index row) {
  return {points.data() + row * points.cols(), static_cast<std::size_t>(points.cols())};
}

/// Regular lattice over [lower, upper]^dims with `resolution` points per axis,
/// in lexicographic order (first axis varies slowest).
PointMatrix make_lattice(std::size_t dims, std::size_t resolution, double lower, double upper);

/// Value of lattice index `i` along one axis.
inline double lattice_value(std::size_t i, std::size_t resolution, double lower, double upper) {
  if (resolution == 1) return 0.5 * (lower + upper);
  return lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(resolution - 1);
}

}  // namespace mabo
