#include "mabo/points.hpp"

#include <vector>

#include "mabo/error.hpp"

namespace mabo {

PointMatrix make_lattice(std::size_t dims, std::size_t resolution, double lower, double upper) {
  if (resolution == 0) throw InputError("lattice resolution must be positive");
  if (!(lower <= upper)) throw InputError("lattice bounds inverted");
  std::size_t count = 1;
  for (std::size_t d = 0; d < dims; ++d) count *= resolution;
  PointMatrix points(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dims));
  std::vector<std::size_t> index(dims, 0);
  for (std::size_t row = 0; row < count; ++row) {
    for (std::size_t d = 0; d < dims; ++d) {
      points(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(d)) =
          lattice_value(index[d], resolution, lower, upper);
    }
    for (std::size_t d = dims; d-- > 0;) {
      if (++index[d] < resolution) break;
      index[d] = 0;
    }
  }
  return points;
}

}  // namespace mabo
