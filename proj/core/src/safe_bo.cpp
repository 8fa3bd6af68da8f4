#include "mabo/safe_bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mabo/error.hpp"

namespace mabo {

namespace {

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool same_point(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

ParamGrid ParamGrid::lattice(std::size_t dims, std::size_t resolution, double lower, double upper) {
  if (dims == 0) throw InputError("grid needs at least one dimension");
  if (!(lower < upper)) throw InputError("grid box must have lower < upper");
  ParamGrid grid;
  grid.dims_ = dims;
  grid.resolution_ = resolution;
  grid.lower_ = lower;
  grid.upper_ = upper;
  grid.points_ = make_lattice(dims, resolution, lower, upper);
  grid.lattice_to_pos_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grid.lattice_to_pos_[i] = i;
  return grid;
}

std::optional<std::size_t> ParamGrid::find(std::span<const double> point) const {
  if (point.size() != dims_) throw InputError("grid lookup dimension mismatch");
  std::size_t linear = 0;
  bool on_lattice = true;
  for (std::size_t d = 0; d < dims_ && on_lattice; ++d) {
    const double scaled = resolution_ > 1 ? (point[d] - lower_) / (upper_ - lower_) * static_cast<double>(resolution_ - 1) : 0.0;
    const double rounded = std::round(scaled);
    if (rounded < 0.0 || rounded > static_cast<double>(resolution_ - 1)) {
      on_lattice = false;
      break;
    }
    const auto index = static_cast<std::size_t>(rounded);
    on_lattice = lattice_value(index, resolution_, lower_, upper_) == point[d];
    linear = linear * resolution_ + index;
  }
  if (on_lattice) return lattice_to_pos_[linear];
  for (std::size_t pos : off_lattice_) {
    if (same_point(this->point(pos), point)) return pos;
  }
  return std::nullopt;
}

ParamGrid ParamGrid::with_extra_points(const PointMatrix& extras) const {
  if (extras.rows() > 0 && static_cast<std::size_t>(extras.cols()) != dims_) {
    throw InputError("extra grid points have the wrong dimension");
  }
  // Off-lattice candidates: existing ones plus new extras not already present.
  std::vector<std::vector<double>> off;
  for (std::size_t pos : off_lattice_) {
    auto p = point(pos);
    off.emplace_back(p.begin(), p.end());
  }
  for (Eigen::Index r = 0; r < extras.rows(); ++r) {
    auto p = row_span(extras, r);
    if (!find(p)) off.emplace_back(p.begin(), p.end());
  }
  std::sort(off.begin(), off.end());
  off.erase(std::unique(off.begin(), off.end()), off.end());

  ParamGrid out;
  out.dims_ = dims_;
  out.resolution_ = resolution_;
  out.lower_ = lower_;
  out.upper_ = upper_;
  const std::size_t total = lattice_size() + off.size();
  out.points_.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dims_));
  out.lattice_to_pos_.resize(lattice_size());
  out.off_lattice_.reserve(off.size());

  std::size_t li = 0;
  std::size_t oi = 0;
  for (std::size_t pos = 0; pos < total; ++pos) {
    const bool take_lattice =
        oi == off.size() || (li < lattice_size() && lex_less(point(lattice_to_pos_[li]), off[oi]));
    const double* src = take_lattice ? points_.data() + lattice_to_pos_[li] * dims_ : off[oi].data();
    std::copy(src, src + dims_, out.points_.data() + pos * dims_);
    if (take_lattice) {
      out.lattice_to_pos_[li++] = pos;
    } else {
      out.off_lattice_.push_back(pos);
      ++oi;
    }
  }

  out.extra_positions_.reserve(static_cast<std::size_t>(extras.rows()));
  for (Eigen::Index r = 0; r < extras.rows(); ++r) {
    auto pos = out.find(row_span(extras, r));
    if (!pos) throw InternalError("merged grid lost an extra point");
    out.extra_positions_.push_back(*pos);
  }
  return out;
}

bool ParamGrid::visit_ball(std::span<const double> center, double radius,
                           const std::function<bool(std::size_t)>& visit) const {
  if (center.size() != dims_) throw InputError("ball center dimension mismatch");
  if (!(radius >= 0.0)) return false;
  const double r2 = radius * radius * (1.0 + 1e-12);

  std::vector<std::size_t> lo(dims_), hi(dims_);
  const double step = resolution_ > 1 ? (upper_ - lower_) / static_cast<double>(resolution_ - 1) : 0.0;
  bool lattice_hit = true;
  for (std::size_t d = 0; d < dims_; ++d) {
    if (resolution_ == 1) {
      lo[d] = hi[d] = 0;
      continue;
    }
    const double a = std::ceil((center[d] - radius - lower_) / step - 1e-9);
    const double b = std::floor((center[d] + radius - lower_) / step + 1e-9);
    const double max_index = static_cast<double>(resolution_ - 1);
    if (b < 0.0 || a > max_index || a > b) {
      lattice_hit = false;
      break;
    }
    lo[d] = static_cast<std::size_t>(std::max(a, 0.0));
    hi[d] = static_cast<std::size_t>(std::min(b, max_index));
  }

  if (lattice_hit) {
    std::vector<std::size_t> index(dims_);
    std::vector<double> partial(dims_ + 1, 0.0);
    // Depth-first odometer with partial squared distance pruning.
    std::size_t depth = 0;
    index[0] = lo[0];
    while (true) {
      if (index[depth] > hi[depth]) {
        if (depth == 0) break;
        --depth;
        ++index[depth];
        continue;
      }
      const double value = lattice_value(index[depth], resolution_, lower_, upper_);
      const double v = value - center[depth];
      partial[depth + 1] = partial[depth] + v * v;
      if (partial[depth + 1] > r2) {
        // Past the center every further index along this axis is farther.
        index[depth] = value > center[depth] ? hi[depth] + 1 : index[depth] + 1;
        continue;
      }
      if (depth + 1 == dims_) {
        std::size_t linear = 0;
        for (std::size_t d = 0; d < dims_; ++d) linear = linear * resolution_ + index[d];
        if (visit(lattice_to_pos_[linear])) return true;
        ++index[depth];
      } else {
        ++depth;
        index[depth] = lo[depth];
      }
    }
  }

  for (std::size_t pos : off_lattice_) {
    double s = 0.0;
    auto p = point(pos);
    for (std::size_t k = 0; k < dims_; ++k) s += (p[k] - center[k]) * (p[k] - center[k]);
    if (s <= r2 && visit(pos)) return true;
  }
  return false;
}

double kernel_metric(const KernelSpec& kernel, std::span<const double> x, std::span<const double> x_prime,
                     double time) {
  const InputView a{x, time};
  const InputView b{x_prime, time};
  return std::sqrt(std::max(0.0, kernel(a, a) - 2.0 * kernel(a, b) + kernel(b, b)));
}

GridMetric::GridMetric(const ParamGrid& grid, const KernelSpec& kernel, double time)
    : grid_(&grid), kernel_(kernel), time_(time) {
  diagonal_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const InputView v{grid.point(i), time};
    diagonal_[i] = kernel(v, v);
  }
  prunable_ = isotropic_spatial_factor(kernel).has_value() && grid.size() > 0;
  if (prunable_) metric_sup_ = std::sqrt(2.0 * diagonal_.front());
}

GridMetric::GridMetric(const ParamGrid& grid, std::function<double(std::size_t, std::size_t)> metric)
    : grid_(&grid), custom_(std::move(metric)) {}

double GridMetric::operator()(std::size_t a, std::size_t b) const {
  if (custom_) return custom_(a, b);
  const double cross = (*kernel_)(InputView{grid_->point(a), time_}, InputView{grid_->point(b), time_});
  return std::sqrt(std::max(0.0, diagonal_[a] - 2.0 * cross + diagonal_[b]));
}

std::optional<double> GridMetric::euclidean_bound(double radius) const {
  if (!prunable_ || !(radius < metric_sup_)) return std::nullopt;
  std::vector<double> origin(grid_->dims(), 0.0);
  std::vector<double> probe(grid_->dims(), 0.0);
  auto phi = [&](double rho) {
    probe[0] = rho;
    return kernel_metric(*kernel_, origin, probe, time_);
  };
  double hi = std::max(kernel_->lengthscale(), 1e-12);
  if (auto factor = isotropic_spatial_factor(*kernel_)) hi = factor->lengthscale();
  int guard = 0;
  while (!(phi(hi) > radius)) {
    hi *= 2.0;
    if (++guard > 200) return std::nullopt;
  }
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) > radius) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi * (1.0 + 1e-9) + 1e-12;
}

bool GridMetric::visit_candidates(std::size_t a, double radius, const std::function<bool(std::size_t)>& visit) const {
  if (auto bound = euclidean_bound(radius)) return grid_->visit_ball(grid_->point(a), *bound, visit);
  for (std::size_t pos = 0; pos < grid_->size(); ++pos) {
    if (visit(pos)) return true;
  }
  return false;
}

std::size_t SafeBoSets::count_safe() const { return static_cast<std::size_t>(std::count(safe.begin(), safe.end(), 1)); }
std::size_t SafeBoSets::count_maximizers() const {
  return static_cast<std::size_t>(std::count(maximizer.begin(), maximizer.end(), 1));
}
std::size_t SafeBoSets::count_expanders() const {
  return static_cast<std::size_t>(std::count(expander.begin(), expander.end(), 1));
}

std::vector<std::uint8_t> certify_safe(const GridMetric& metric, std::span<const double> lower, double bound_B,
                                       double h, std::span<const std::size_t> seeds, SafeSetStats* stats) {
  if (!(bound_B >= 0.0)) throw ConfigError("RKHS bound B must be non-negative");
  if (seeds.empty()) throw InputError("safe set needs at least one sampled safe point");
  const std::size_t n = lower.size();
  std::vector<std::uint8_t> safe(n, 0);
  std::vector<std::size_t> frontier;
  for (std::size_t s : seeds) {
    if (s >= n) throw InputError("safe seed outside the grid");
    if (!safe[s]) frontier.push_back(s);
    safe[s] = 1;
  }
  std::size_t count = frontier.size();
  std::sort(frontier.begin(), frontier.end());

  std::vector<std::size_t> next;
  for (std::size_t sweep = 0; sweep < n && !frontier.empty(); ++sweep) {
    next.clear();
    for (std::size_t anchor : frontier) {
      const double margin = lower[anchor] - h;
      if (!(margin >= 0.0)) continue;
      if (bound_B == 0.0) {
        for (std::size_t z = 0; z < n; ++z) {
          if (!safe[z]) {
            safe[z] = 1;
            next.push_back(z);
          }
        }
        continue;
      }
      metric.visit_candidates(anchor, margin / bound_B, [&](std::size_t z) {
        if (!safe[z] && lower[anchor] - bound_B * metric(anchor, z) >= h) {
          safe[z] = 1;
          next.push_back(z);
        }
        return false;
      });
    }
    count += next.size();
    if (stats) stats->sweep_sizes.push_back(count);
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }
  return safe;
}

SafeBoSets compute_safe_set(const ParamGrid& grid, const Posterior& posterior, double beta, double bound_B, double h,
                            std::span<const std::size_t> sampled_safe_points, double time, Prediction* prediction,
                            SafeSetStats* stats) {
  if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
  Prediction pred = posterior.predict(grid.points(), time);
  SafeBoSets sets;
  sets.lower = pred.mean - beta * pred.stddev;
  sets.upper = pred.mean + beta * pred.stddev;
  const GridMetric metric(grid, posterior.kernel(), time);
  sets.safe = certify_safe(metric, std::span<const double>(sets.lower.data(), grid.size()), bound_B, h,
                           sampled_safe_points, stats);
  sets.maximizer.assign(grid.size(), 0);
  sets.expander.assign(grid.size(), 0);
  if (prediction) *prediction = std::move(pred);
  return sets;
}

std::vector<std::uint8_t> compute_maximizers(const SafeBoSets& sets) {
  const std::size_t n = sets.size();
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (sets.safe[i]) best_lower = std::max(best_lower, sets.lower(static_cast<Eigen::Index>(i)));
  }
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = sets.safe[i] && sets.upper(static_cast<Eigen::Index>(i)) >= best_lower;
  }
  return mask;
}

std::vector<std::uint8_t> compute_expanders(const SafeBoSets& sets, const GridMetric& metric, double bound_B,
                                            double h) {
  if (!(bound_B >= 0.0)) throw ConfigError("RKHS bound B must be non-negative");
  const std::size_t n = sets.size();
  std::vector<std::uint8_t> mask(n, 0);
  const bool any_unsafe = std::find(sets.safe.begin(), sets.safe.end(), 0) != sets.safe.end();
  if (!any_unsafe) return mask;
  for (std::size_t z = 0; z < n; ++z) {
    if (!sets.safe[z]) continue;
    const double u = sets.upper(static_cast<Eigen::Index>(z));
    const double margin = u - h;
    if (!(margin >= 0.0)) continue;
    if (bound_B == 0.0) {
      mask[z] = 1;
      continue;
    }
    mask[z] = metric.visit_candidates(z, margin / bound_B, [&](std::size_t other) {
      return !sets.safe[other] && u - bound_B * metric(z, other) >= h;
    });
  }
  return mask;
}

std::vector<std::uint8_t> compute_expanders(const SafeBoSets& sets, const ParamGrid& grid, const KernelSpec& kernel,
                                            double bound_B, double h, double time) {
  return compute_expanders(sets, GridMetric(grid, kernel, time), bound_B, h);
}

Acquisition acquire(const SafeBoSets& sets, std::span<const double> stddev) {
  const std::size_t n = sets.size();
  if (stddev.size() != n) throw InputError("stddev length differs from grid size");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    const bool candidate = sets.maximizer[i] || sets.expander[i];
    if (candidate && !sets.safe[i]) throw InternalError("maximizer or expander outside the safe set");
    if (candidate && (!best || stddev[i] > stddev[*best])) best = i;
  }
  if (best) return {*best, false};
  for (std::size_t i = 0; i < n; ++i) {
    if (sets.safe[i] && (!best || sets.lower(static_cast<Eigen::Index>(i)) > sets.lower(static_cast<Eigen::Index>(*best)))) {
      best = i;
    }
  }
  if (!best) throw InternalError("safe set is empty");
  return {*best, true};
}

}  // namespace mabo
