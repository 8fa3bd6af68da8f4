#include "mabo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "mabo/error.hpp"

namespace mabo {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kSqrt5 = 2.2360679774997896964;

void validate_base(BaseKernelParams params) {
  if (!(params.lengthscale > 0.0) || !std::isfinite(params.lengthscale)) {
    throw ConfigError("kernel lengthscale must be positive and finite");
  }
  if (!(params.output_variance > 0.0) || !std::isfinite(params.output_variance)) {
    throw ConfigError("kernel output_variance must be positive and finite");
  }
}

bool is_stationary_base(KernelKind kind) {
  return kind == KernelKind::RBF || kind == KernelKind::Matern12 || kind == KernelKind::Matern32 ||
         kind == KernelKind::Matern52;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError("kernel input dimension mismatch: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum;
}

double profile_from_squared(KernelKind kind, double sq_distance, BaseKernelParams p) {
  const double l = p.lengthscale;
  switch (kind) {
    case KernelKind::RBF:
      return p.output_variance * std::exp(-sq_distance / (2.0 * l * l));
    case KernelKind::Matern12:
      return p.output_variance * std::exp(-std::sqrt(sq_distance) / l);
    case KernelKind::Matern32: {
      const double s = kSqrt3 * std::sqrt(sq_distance) / l;
      return p.output_variance * (1.0 + s) * std::exp(-s);
    }
    case KernelKind::Matern52: {
      const double s = kSqrt5 * std::sqrt(sq_distance) / l;
      return p.output_variance * (1.0 + s + 5.0 * sq_distance / (3.0 * l * l)) * std::exp(-s);
    }
    default:
      throw InternalError("profile requested for non-stationary kernel kind");
  }
}

// Lexicographic on (time, spatial...). Used to canonicalize argument order.
bool precedes(const InputView& a, const InputView& b) {
  if (a.time != b.time) return a.time < b.time;
  const std::size_t n = std::min(a.spatial.size(), b.spatial.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.spatial[i] != b.spatial[i]) return a.spatial[i] < b.spatial[i];
  }
  return a.spatial.size() < b.spatial.size();
}

}  // namespace

struct KernelSpec::Node {
  KernelKind kind = KernelKind::RBF;
  BaseKernelParams params{};
  int horizon = 0;
  InputSlice slice = InputSlice::Spatial;
  std::vector<KernelSpec> children;
  bool uses_time = false;
  bool uses_spatial = false;
};

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::RBF: return "RBF";
    case KernelKind::Matern12: return "Matern12";
    case KernelKind::Matern32: return "Matern32";
    case KernelKind::Matern52: return "Matern52";
    case KernelKind::Weighting: return "Weighting";
    case KernelKind::Sum: return "Sum";
    case KernelKind::Product: return "Product";
  }
  return "?";
}

std::string_view to_string(InputSlice slice) { return slice == InputSlice::Spatial ? "spatial" : "time"; }

KernelKind parse_kernel_kind(std::string_view name) {
  for (auto kind : {KernelKind::RBF, KernelKind::Matern12, KernelKind::Matern32, KernelKind::Matern52,
                    KernelKind::Weighting, KernelKind::Sum, KernelKind::Product}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown kernel kind '" + std::string(name) + "'");
}

InputSlice parse_input_slice(std::string_view name) {
  if (name == "spatial") return InputSlice::Spatial;
  if (name == "time") return InputSlice::Time;
  throw ConfigError("unknown kernel input slice '" + std::string(name) + "'");
}

KernelSpec KernelSpec::base(KernelKind kind, BaseKernelParams params, InputSlice slice) {
  if (!is_stationary_base(kind)) throw ConfigError("KernelSpec::base needs RBF or Matern kind");
  validate_base(params);
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->params = params;
  node->slice = slice;
  node->uses_time = slice == InputSlice::Time;
  node->uses_spatial = slice == InputSlice::Spatial;
  return KernelSpec(std::move(node));
}

KernelSpec KernelSpec::weighting(int horizon) {
  if (horizon < 2) throw ConfigError("weighting kernel horizon must be >= 2");
  auto node = std::make_shared<Node>();
  node->kind = KernelKind::Weighting;
  node->horizon = horizon;
  node->slice = InputSlice::Time;
  node->uses_time = true;
  return KernelSpec(std::move(node));
}

KernelSpec KernelSpec::sum(std::vector<KernelSpec> children) {
  if (children.empty()) throw ConfigError("Sum kernel needs at least one child");
  auto node = std::make_shared<Node>();
  node->kind = KernelKind::Sum;
  for (const auto& c : children) {
    node->uses_time = node->uses_time || c.node_->uses_time;
    node->uses_spatial = node->uses_spatial || c.node_->uses_spatial;
  }
  node->children = std::move(children);
  return KernelSpec(std::move(node));
}

KernelSpec KernelSpec::product(std::vector<KernelSpec> children) {
  KernelSpec out = sum(std::move(children));
  auto node = std::make_shared<Node>(*out.node_);
  node->kind = KernelKind::Product;
  return KernelSpec(std::move(node));
}

KernelKind KernelSpec::kind() const { return node_->kind; }
double KernelSpec::lengthscale() const { return node_->params.lengthscale; }
double KernelSpec::output_variance() const { return node_->params.output_variance; }
int KernelSpec::horizon() const { return node_->horizon; }
InputSlice KernelSpec::slice() const { return node_->slice; }
const std::vector<KernelSpec>& KernelSpec::children() const { return node_->children; }
bool KernelSpec::is_base() const { return is_stationary_base(node_->kind); }
bool KernelSpec::uses_time() const { return node_->uses_time; }

double KernelSpec::operator()(const InputView& a, const InputView& b) const {
  return precedes(b, a) ? eval_ordered(b, a) : eval_ordered(a, b);
}

double KernelSpec::eval_ordered(const InputView& a, const InputView& b) const {
  const Node& n = *node_;
  switch (n.kind) {
    case KernelKind::Weighting:
      return eval_weighting(a.time, b.time, n.horizon);
    case KernelKind::Sum: {
      double total = 0.0;
      for (const auto& c : n.children) total += c.eval_ordered(a, b);
      return total;
    }
    case KernelKind::Product: {
      double total = 1.0;
      for (const auto& c : n.children) total *= c.eval_ordered(a, b);
      return total;
    }
    default:
      if (n.slice == InputSlice::Time) {
        const double d = a.time - b.time;
        return profile_from_squared(n.kind, d * d, n.params);
      }
      return profile_from_squared(n.kind, squared_distance(a.spatial, b.spatial), n.params);
  }
}

double base_profile(KernelKind kind, double distance, BaseKernelParams params) {
  validate_base(params);
  if (distance < 0.0) throw InputError("distance must be non-negative");
  return profile_from_squared(kind, distance * distance, params);
}

double eval_base(KernelKind kind, BaseKernelParams params, std::span<const double> x, std::span<const double> y) {
  if (!is_stationary_base(kind)) throw ConfigError("eval_base needs RBF or Matern kind");
  validate_base(params);
  return profile_from_squared(kind, squared_distance(x, y), params);
}

double eval_weighting(double t, double t_prime, int horizon) {
  if (horizon < 2) throw ConfigError("weighting kernel horizon must be >= 2");
  const double T = horizon;
  if (!(t >= 0.0 && t <= T) || !(t_prime >= 0.0 && t_prime <= T)) {
    throw InputError("weighting kernel time outside [0, " + std::to_string(horizon) + "]");
  }
  return std::min(t, t_prime) * std::min(T - t, T - t_prime) / (T * T);
}

double eval_temporal(double t, double t_prime, BaseKernelParams rbf, BaseKernelParams matern12, int horizon) {
  const double d = std::abs(t - t_prime);
  return base_profile(KernelKind::RBF, d, rbf) +
         eval_weighting(t, t_prime, horizon) * base_profile(KernelKind::Matern12, d, matern12);
}

KernelSpec temporal_kernel(BaseKernelParams rbf, BaseKernelParams matern12, int horizon) {
  return KernelSpec::sum({KernelSpec::rbf(rbf, InputSlice::Time),
                          KernelSpec::product({KernelSpec::weighting(horizon),
                                               KernelSpec::matern12(matern12, InputSlice::Time)})});
}

KernelSpec spatio_temporal_kernel(BaseKernelParams spatial, BaseKernelParams rbf, BaseKernelParams matern12,
                                  int horizon) {
  return KernelSpec::product({KernelSpec::matern52(spatial), temporal_kernel(rbf, matern12, horizon)});
}

double eval_spatio_temporal(const KernelSpec& spec, const InputView& a, const InputView& b) {
  if (spec.kind() != KernelKind::Product || spec.children().size() != 2) {
    throw ConfigError("spatio-temporal kernel must be a product of a spatial and a temporal factor");
  }
  const auto& spatial = spec.children()[0];
  const auto& temporal = spec.children()[1];
  if (spatial.uses_time() || !temporal.uses_time()) {
    throw ConfigError("spatio-temporal kernel factors must read space and time respectively");
  }
  return spatial(a, b) * temporal(a, b);
}

Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const SpatioTemporalInput> inputs) {
  const auto m = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const InputView vi = inputs[static_cast<std::size_t>(i)].view();
    g(i, i) = spec(vi, vi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double value = spec(vi, inputs[static_cast<std::size_t>(j)].view());
      g(i, j) = value;
      g(j, i) = value;
    }
  }
  return g;
}

SpectrumSummary spectrum_summary(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw InputError("matrix must be square");
  if (symmetric.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

bool check_psd(const Eigen::MatrixXd& gram, double rel_tol) {
  if (gram.rows() != gram.cols()) throw InputError("gram matrix must be square");
  if (gram != gram.transpose()) throw InputError("gram matrix must be symmetric");
  const auto s = spectrum_summary(gram);
  return s.min_eigenvalue >= -rel_tol * std::max(1.0, s.max_eigenvalue);
}

namespace {

bool uses_spatial(const KernelSpec& spec) {
  if (spec.kind() == KernelKind::Weighting) return false;
  if (spec.is_base()) return spec.slice() == InputSlice::Spatial;
  return std::any_of(spec.children().begin(), spec.children().end(), uses_spatial);
}

}  // namespace

std::optional<KernelSpec> isotropic_spatial_factor(const KernelSpec& spec) {
  if (spec.is_base()) {
    if (spec.slice() == InputSlice::Spatial) return spec;
    return std::nullopt;
  }
  if (spec.kind() != KernelKind::Product) return std::nullopt;
  std::optional<KernelSpec> factor;
  for (const auto& child : spec.children()) {
    if (!uses_spatial(child)) continue;
    if (factor || !child.is_base()) return std::nullopt;
    factor = child;
  }
  return factor;
}

void to_json(nlohmann::json& j, const KernelSpec& spec) {
  j = nlohmann::json::object();
  j["kind"] = std::string(to_string(spec.kind()));
  if (spec.is_base()) {
    j["lengthscale"] = spec.lengthscale();
    j["output_variance"] = spec.output_variance();
    j["input"] = std::string(to_string(spec.slice()));
  } else if (spec.kind() == KernelKind::Weighting) {
    j["horizon"] = spec.horizon();
  } else {
    auto children = nlohmann::json::array();
    for (const auto& c : spec.children()) {
      nlohmann::json cj;
      to_json(cj, c);
      children.push_back(std::move(cj));
    }
    j["children"] = std::move(children);
  }
}

namespace {

KernelSpec kernel_from_json_at(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": kernel must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "lengthscale" && key != "output_variance" && key != "horizon" &&
        key != "children" && key != "input") {
      throw ConfigError(path + "." + key + ": unknown kernel key");
    }
  }
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError(path + ".kind: missing kernel kind");
  try {
    const KernelKind kind = parse_kernel_kind(j["kind"].get<std::string>());
    switch (kind) {
      case KernelKind::Weighting:
        if (!j.contains("horizon") || !j["horizon"].is_number_integer()) {
          throw ConfigError(path + ".horizon: weighting kernel needs an integer horizon");
        }
        if (j.contains("lengthscale") || j.contains("output_variance")) {
          throw ConfigError(path + ": weighting kernel takes no lengthscale/output_variance");
        }
        return KernelSpec::weighting(j["horizon"].get<int>());
      case KernelKind::Sum:
      case KernelKind::Product: {
        if (!j.contains("children") || !j["children"].is_array()) {
          throw ConfigError(path + ".children: composite kernel needs a children array");
        }
        std::vector<KernelSpec> children;
        std::size_t index = 0;
        for (const auto& c : j["children"]) {
          children.push_back(kernel_from_json_at(c, path + ".children[" + std::to_string(index++) + "]"));
        }
        return kind == KernelKind::Sum ? KernelSpec::sum(std::move(children))
                                       : KernelSpec::product(std::move(children));
      }
      default: {
        BaseKernelParams p;
        p.lengthscale = j.value("lengthscale", 1.0);
        p.output_variance = j.value("output_variance", 1.0);
        const InputSlice slice = parse_input_slice(j.value("input", std::string("spatial")));
        return KernelSpec::base(kind, p, slice);
      }
    }
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + what);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

KernelSpec kernel_from_json(const nlohmann::json& j) { return kernel_from_json_at(j, "kernel"); }

}  // namespace mabo
