#pragma once

#include <Eigen/Dense>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mabo {

enum class KernelKind { RBF, Matern12, Matern32, Matern52, Weighting, Sum, Product };

/// Which part of a spatio-temporal input a base kernel reads.
enum class InputSlice { Spatial, Time };

std::string_view to_string(KernelKind kind);
std::string_view to_string(InputSlice slice);
KernelKind parse_kernel_kind(std::string_view name);
InputSlice parse_input_slice(std::string_view name);

/// Non-owning view of a spatio-temporal input. The spatial part is the
/// concatenated parameters of an agent's closed neighborhood.
struct InputView {
  std::span<const double> spatial;
  double time = 1.0;
};

struct SpatioTemporalInput {
  Eigen::VectorXd spatial;
  double time = 1.0;

  InputView view() const { return {std::span<const double>(spatial.data(), static_cast<std::size_t>(spatial.size())), time}; }
  operator InputView() const { return view(); }  // NOLINT(google-explicit-constructor)
};

struct BaseKernelParams {
  double lengthscale = 1.0;
  double output_variance = 1.0;
};

/// Immutable kernel expression tree.
///
/// Leaves are stationary base kernels (RBF, Matern 1/2, 3/2, 5/2) acting on
/// either the spatial block or the time index, or the weighting kernel on
/// time. Inner nodes are sums and products. Copies share the tree.
class KernelSpec {
 public:
  static KernelSpec base(KernelKind kind, BaseKernelParams params, InputSlice slice = InputSlice::Spatial);
  static KernelSpec rbf(BaseKernelParams params, InputSlice slice = InputSlice::Spatial) { return base(KernelKind::RBF, params, slice); }
  static KernelSpec matern12(BaseKernelParams params, InputSlice slice = InputSlice::Spatial) { return base(KernelKind::Matern12, params, slice); }
  static KernelSpec matern32(BaseKernelParams params, InputSlice slice = InputSlice::Spatial) { return base(KernelKind::Matern32, params, slice); }
  static KernelSpec matern52(BaseKernelParams params, InputSlice slice = InputSlice::Spatial) { return base(KernelKind::Matern52, params, slice); }
  static KernelSpec weighting(int horizon);
  static KernelSpec sum(std::vector<KernelSpec> children);
  static KernelSpec product(std::vector<KernelSpec> children);

  KernelKind kind() const;
  double lengthscale() const;
  double output_variance() const;
  int horizon() const;
  InputSlice slice() const;
  const std::vector<KernelSpec>& children() const;

  bool is_base() const;
  /// True if any leaf reads the time index.
  bool uses_time() const;

  /// k(a, b). Arguments are put in a canonical order first so the result is
  /// bitwise symmetric.
  double operator()(const InputView& a, const InputView& b) const;

 private:
  struct Node;
  explicit KernelSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  double eval_ordered(const InputView& a, const InputView& b) const;

  std::shared_ptr<const Node> node_;
};

/// Profile value sigma^2 * rho(r / l) of a stationary base kernel at distance r.
double base_profile(KernelKind kind, double distance, BaseKernelParams params);

/// Base kernel on two equally sized vectors (Euclidean distance).
double eval_base(KernelKind kind, BaseKernelParams params, std::span<const double> x, std::span<const double> y);

/// (1/T^2) min(t, t') min(T - t, T - t') on [0, T]^2.
double eval_weighting(double t, double t_prime, int horizon);

/// k_RBF(t, t') + k_W(t, t') k_Ma12(t, t').
double eval_temporal(double t, double t_prime, BaseKernelParams rbf, BaseKernelParams matern12, int horizon);

/// Temporal composite kernel as a tree over the time slice.
KernelSpec temporal_kernel(BaseKernelParams rbf, BaseKernelParams matern12, int horizon);

/// Matern52 on the spatial block times the temporal composite.
KernelSpec spatio_temporal_kernel(BaseKernelParams spatial, BaseKernelParams rbf, BaseKernelParams matern12, int horizon);

/// Evaluates a Product(spatial, temporal) spec; rejects any other shape.
double eval_spatio_temporal(const KernelSpec& spec, const InputView& a, const InputView& b);

Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const SpatioTemporalInput> inputs);

struct SpectrumSummary {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

SpectrumSummary spectrum_summary(const Eigen::MatrixXd& symmetric);

/// min eigenvalue >= -rel_tol * max(1, max eigenvalue). Throws InputError for
/// a matrix that is not exactly symmetric.
bool check_psd(const Eigen::MatrixXd& gram, double rel_tol = 1e-8);

/// If the spec depends on the spatial block only through one stationary base
/// kernel that multiplies everything else, returns that factor. Used to prune
/// neighbor searches by Euclidean distance.
std::optional<KernelSpec> isotropic_spatial_factor(const KernelSpec& spec);

void to_json(nlohmann::json& j, const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace mabo
