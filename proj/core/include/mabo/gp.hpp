#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mabo/kernels.hpp"
#include "mabo/points.hpp"

namespace mabo {

struct Dataset {
  std::vector<SpatioTemporalInput> inputs;
  std::vector<double> targets;
  double noise_std = 0.0;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  void add(SpatioTemporalInput input, double target) {
    inputs.push_back(std::move(input));
    targets.push_back(target);
  }
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

/// Zero-mean GP posterior given a dataset and a fixed kernel.
///
/// The factorized matrix is K + (noise_std^2 + jitter) I. Jitter starts at
/// 1e-10 times the mean prior variance and grows by x10 up to 1e-4 times it.
class Posterior {
 public:
  double mean(const InputView& x) const;
  double stddev(const InputView& x) const;

  /// Mean and standard deviation at every row of `points`, all at `time`.
  Prediction predict(const PointMatrix& points, double time) const;

  /// ln det(I + noise^-2 K) over the training inputs; 0 when noise is 0.
  double log_det_term() const { return log_det_term_; }
  double jitter() const { return jitter_; }
  double noise_std() const { return noise_std_; }
  std::size_t size() const { return inputs_.size(); }
  const KernelSpec& kernel() const { return kernel_; }

 private:
  friend Posterior fit(const Dataset& dataset, const KernelSpec& kernel);
  explicit Posterior(KernelSpec kernel) : kernel_(std::move(kernel)) {}

  KernelSpec kernel_;
  std::vector<SpatioTemporalInput> inputs_;
  Eigen::MatrixXd cholesky_lower_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double noise_std_ = 0.0;
  double log_det_term_ = 0.0;
};

Posterior fit(const Dataset& dataset, const KernelSpec& kernel);

/// B + noise * sqrt(2 (ln(1/delta) + log_det_term / 2)).
double beta(const Posterior& posterior, double bound_B, double noise_std, double delta);

struct ConfidenceBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline ConfidenceBounds confidence_bounds(double mean, double stddev, double beta) {
  return {mean - beta * stddev, mean + beta * stddev};
}

}  // namespace mabo
