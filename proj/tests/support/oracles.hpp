#pragma once

// Reference computations that avoid the library's own factorizations.

#include <Eigen/Dense>

#include "mabo/gp.hpp"
#include "mabo/kernels.hpp"

namespace mabo::testing {

/// GP posterior from an explicit dense inverse of K + (sigma^2 + jitter) I.
struct DenseOracle {
  Eigen::MatrixXd inverse;
  Eigen::VectorXd weights;
  const Dataset* data;
  KernelSpec kernel;

  DenseOracle(const Dataset& d, const KernelSpec& k, double jitter) : data(&d), kernel(k) {
    Eigen::MatrixXd a = gram(k, d.inputs);
    a.diagonal().array() += d.noise_std * d.noise_std + jitter;
    inverse = a.fullPivLu().inverse();
    weights = inverse * Eigen::Map<const Eigen::VectorXd>(d.targets.data(), static_cast<Eigen::Index>(d.size()));
  }

  Eigen::VectorXd cross(const InputView& x) const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(data->size()));
    for (std::size_t j = 0; j < data->size(); ++j) c[static_cast<Eigen::Index>(j)] = kernel(x, data->inputs[j]);
    return c;
  }
  double mean(const InputView& x) const { return cross(x).dot(weights); }
  double variance(const InputView& x) const {
    const Eigen::VectorXd c = cross(x);
    return kernel(x, x) - c.dot(inverse * c);
  }
};

}  // namespace mabo::testing
