#include "mabo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mabo/error.hpp"

namespace mabo {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;
constexpr Eigen::Index kPredictChunk = 2048;

}  // namespace

Posterior fit(const Dataset& dataset, const KernelSpec& kernel) {
  if (dataset.inputs.size() != dataset.targets.size()) {
    throw InputError("dataset inputs and targets differ in length");
  }
  if (!(dataset.noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");

  Posterior post(kernel);
  post.noise_std_ = dataset.noise_std;
  post.inputs_ = dataset.inputs;
  const auto n = static_cast<Eigen::Index>(dataset.size());
  if (n == 0) return post;

  const Eigen::MatrixXd k = gram(kernel, dataset.inputs);
  const Eigen::Map<const Eigen::VectorXd> y(dataset.targets.data(), n);
  const double trace_mean = std::max(k.diagonal().mean(), std::numeric_limits<double>::min());
  const double noise_var = dataset.noise_std * dataset.noise_std;

  bool factored = false;
  for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-9); rel *= 10.0) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += noise_var + rel * trace_mean;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      post.cholesky_lower_ = llt.matrixL();
      post.alpha_ = llt.solve(y);
      post.jitter_ = rel * trace_mean;
      factored = true;
      break;
    }
  }
  if (!factored) {
    const auto spectrum = spectrum_summary(k);
    std::ostringstream msg;
    msg << "GP factorization failed for " << n << " points (condition estimate "
        << spectrum.max_eigenvalue / std::max(std::abs(spectrum.min_eigenvalue), 1e-300) << ")";
    throw NumericalError(msg.str());
  }

  if (dataset.noise_std > 0.0) {
    Eigen::MatrixXd scaled = k / noise_var;
    scaled.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(scaled);
    if (llt.info() != Eigen::Success) throw NumericalError("log-determinant factorization failed");
    post.log_det_term_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  return post;
}

double Posterior::mean(const InputView& x) const {
  double m = 0.0;
  for (std::size_t j = 0; j < inputs_.size(); ++j) m += kernel_(x, inputs_[j].view()) * alpha_(static_cast<Eigen::Index>(j));
  return m;
}

double Posterior::stddev(const InputView& x) const {
  const double prior = kernel_(x, x);
  if (inputs_.empty()) return std::sqrt(std::max(prior, 0.0));
  Eigen::VectorXd kx(static_cast<Eigen::Index>(inputs_.size()));
  for (std::size_t j = 0; j < inputs_.size(); ++j) kx(static_cast<Eigen::Index>(j)) = kernel_(x, inputs_[j].view());
  cholesky_lower_.triangularView<Eigen::Lower>().solveInPlace(kx);
  return std::sqrt(std::max(prior - kx.squaredNorm(), 0.0));
}

Prediction Posterior::predict(const PointMatrix& points, double time) const {
  const Eigen::Index m = points.rows();
  const auto n = static_cast<Eigen::Index>(inputs_.size());
  Prediction out{Eigen::VectorXd::Zero(m), Eigen::VectorXd(m)};

  Eigen::MatrixXd cross;
  for (Eigen::Index start = 0; start < m; start += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, m - start);
    Eigen::VectorXd prior(len);
    for (Eigen::Index c = 0; c < len; ++c) {
      const InputView x = row_view(points, start + c, time);
      prior(c) = kernel_(x, x);
    }
    if (n == 0) {
      out.stddev.segment(start, len) = prior.cwiseMax(0.0).cwiseSqrt();
      continue;
    }
    cross.resize(n, len);
    for (Eigen::Index c = 0; c < len; ++c) {
      const InputView x = row_view(points, start + c, time);
      for (Eigen::Index j = 0; j < n; ++j) cross(j, c) = kernel_(x, inputs_[static_cast<std::size_t>(j)].view());
    }
    out.mean.segment(start, len).noalias() = cross.transpose() * alpha_;
    cholesky_lower_.triangularView<Eigen::Lower>().solveInPlace(cross);
    const Eigen::VectorXd reduction = cross.colwise().squaredNorm().transpose();
    out.stddev.segment(start, len) = (prior - reduction).cwiseMax(0.0).cwiseSqrt();
  }
  return out;
}

double beta(const Posterior& posterior, double bound_B, double noise_std, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(bound_B >= 0.0)) throw ConfigError("RKHS bound B must be non-negative");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (noise_std == 0.0) return bound_B;
  const double inner = std::log(1.0 / delta) + 0.5 * posterior.log_det_term();
  return bound_B + noise_std * std::sqrt(2.0 * std::max(inner, 0.0));
}

}  // namespace mabo
