#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "mabo/error.hpp"
#include "mabo/kernels.hpp"

namespace mabo {
namespace {

using testing::draw_inputs;
using testing::draw_params;
using testing::draw_point;
using testing::draw_size;

const BaseKernelParams kUnit{1.0, 1.0};
// Temporal hyperparameters of the illustrative temporal kernel figure.
const BaseKernelParams kFigRbf{5.0, 1.0};
const BaseKernelParams kFigMa12{1.0, 100.0};

double eval1d(KernelKind kind, BaseKernelParams p, double r) {
  const double x[1] = {0.0};
  const double y[1] = {r};
  return eval_base(kind, p, x, y);
}

TEST(BaseKernels, RbfDiagonalIsOutputVariance) {
  RandomStream rng(1);
  const auto x = draw_point(rng, 3);
  const std::span<const double> s(x.data(), 3);
  EXPECT_EQ(eval_base(KernelKind::RBF, kUnit, s, s), 1.0);
  EXPECT_EQ(eval_base(KernelKind::RBF, {0.3, 2.5}, s, s), 2.5);
}

TEST(BaseKernels, Matern12AtUnitDistance) {
  EXPECT_NEAR(eval1d(KernelKind::Matern12, kUnit, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(eval1d(KernelKind::Matern12, kUnit, 1.0), 0.367879, 1e-6);
}

TEST(BaseKernels, Matern52AtUnitDistance) {
  const double s5 = std::sqrt(5.0);
  EXPECT_NEAR(eval1d(KernelKind::Matern52, kUnit, 1.0), (1.0 + s5 + 5.0 / 3.0) * std::exp(-s5), 1e-15);
  EXPECT_NEAR(eval1d(KernelKind::Matern52, kUnit, 1.0), 0.523994, 1e-6);
}

TEST(BaseKernels, ClosedFormsAgainstDirectFormulas) {
  RandomStream rng(2);
  for (int i = 0; i < 200; ++i) {
    const double r = rng.uniform(0.0, 3.0);
    const double l = rng.uniform(0.1, 2.0);
    const double v = rng.uniform(0.1, 4.0);
    const double q = r / l;
    EXPECT_NEAR(eval1d(KernelKind::RBF, {l, v}, r), v * std::exp(-0.5 * q * q), 1e-14);
    EXPECT_NEAR(eval1d(KernelKind::Matern12, {l, v}, r), v * std::exp(-q), 1e-14);
    EXPECT_NEAR(eval1d(KernelKind::Matern32, {l, v}, r), v * (1 + std::sqrt(3.0) * q) * std::exp(-std::sqrt(3.0) * q),
                1e-14);
    EXPECT_NEAR(eval1d(KernelKind::Matern52, {l, v}, r),
                v * (1 + std::sqrt(5.0) * q + 5.0 * q * q / 3.0) * std::exp(-std::sqrt(5.0) * q), 1e-14);
  }
}

TEST(BaseKernels, Errors) {
  const double a[2] = {0.0, 1.0};
  const double b[1] = {0.0};
  EXPECT_THROW(eval_base(KernelKind::RBF, kUnit, a, b), InputError);
  EXPECT_THROW(eval_base(KernelKind::RBF, {0.0, 1.0}, b, b), ConfigError);
  EXPECT_THROW(eval_base(KernelKind::RBF, {1.0, -1.0}, b, b), ConfigError);
  EXPECT_THROW(KernelSpec::matern52({-1.0, 1.0}), ConfigError);
  EXPECT_THROW(KernelSpec::weighting(1), ConfigError);
}

TEST(WeightingKernel, Examples) {
  EXPECT_EQ(eval_weighting(25, 25, 50), 0.25);
  EXPECT_EQ(eval_weighting(50, 50, 50), 0.0);
  EXPECT_DOUBLE_EQ(eval_weighting(10, 40, 50), 0.04);
  EXPECT_DOUBLE_EQ(eval_weighting(40, 10, 50), 0.04);
}

TEST(WeightingKernel, OutsideDomainThrows) {
  EXPECT_THROW(eval_weighting(-0.5, 1, 50), InputError);
  EXPECT_THROW(eval_weighting(1, 50.5, 50), InputError);
  EXPECT_NO_THROW(eval_weighting(0, 50, 50));
}

TEST(WeightingKernel, EqualsBrownianTimesReverseBrownian) {
  for (int T : {2, 7, 50, 51}) {
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) {
        const double t = T * i / 49.0;
        const double u = T * j / 49.0;
        const double bm = std::min(t, u);
        const double rbm = std::min(T - t, T - u);
        EXPECT_EQ(eval_weighting(t, u, T), bm * rbm / (static_cast<double>(T) * T));
      }
    }
  }
}

TEST(TemporalKernel, Examples) {
  EXPECT_DOUBLE_EQ(eval_temporal(25, 25, kFigRbf, kFigMa12, 50), 26.0);
  EXPECT_DOUBLE_EQ(eval_temporal(50, 50, kFigRbf, kFigMa12, 50), 1.0);
  const double far = eval_temporal(1, 50, kFigRbf, kFigMa12, 50);
  EXPECT_LT(far, 1e-20);
  EXPECT_GE(far, 0.0);
}

TEST(TemporalKernel, TreeMatchesClosedForm) {
  const KernelSpec k = temporal_kernel(kFigRbf, kFigMa12, 50);
  RandomStream rng(3);
  for (int i = 0; i < 500; ++i) {
    const double t = rng.uniform(0, 50);
    const double u = rng.uniform(0, 50);
    const double tree = k(InputView{{}, t}, InputView{{}, u});
    EXPECT_NEAR(tree, eval_temporal(t, u, kFigRbf, kFigMa12, 50), 1e-12 * std::max(1.0, tree));
  }
}

TEST(TemporalKernel, DiagonalDominance) {
  RandomStream rng(4);
  for (int i = 0; i < 2000; ++i) {
    const auto rbf = draw_params(rng, 0.5, 30);
    const auto ma12 = draw_params(rng, 0.5, 10);
    const double t = rng.uniform(0, 51);
    const double u = rng.uniform(0, 51);
    const double diag = eval_temporal(t, t, rbf, ma12, 51);
    EXPECT_GE(diag, std::abs(eval_temporal(t, u, rbf, ma12, 51)) - 1e-15);
  }
}

TEST(SpatioTemporalKernel, Examples) {
  const KernelSpec k = spatio_temporal_kernel(kUnit, kFigRbf, kFigMa12, 50);
  const SpatioTemporalInput x{Eigen::Vector2d(0.3, 0.7), 25.0};
  EXPECT_DOUBLE_EQ(eval_spatio_temporal(k, x, x), 26.0);
  EXPECT_DOUBLE_EQ(k(x, x), 26.0);

  const SpatioTemporalInput far{Eigen::Vector2d(1e3, -1e3), 25.0};
  EXPECT_LT(eval_spatio_temporal(k, x, far), 1e-100);
}

TEST(SpatioTemporalKernel, RejectsMalformedTree) {
  const SpatioTemporalInput x{Eigen::Vector2d(0.3, 0.7), 25.0};
  EXPECT_THROW(eval_spatio_temporal(KernelSpec::matern52(kUnit), x, x), ConfigError);
  const KernelSpec swapped =
      KernelSpec::product({KernelSpec::rbf(kUnit, InputSlice::Time), KernelSpec::rbf(kUnit, InputSlice::Time)});
  EXPECT_THROW(eval_spatio_temporal(swapped, x, x), ConfigError);
}

TEST(KernelSpec, SymmetryIsExact) {
  RandomStream rng(5);
  std::vector<KernelSpec> kernels{
      KernelSpec::rbf(draw_params(rng, 0.1, 1)),      KernelSpec::matern12(draw_params(rng, 0.1, 1)),
      KernelSpec::matern32(draw_params(rng, 0.1, 1)), KernelSpec::matern52(draw_params(rng, 0.1, 1)),
      KernelSpec::weighting(51),                      temporal_kernel(kFigRbf, kFigMa12, 51),
      testing::draw_spatio_temporal(rng, 51)};
  for (const auto& k : kernels) {
    for (int i = 0; i < 1000; ++i) {
      const auto a = testing::draw_input(rng, 3, 0, 51);
      const auto b = testing::draw_input(rng, 3, 0, 51);
      EXPECT_EQ(k(a, b), k(b, a));
    }
  }
}

TEST(Gram, SmallCases) {
  const KernelSpec k = KernelSpec::matern52(kUnit);
  const SpatioTemporalInput x{Eigen::Vector2d(0.1, 0.2), 1.0};
  std::vector<SpatioTemporalInput> one{x};
  const auto g1 = gram(k, one);
  ASSERT_EQ(g1.rows(), 1);
  EXPECT_EQ(g1(0, 0), 1.0);
  std::vector<SpatioTemporalInput> dup{x, x};
  EXPECT_EQ(gram(k, dup).determinant(), 0.0);
}

TEST(Gram, TemporalRandomSetsArePsd) {
  RandomStream rng(6);
  const KernelSpec k = temporal_kernel(kFigRbf, kFigMa12, 50);
  for (int trial = 0; trial < 20; ++trial) {
    const auto xs = draw_inputs(rng, 20, 0, 1, 50);
    const auto s = spectrum_summary(gram(k, xs));
    EXPECT_GE(s.min_eigenvalue, -1e-8 * s.max_eigenvalue);
  }
}

// Property: every Gram matrix of the composite family passes check_psd.
TEST(Gram, PsdProperty) {
  RandomStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = draw_size(rng, 1, 40);
    const std::size_t d = draw_size(rng, 1, 4);
    KernelSpec k = KernelSpec::matern52(draw_params(rng, 0.05, 2.0));
    if (trial % 3 == 1) k = temporal_kernel(draw_params(rng, 1, 30), draw_params(rng, 0.5, 10), 51);
    if (trial % 3 == 2) k = testing::draw_spatio_temporal(rng, 51);
    const auto g = gram(k, draw_inputs(rng, m, d, 1, 51, 0.2));
    EXPECT_TRUE(check_psd(g, 1e-8)) << "trial " << trial;
  }
}

TEST(CheckPsd, Examples) {
  EXPECT_TRUE(check_psd(Eigen::MatrixXd::Identity(4, 4)));
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  EXPECT_FALSE(check_psd(bad));
  const auto s = spectrum_summary(bad);
  EXPECT_NEAR(s.min_eigenvalue, -1.0, 1e-14);
  EXPECT_NEAR(s.max_eigenvalue, 3.0, 1e-14);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(check_psd(asym), InputError);
}

TEST(IsotropicFactor, FoundForSpatioTemporalKernel) {
  const KernelSpec k = spatio_temporal_kernel({0.3, 1.0}, kFigRbf, kFigMa12, 51);
  const auto f = isotropic_spatial_factor(k);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->kind(), KernelKind::Matern52);
  const KernelSpec mixed = KernelSpec::sum({KernelSpec::matern52(kUnit), KernelSpec::rbf(kUnit)});
  EXPECT_FALSE(isotropic_spatial_factor(mixed).has_value());
}

TEST(KernelJson, RoundTrip) {
  const KernelSpec k = spatio_temporal_kernel({0.3, 1.0}, {20, 0.01}, {5, 0.01}, 51);
  const nlohmann::json j = k;
  const KernelSpec back = kernel_from_json(j);
  EXPECT_EQ(nlohmann::json(back), j);
  RandomStream rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto a = testing::draw_input(rng, 2, 1, 51);
    const auto b = testing::draw_input(rng, 2, 1, 51);
    EXPECT_EQ(k(a, b), back(a, b));
  }
}

TEST(KernelJson, UnknownKeyNamesPath) {
  nlohmann::json j = spatio_temporal_kernel({0.3, 1.0}, {20, 0.01}, {5, 0.01}, 51);
  j["children"][1]["children"][0]["bogus"] = 1;
  try {
    kernel_from_json(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kernel.children[1].children[0].bogus"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace mabo
