#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "mabo/config.hpp"
#include "mabo/error.hpp"
#include "mabo/kernels.hpp"

namespace mabo {
namespace {

using nlohmann::json;

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Defaults, FourAgents) {
  const RunConfig c = RunConfig::defaults(Experiment::Toy4);
  EXPECT_EQ(c.at("agents"), 4);
  EXPECT_EQ(c.at("iterations"), 50);
  EXPECT_EQ(c.at("rkhs_bound"), 1.0);
  EXPECT_EQ(c.at("domain.lower"), 0.0);
  EXPECT_EQ(c.at("domain.upper"), 1.0);
  EXPECT_EQ(c.at("kernel.rbf.lengthscale"), 20.0);
  EXPECT_EQ(c.at("kernel.matern12.lengthscale"), 5.0);
  EXPECT_EQ(c.at("kernel.rbf.sigma_f"), 0.1);
  EXPECT_EQ(c.at("kernel.matern12.sigma_f"), 0.1);
  EXPECT_EQ(c.at("kernel.spatial.lengthscale"), 0.3);
  EXPECT_EQ(c.at("kernel.spatial.sigma_f"), 1.0);
  EXPECT_EQ(c.at("reward.lengthscale"), 0.4);
  EXPECT_EQ(c.at("reward.centers"), 1000);
  EXPECT_EQ(c.at("reward.norm"), 1.0);
  EXPECT_EQ(c.at("quantile"), 0.2);
  EXPECT_EQ(c.at("variant"), "full_algorithm");
  EXPECT_NO_THROW(c.validate());
}

TEST(Defaults, EightAgents) {
  const RunConfig c = RunConfig::defaults(Experiment::Toy8);
  EXPECT_EQ(c.at("agents"), 8);
  EXPECT_EQ(c.at("reward.lengthscale"), 0.1);
  EXPECT_EQ(c.at("quantile"), 0.2);
}

TEST(Defaults, Platooning) {
  const RunConfig c = RunConfig::defaults(Experiment::Platooning);
  EXPECT_EQ(c.at("iterations"), 50);
  EXPECT_EQ(c.at("rkhs_bound"), 5.0);
  EXPECT_EQ(c.at("domain.upper"), 10.0);
  EXPECT_EQ(c.at("kernel.rbf.sigma_f"), 1.0);
  EXPECT_EQ(c.at("kernel.matern12.sigma_f"), 1.0);
  EXPECT_EQ(c.at("kernel.spatial.lengthscale"), 0.2);
  EXPECT_EQ(c.at("threshold"), -1.0);
  EXPECT_EQ(c.at("initial_params"), json({4.0, 5.0, 4.0, 5.0}));
  const PlatoonConfig p = platoon_config(c);
  EXPECT_EQ(p.episode_length, 120.0);
  EXPECT_EQ(p.dt, 0.1);
  EXPECT_EQ(p.d_ref, 100.0);
  EXPECT_EQ(p.leader_speed, 30.0);
  EXPECT_EQ(p.initial_positions, (std::vector<double>{0.0, 300.0, 520.0, 700.0, 1000.0}));
}

TEST(MasConfig, DerivedSettings) {
  const MasConfig m = mas_config(RunConfig::defaults(Experiment::Toy4));
  EXPECT_EQ(m.graph.num_agents(), 4u);
  EXPECT_EQ(m.graph.num_edges(), 3u);
  EXPECT_EQ(m.iterations, 50u);
  ASSERT_TRUE(m.temporal);
  EXPECT_DOUBLE_EQ(m.temporal->rbf.output_variance, 0.01);
  EXPECT_DOUBLE_EQ(m.spatial.lengthscale, 0.3);

  const MasConfig p = mas_config(RunConfig::defaults(Experiment::Platooning));
  EXPECT_DOUBLE_EQ(p.spatial.lengthscale, 0.2 * 10.0);  // lengthscales are relative to the domain width
  EXPECT_EQ(p.safety_threshold, -1.0);
  EXPECT_EQ(p.noise_std, 0.0);

  RunConfig nl = RunConfig::defaults(Experiment::Toy8);
  nl.set("variant", "no_latent");
  EXPECT_FALSE(mas_config(nl).temporal);
  nl.set("variant", "no_comm");
  EXPECT_EQ(mas_config(nl).graph.num_edges(), 0u);
}

TEST(Load, EmptyOverridesGiveDefaults) {
  const RunConfig c = load_config_text("{}", Experiment::Toy4);
  EXPECT_EQ(c.doc(), RunConfig::defaults(Experiment::Toy4).doc());
  const RunConfig p = load_config_text(R"({"experiment": "platooning"})", Experiment::Toy4);
  EXPECT_EQ(p.experiment(), Experiment::Platooning);
}

TEST(Load, InvalidQuantileRejected) {
  const std::string msg = error_of([] { load_config_text(R"({"quantile": 1.5})", Experiment::Toy4); });
  EXPECT_NE(msg.find("quantile"), std::string::npos) << msg;
}

TEST(Load, SeedOverrideChangesOnlySeed) {
  const RunConfig base = RunConfig::defaults(Experiment::Toy4);
  RunConfig seeded = base;
  seeded.set_from_text("seed", "7");
  EXPECT_EQ(seeded.seed(), 7u);
  json diff = json::diff(base.doc(), seeded.doc());
  ASSERT_EQ(diff.size(), 1u);
  EXPECT_EQ(diff[0]["path"], "/seed");
  EXPECT_NE(seeded.hash(), base.hash());
}

TEST(Load, UnknownKeysNamePath) {
  EXPECT_NE(error_of([] { load_config_text(R"({"kernel": {"spatial": {"lenghtscale": 1}}})", Experiment::Toy4); })
                .find("kernel.spatial.lenghtscale"),
            std::string::npos);
  RunConfig c = RunConfig::defaults(Experiment::Toy4);
  EXPECT_NE(error_of([&] { c.set("grid.bogus", 3); }).find("grid.bogus"), std::string::npos);
  EXPECT_THROW(c.at("nope"), ConfigError);
}

TEST(Load, TypeMismatchRejected) {
  RunConfig c = RunConfig::defaults(Experiment::Toy4);
  EXPECT_NE(error_of([&] { c.set("iterations", "many"); }).find("iterations"), std::string::npos);
  EXPECT_THROW(c.set("domain", 3), ConfigError);
  EXPECT_THROW(c.set("experiment", "toy8"), ConfigError);
  c.set_from_text("variant", "no_comm");
  EXPECT_EQ(c.variant(), Variant::NoComm);
  EXPECT_THROW(load_config_text(R"({"variant": "sideways"})", Experiment::Toy4), ConfigError);
  EXPECT_THROW(load_config_text("{not json", Experiment::Toy4), ConfigError);
  EXPECT_THROW(load_config_text(R"({"graph": "ring"})", Experiment::Toy4), ConfigError);
}

TEST(Load, CrossKeyChecks) {
  EXPECT_THROW(load_config_text(R"({"initial_params": [0.1, 0.2]})", Experiment::Toy4), ConfigError);
  EXPECT_THROW(load_config_text(R"({"initial_params": [4, 5, 4, 50]})", Experiment::Platooning), ConfigError);
  EXPECT_THROW(load_config_text(R"({"delta": 0})", Experiment::Toy4), ConfigError);
  EXPECT_THROW(load_config_text(R"({"quantile": null, "threshold": null})", Experiment::Toy4), ConfigError);
  EXPECT_THROW(load_config_text(R"({"platoon": {"traction": "magic"}})", Experiment::Platooning), ConfigError);
  EXPECT_NO_THROW(load_config_text(R"({"quantile": null, "threshold": 0.1})", Experiment::Toy4));
}

TEST(Load, FromFileAndMissingFile) {
  const auto path = std::filesystem::temp_directory_path() / "mabo_test_config.json";
  {
    std::ofstream out(path);
    out << R"({"experiment": "toy8", "iterations": 5, "kernel": {"spatial": {"lengthscale": 0.25}}})";
  }
  const RunConfig c = load_config(path, Experiment::Toy4);
  EXPECT_EQ(c.experiment(), Experiment::Toy8);
  EXPECT_EQ(c.at("iterations"), 5);
  EXPECT_EQ(c.at("kernel.spatial.lengthscale"), 0.25);
  EXPECT_EQ(c.at("kernel.spatial.sigma_f"), 1.0);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path, Experiment::Toy4), ConfigError);
}

TEST(Load, KernelSpecSubtreeIsOpaque) {
  RunConfig c = RunConfig::defaults(Experiment::SampleRkhs);
  c.set("kernel_spec", json(KernelSpec::matern52({0.2, 2.0})));
  EXPECT_NO_THROW(c.validate());
  c.set("kernel_spec", json{{"kind", "nonsense"}});
  EXPECT_THROW(c.validate(), std::exception);
}

TEST(Hash, StableAndSensitive) {
  const RunConfig a = RunConfig::defaults(Experiment::Toy4);
  const RunConfig b = RunConfig::defaults(Experiment::Toy4);
  EXPECT_EQ(a.hash(), b.hash());
  RunConfig c = a;
  c.set("noise_std", 0.002);
  EXPECT_NE(a.hash(), c.hash());
}

TEST(ExperimentNames, RoundTrip) {
  for (Experiment e : {Experiment::Toy4, Experiment::Toy8, Experiment::Platooning, Experiment::SampleRkhs,
                       Experiment::ValidateKernel}) {
    EXPECT_EQ(parse_experiment(to_string(e)), e);
  }
  EXPECT_THROW(parse_experiment("toy16"), ConfigError);
}

}  // namespace
}  // namespace mabo
