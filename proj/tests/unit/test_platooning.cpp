#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "mabo/error.hpp"
#include "mabo/platooning.hpp"
#include "mabo/rng.hpp"

namespace mabo {
namespace {

const std::vector<double> kReferenceGains{6.57, 5.00, 4.44, 6.77};
const std::vector<double> kInitialGains{4.0, 5.0, 4.0, 5.0};

double drag_force(const VehicleParams& p, double v) { return 0.5 * kAirDensity * p.drag_coeff * p.frontal_area * v * v; }

JointParams column(const std::vector<double>& g) {
  return Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
}

TEST(ControllerError, Examples) {
  const std::vector<double> flat(4, 100.0);
  for (std::size_t i = 1; i <= 4; ++i) EXPECT_EQ(controller_error(flat, 100.0, i, 4), 200.0);
  EXPECT_EQ(controller_error(std::vector<double>{90.0, 110.0}, 100.0, 1, 2), 200.0);
  EXPECT_EQ(controller_error(std::vector<double>{100.0, 90.0, 110.0}, 100.0, 2, 3), 190.0);
  EXPECT_EQ(controller_error(std::vector<double>{100.0, 90.0, 110.0}, 100.0, 3, 3), -90.0 + 220.0 + 100.0);
  EXPECT_THROW(controller_error(flat, 100.0, 0, 4), InputError);
  EXPECT_THROW(controller_error(flat, 100.0, 5, 4), InputError);
}

TEST(VehicleStep, Examples) {
  const VehicleParams p;
  const double hold = p.rolling_coeff * p.mass * kGravity + drag_force(p, 25.0);
  const auto [v_eq, x_eq] = vehicle_step(25.0, 10.0, hold, p, 0.1);
  EXPECT_NEAR(v_eq, 25.0, 1e-12);
  EXPECT_NEAR(x_eq, 12.5, 1e-12);

  const auto [v_rest, x_rest] = vehicle_step(0.0, 5.0, 0.0, p, 0.1);
  EXPECT_EQ(v_rest, 0.0);
  EXPECT_EQ(x_rest, 5.0);

  const auto [v, x] = vehicle_step(30.0, 0.0, 0.0, p, 0.1);
  EXPECT_NEAR(v - 30.0, -(117.72 + 1984.5) / 2000.0 * 0.1, 1e-12);
  EXPECT_NEAR(v - 30.0, -0.10511, 1e-5);
  EXPECT_NEAR(x, v * 0.1, 1e-12);

  EXPECT_THROW(vehicle_step(-1.0, 0.0, 0.0, p, 0.1), InputError);
  EXPECT_THROW(vehicle_step(1.0, 0.0, std::nan(""), p, 0.1), NumericalError);
}

TEST(Reward, Examples) {
  EpisodeTrace perfect;
  perfect.distances.assign(10, std::vector<double>(4, 100.0));
  perfect.min_distance = 100.0;
  EXPECT_EQ(platooning_reward(perfect, 100.0, 4, 10), 0.0);

  EpisodeTrace crash;
  crash.distances.assign(3, std::vector<double>(4, 50.0));
  crash.crashed = true;
  crash.min_distance = 0.0;
  EXPECT_EQ(platooning_reward(crash, 100.0, 4, 1200), -1.0);

  EpisodeTrace single;
  single.distances = {{110.0}};
  single.min_distance = 110.0;
  // -(10 * 110) / 1e5 - (-10)(-109) / 100
  EXPECT_NEAR(platooning_reward(single, 100.0, 1, 1), -0.011 - 10.9, 1e-12);
}

TEST(Episode, ReferenceGainsStaySafe) {
  const PlatoonConfig config;
  const EpisodeTrace trace = simulate_episode(kReferenceGains, config);
  EXPECT_FALSE(trace.crashed);
  EXPECT_GT(trace.min_distance, 0.0);
  EXPECT_EQ(trace.recorded_steps(), 1200u);
}

TEST(Episode, InitialGainsAreSafe) {
  EXPECT_GT(platooning_oracle(column(kInitialGains), PlatoonConfig{}), -1.0);
}

// Identical vehicles coasting at the same speed keep their gaps; only the
// leader pulls away.
TEST(Episode, ZeroGainsCoastWithIdenticalVehicles) {
  PlatoonConfig config;
  config.vehicles.assign(4, VehicleParams{});
  const EpisodeTrace trace = simulate_episode(std::vector<double>(4, 0.0), config);
  EXPECT_FALSE(trace.crashed);
  EXPECT_GE(trace.min_distance, 180.0 - 1e-9);
  const auto& first = trace.distances.front();
  const auto& last = trace.distances.back();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(last[i], first[i], 1e-6);
  EXPECT_GT(last[3], first[3]);
}

// With sampled vehicles the coasting followers decelerate at different rates.
TEST(Episode, ZeroGainsDefaultConfigKeepsInitialMinimumGap) {
  const PlatoonConfig config;
  const EpisodeTrace trace = simulate_episode(std::vector<double>(4, 0.0), config);
  EXPECT_FALSE(trace.crashed);
  EXPECT_GE(trace.min_distance, 180.0);
}

TEST(Episode, PileUpIsACrash) {
  PlatoonConfig config;
  config.initial_positions = {0.0, 1.0, 2.0, 3.0, 4.0};
  config.leader_speed = 0.0;
  const EpisodeTrace trace = simulate_episode(std::vector<double>(4, 0.0), config);
  EXPECT_TRUE(trace.crashed);
  EXPECT_EQ(trace.min_distance, 0.0);
  EXPECT_LT(trace.recorded_steps(), config.steps());
  EXPECT_EQ(platooning_oracle(column(std::vector<double>(4, 0.0)), config), -1.0);
}

TEST(Episode, TelescopingAndLeaderInvariance) {
  PlatoonConfig config;
  const EpisodeTrace trace = simulate_episode(kReferenceGains, config);
  for (std::size_t k = 0; k < trace.recorded_steps(); ++k) {
    const auto& d = trace.distances[k];
    const auto& p = trace.positions[k];
    double sum = p.front();
    for (double x : d) sum += x;
    EXPECT_NEAR(sum, p.back(), 1e-9 * p.back());
    EXPECT_EQ(p.back(), 1000.0 + 30.0 * static_cast<double>(k) * 0.1);
    EXPECT_EQ(trace.velocities[k].back(), 30.0);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_GE(d[i], trace.min_distance);
  }
}

TEST(Episode, DeterministicAndSeedSensitive) {
  const PlatoonConfig config;
  EXPECT_EQ(platooning_oracle(column(kReferenceGains), config), platooning_oracle(column(kReferenceGains), config));
  PlatoonConfig other = config;
  other.seed = 1;
  EXPECT_NE(resolve_vehicles(config).vehicles.front().mass, resolve_vehicles(other).vehicles.front().mass);
}

TEST(Episode, RewardContinuousAwayFromCrashes) {
  const PlatoonConfig config = resolve_vehicles(PlatoonConfig{});
  RandomStream rng(3);
  int probes = 0;
  for (int attempt = 0; attempt < 200 && probes < 10; ++attempt) {
    std::vector<double> g(4);
    for (double& x : g) x = rng.uniform(0.5, 9.5);
    const double r = platooning_oracle(column(g), config);
    if (r == -1.0) continue;
    ++probes;
    for (double eps : {1e-4, 1e-6}) {
      std::vector<double> h = g;
      h[static_cast<std::size_t>(attempt) % 4] += eps;
      const double r2 = platooning_oracle(column(h), config);
      EXPECT_NE(r2, -1.0);
      EXPECT_LT(std::abs(r2 - r), 1e3 * eps) << "gains " << g[0] << "," << g[1] << "," << g[2] << "," << g[3];
    }
  }
  EXPECT_EQ(probes, 10);
}

TEST(Config, Validation) {
  PlatoonConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PlatoonConfig{};
  c.episode_length = 0.15;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PlatoonConfig{};
  c.initial_positions = {0.0, 300.0, 200.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = PlatoonConfig{};
  c.vehicles.assign(2, VehicleParams{});
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(simulate_episode(std::vector<double>(4, 11.0), PlatoonConfig{}), InputError);
  EXPECT_THROW(simulate_episode(std::vector<double>(3, 1.0), PlatoonConfig{}), InputError);
  EXPECT_EQ(PlatoonConfig{}.steps(), 1200u);
}

TEST(Csv, EpisodeColumns) {
  const EpisodeTrace trace = simulate_episode(kReferenceGains, PlatoonConfig{});
  std::ostringstream out;
  write_episode_csv(out, trace);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "step,time,pos_1,pos_2,pos_3,pos_4,pos_leader,vel_1,vel_2,vel_3,vel_4,vel_leader,d_1,d_2,d_3,d_4");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, trace.recorded_steps());
}

}  // namespace
}  // namespace mabo
