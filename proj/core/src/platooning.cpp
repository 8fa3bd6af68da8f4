#include "mabo/platooning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <tuple>

#include "mabo/csv.hpp"
#include "mabo/error.hpp"

namespace mabo {

namespace {

constexpr double kGainLower = 0.0;
constexpr double kGainUpper = 10.0;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(std::string(name) + " must be positive");
}

}  // namespace

VehicleParams VehicleParams::sample(RandomStream& rng) {
  VehicleParams p;
  p.wheel_radius = rng.uniform(0.4, 0.6);
  p.rolling_coeff = rng.uniform(4e-3, 8e-3);
  p.frontal_area = rng.uniform(5.0, 7.0);
  p.drag_coeff = rng.uniform(0.4, 0.8);
  p.mass = rng.uniform(1950.0, 2050.0);
  return p;
}

void VehicleParams::validate() const {
  require_positive(wheel_radius, "vehicle.wheel_radius");
  require_positive(mass, "vehicle.mass");
  if (!(rolling_coeff >= 0.0) || !(frontal_area >= 0.0) || !(drag_coeff >= 0.0)) {
    throw ConfigError("vehicle resistance coefficients must be non-negative");
  }
}

std::size_t PlatoonConfig::steps() const {
  return static_cast<std::size_t>(std::llround(episode_length / dt));
}

void PlatoonConfig::validate() const {
  require_positive(dt, "platoon.dt");
  require_positive(episode_length, "platoon.episode_length");
  require_positive(d_ref, "platoon.d_ref");
  if (!(leader_speed >= 0.0)) throw ConfigError("platoon.leader_speed must be non-negative");
  if (!(follower_initial_speed >= 0.0)) throw ConfigError("platoon.follower_initial_speed must be non-negative");
  const double ratio = episode_length / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("platoon.episode_length must be an integer multiple of dt");
  }
  if (initial_positions.size() < 2) throw ConfigError("platoon needs a leader and at least one follower");
  for (std::size_t i = 1; i < initial_positions.size(); ++i) {
    if (!(initial_positions[i] > initial_positions[i - 1])) {
      throw ConfigError("platoon.initial_positions must be strictly increasing rear to front");
    }
  }
  if (!vehicles.empty() && vehicles.size() != num_followers()) {
    throw ConfigError("platoon.vehicles needs one entry per follower");
  }
  for (const auto& v : vehicles) v.validate();
}

PlatoonConfig resolve_vehicles(PlatoonConfig config) {
  if (config.vehicles.empty()) {
    RandomStream rng = RandomStream::named(config.seed, "vehicle_params");
    for (std::size_t i = 0; i < config.num_followers(); ++i) config.vehicles.push_back(VehicleParams::sample(rng));
  }
  config.validate();
  return config;
}

double controller_error(std::span<const double> distances, double d_ref, std::size_t i, std::size_t num_followers) {
  if (num_followers == 0 || i < 1 || i > num_followers || distances.size() < num_followers) {
    throw InputError("controller_error: follower index out of range");
  }
  const double next = i < num_followers ? distances[i] : d_ref;
  const double own = distances[i - 1];
  if (i == 1) return own + next;
  return -distances[i - 2] + 2.0 * own + next;
}

std::pair<double, double> vehicle_step(double velocity, double position, double force, const VehicleParams& params,
                                       double dt) {
  if (!std::isfinite(velocity) || !std::isfinite(position) || !std::isfinite(force)) {
    throw NumericalError("vehicle state is not finite");
  }
  if (velocity < 0.0) throw InputError("vehicle velocity must be non-negative");
  const double rolling = params.rolling_coeff * params.mass * kGravity;
  const double drag = 0.5 * kAirDensity * params.drag_coeff * params.frontal_area * velocity * velocity;
  double v = velocity + (force - rolling - drag) / params.mass * dt;
  if (v < 0.0) v = 0.0;
  const double x = position + v * dt;
  if (!std::isfinite(v) || !std::isfinite(x)) throw NumericalError("vehicle state is not finite");
  return {v, x};
}

EpisodeTrace simulate_episode(std::span<const double> gains, const PlatoonConfig& config) {
  const PlatoonConfig cfg = resolve_vehicles(config);
  const std::size_t nf = cfg.num_followers();
  if (gains.size() != nf) throw InputError("simulate_episode needs one gain per follower");
  for (double g : gains) {
    if (!(g >= kGainLower && g <= kGainUpper)) throw InputError("gains must lie in [0, 10]");
  }

  const std::size_t steps = cfg.steps();
  const double leader_start = cfg.initial_positions.back();
  std::vector<double> pos(cfg.initial_positions.begin(), cfg.initial_positions.end() - 1);
  std::vector<double> vel(nf, cfg.follower_initial_speed);
  std::vector<double> d(nf);
  std::vector<double> force(nf);

  EpisodeTrace trace;
  trace.dt = cfg.dt;
  trace.distances.reserve(steps);
  trace.positions.reserve(steps);
  trace.velocities.reserve(steps);
  double min_distance = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < steps; ++k) {
    const double leader = leader_start + cfg.leader_speed * static_cast<double>(k) * cfg.dt;
    for (std::size_t i = 0; i < nf; ++i) d[i] = (i + 1 < nf ? pos[i + 1] : leader) - pos[i];
    if (*std::min_element(d.begin(), d.end()) <= 0.0) {
      trace.crashed = true;
      break;
    }
    min_distance = std::min(min_distance, *std::min_element(d.begin(), d.end()));
    trace.distances.push_back(d);
    std::vector<double> p = pos;
    p.push_back(leader);
    std::vector<double> v = vel;
    v.push_back(cfg.leader_speed);
    trace.positions.push_back(std::move(p));
    trace.velocities.push_back(std::move(v));

    for (std::size_t i = 0; i < nf; ++i) {
      const double u = gains[i] * controller_error(d, cfg.d_ref, i + 1, nf);
      force[i] = cfg.traction == TractionInput::WheelTorque ? u / cfg.vehicles[i].wheel_radius : u;
    }
    try {
      for (std::size_t i = 0; i < nf; ++i) {
        std::tie(vel[i], pos[i]) = vehicle_step(vel[i], pos[i], force[i], cfg.vehicles[i], cfg.dt);
      }
    } catch (const NumericalError&) {
      trace.crashed = true;
      break;
    }
  }
  trace.min_distance = trace.crashed ? 0.0 : min_distance;
  return trace;
}

double platooning_reward(const EpisodeTrace& trace, double d_ref, std::size_t num_followers, std::size_t steps) {
  const double m = trace.min_distance;
  double deviation = 0.0;
  for (const auto& row : trace.distances) {
    for (double d : row) deviation += std::abs(d - d_ref);
  }
  const double scale = 1000.0 * d_ref * static_cast<double>(num_followers) * static_cast<double>(steps);
  return -(deviation * m) / scale - ((d_ref - m) * (1.0 - m)) / d_ref;
}

double platooning_oracle(const JointParams& gains, const PlatoonConfig& config) {
  if (gains.cols() != 1) throw InputError("platooning oracle expects one gain per agent");
  const std::vector<double> k(gains.data(), gains.data() + gains.size());
  const EpisodeTrace trace = simulate_episode(k, config);
  return platooning_reward(trace, config.d_ref, config.num_followers(), config.steps());
}

RewardOracle make_platooning_oracle(const PlatoonConfig& config) {
  auto resolved = std::make_shared<const PlatoonConfig>(resolve_vehicles(config));
  return [resolved](const JointParams& gains) { return platooning_oracle(gains, *resolved); };
}

void write_episode_csv(std::ostream& out, const EpisodeTrace& trace) {
  const std::size_t nv = trace.positions.empty() ? 0 : trace.positions.front().size();
  const std::size_t nf = nv == 0 ? 0 : nv - 1;
  std::vector<std::string> header{"step", "time"};
  auto vehicle_name = [nf](std::size_t i) { return i < nf ? std::to_string(i + 1) : std::string("leader"); };
  for (std::size_t i = 0; i < nv; ++i) header.push_back("pos_" + vehicle_name(i));
  for (std::size_t i = 0; i < nv; ++i) header.push_back("vel_" + vehicle_name(i));
  for (std::size_t i = 0; i < nf; ++i) header.push_back("d_" + std::to_string(i + 1));
  CsvWriter csv(out, std::move(header));
  for (std::size_t k = 0; k < trace.recorded_steps(); ++k) {
    csv.field(k).field(static_cast<double>(k) * trace.dt);
    for (double x : trace.positions[k]) csv.field(x);
    for (double v : trace.velocities[k]) csv.field(v);
    for (double d : trace.distances[k]) csv.field(d);
    csv.end_row();
  }
}

}  // namespace mabo
