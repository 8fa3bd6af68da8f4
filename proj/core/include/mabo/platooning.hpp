#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "mabo/orchestrator.hpp"
#include "mabo/rng.hpp"

namespace mabo {

constexpr double kGravity = 9.81;
constexpr double kAirDensity = 1.225;

struct VehicleParams {
  double wheel_radius = 0.5;    ///< m
  double rolling_coeff = 6e-3;  ///< c_R
  double frontal_area = 6.0;    ///< m^2
  double drag_coeff = 0.6;      ///< C_D
  double mass = 2000.0;         ///< kg

  /// Draws every field uniformly from its nominal range.
  static VehicleParams sample(RandomStream& rng);
  void validate() const;
};

/// How the controller output K_P * e enters the force balance.
/// WheelTorque divides by the wheel radius to get traction force.
enum class TractionInput { WheelTorque, Force };

struct PlatoonConfig {
  double d_ref = 100.0;
  double leader_speed = 30.0;
  double episode_length = 120.0;  ///< s
  double dt = 0.1;                ///< s
  /// Rear to front; the last entry is the leader.
  std::vector<double> initial_positions{0.0, 300.0, 520.0, 700.0, 1000.0};
  double follower_initial_speed = 30.0;
  TractionInput traction = TractionInput::WheelTorque;
  /// One entry per follower, rear to front. Empty means "sample from seed".
  std::vector<VehicleParams> vehicles;
  std::uint64_t seed = 0;

  std::size_t num_followers() const { return initial_positions.empty() ? 0 : initial_positions.size() - 1; }
  std::size_t steps() const;
  void validate() const;
};

/// Returns a copy with `vehicles` filled in from the seed when it is empty.
PlatoonConfig resolve_vehicles(PlatoonConfig config);

struct EpisodeTrace {
  /// distances[k][i-1] = position of the vehicle ahead of follower i minus its own.
  std::vector<std::vector<double>> distances;
  /// Per step, followers rear to front then the leader.
  std::vector<std::vector<double>> positions;
  std::vector<std::vector<double>> velocities;
  double min_distance = 0.0;
  bool crashed = false;
  double dt = 0.1;

  std::size_t recorded_steps() const { return distances.size(); }
};

/// Error signal of follower i (1-based, rear to front). The leader's slot
/// is filled with d_ref.
double controller_error(std::span<const double> distances, double d_ref, std::size_t i, std::size_t num_followers);

/// One explicit step of m dv/dt = F - c_R m g - rho C_D A v^2 / 2 with the
/// traction force F in newtons. Velocity is clamped at zero.
std::pair<double, double> vehicle_step(double velocity, double position, double force, const VehicleParams& params,
                                       double dt);

EpisodeTrace simulate_episode(std::span<const double> gains, const PlatoonConfig& config);

double platooning_reward(const EpisodeTrace& trace, double d_ref, std::size_t num_followers, std::size_t steps);

/// Reward of one episode with one gain per follower (N_f x 1 joint matrix).
double platooning_oracle(const JointParams& gains, const PlatoonConfig& config);

/// Oracle closure over a config with resolved vehicle parameters.
RewardOracle make_platooning_oracle(const PlatoonConfig& config);

/// Columns: step, time, pos_*, vel_* (followers then leader), d_* per follower.
void write_episode_csv(std::ostream& out, const EpisodeTrace& trace);

}  // namespace mabo
