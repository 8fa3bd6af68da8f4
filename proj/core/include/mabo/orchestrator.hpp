#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mabo/comm_graph.hpp"
#include "mabo/gp.hpp"
#include "mabo/kernels.hpp"
#include "mabo/rng.hpp"
#include "mabo/safe_bo.hpp"

namespace mabo {

enum class Variant { FullAlgorithm, NoLatent, NoComm, FullComm };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();

/// Points per axis as a function of an agent's spatial dimension, with a
/// hard cap on the total lattice size.
struct ResolutionPolicy {
  std::size_t low_dim = 30;  ///< spatial dimension <= 2
  std::size_t dim3 = 12;
  std::size_t high_dim = 7;  ///< spatial dimension >= 4
  std::size_t max_points = 3'000'000;

  std::size_t resolution_for(std::size_t dims) const;
};

struct TemporalKernelParams {
  BaseKernelParams rbf{20.0, 0.01};
  BaseKernelParams matern12{5.0, 0.01};
};

struct MasConfig {
  CommGraph graph{1};
  std::size_t params_per_agent = 1;
  double domain_lower = 0.0;
  double domain_upper = 1.0;
  std::size_t iterations = 50;
  double rkhs_bound = 1.0;
  double safety_threshold = 0.0;
  double noise_std = 1e-3;
  double delta = 0.01;
  std::optional<double> beta_override;
  BaseKernelParams spatial{0.3, 1.0};
  /// Empty when time is not used as a latent input.
  std::optional<TemporalKernelParams> temporal = TemporalKernelParams{};
  ResolutionPolicy resolution;
  Variant variant = Variant::FullAlgorithm;
  std::uint64_t noise_seed = 0;
  bool parallel_agents = false;
};

/// Applies an ablation to a configuration. FullAlgorithm is the identity.
MasConfig ablation_variant(MasConfig config, Variant variant);

/// Joint parameters, one row per agent (N x n).
using JointParams = Eigen::MatrixXd;
using RewardOracle = std::function<double(const JointParams&)>;

/// Expert of iteration t: ((t - 1) mod N) + 1.
AgentId expert_index(std::size_t t, std::size_t num_agents);

/// Parameters one agent sent to a neighbor.
struct Message {
  AgentId from = 0;
  Eigen::VectorXd params;
};

/// Local view of one agent: its closed neighborhood, candidate lattice,
/// kernel and the rows it has observed. Holds nothing about non-neighbors.
class AgentState {
 public:
  AgentState(AgentId id, std::vector<AgentId> neighborhood, std::shared_ptr<const ParamGrid> lattice,
             KernelSpec kernel, std::size_t params_per_agent, double noise_std);

  AgentId id() const { return id_; }
  const std::vector<AgentId>& neighborhood() const { return neighborhood_; }
  std::size_t own_slot() const { return own_slot_; }
  std::size_t params_per_agent() const { return params_per_agent_; }
  const ParamGrid& lattice() const { return *lattice_; }
  const KernelSpec& kernel() const { return kernel_; }
  const Dataset& dataset() const { return dataset_; }

  /// Own parameters inside a neighborhood row.
  Eigen::VectorXd own_part(const Eigen::VectorXd& row) const;
  /// Parameters of neighborhood member `member` inside a neighborhood row.
  Eigen::VectorXd member_part(const Eigen::VectorXd& row, AgentId member) const;

  /// Appends the row built from the own applied parameters and the messages
  /// received this iteration. Rejects messages from non-neighbors.
  void record(const Eigen::VectorXd& own_applied, const std::vector<Message>& inbox, double time, double reward);

 private:
  AgentId id_;
  std::vector<AgentId> neighborhood_;
  std::size_t own_slot_ = 0;
  std::size_t params_per_agent_ = 1;
  std::shared_ptr<const ParamGrid> lattice_;
  KernelSpec kernel_;
  Dataset dataset_;
};

/// What one agent decided in one iteration (lines 3-7 of the loop).
struct AgentPlan {
  Eigen::VectorXd suggestion;  ///< over the closed neighborhood
  Eigen::VectorXd own;         ///< projection onto the agent's own slot
  bool fallback = false;
  bool suggestion_safe = false;
  std::size_t safe_count = 0;
  std::size_t maximizer_count = 0;
  std::size_t expander_count = 0;
  std::size_t grid_size = 0;
  double beta = 0.0;
};

/// Pure planning step for one agent at iteration t (predicts at t + 1).
AgentPlan plan_agent(const AgentState& agent, std::size_t t, const MasConfig& config);

struct AgentTrace {
  std::size_t t = 0;
  AgentId agent = 0;
  AgentId expert = 0;
  Eigen::VectorXd suggested_own;
  Eigen::VectorXd applied_own;
  bool overridden = false;
  bool fallback = false;
  std::size_t safe_count = 0;
  std::size_t maximizer_count = 0;
  std::size_t expander_count = 0;
  std::size_t grid_size = 0;
  double beta = 0.0;
};

struct RunResult {
  /// Index 0 holds the initial parameters; index t the parameters of iteration t.
  std::vector<JointParams> joint_params;
  std::vector<double> rewards;
  std::vector<std::uint8_t> violations;
  double threshold = 0.0;
  JointParams best_param;
  double best_reward = 0.0;
  std::size_t best_index = 0;
  std::vector<AgentTrace> traces;
  /// Set when the oracle failed and the run stopped early.
  std::optional<std::string> error;

  std::size_t violation_count() const;
};

/// Runs the distributed safe optimization loop against a reward oracle.
class Orchestrator {
 public:
  Orchestrator(MasConfig config, RewardOracle oracle);

  /// Evaluates a0 and stores it as the first row (time index 1) for every agent.
  void initialize(const JointParams& a0);
  /// One iteration t >= 1: plan, expert override, exchange, experiment, update.
  void step(std::size_t t);
  RunResult run(const JointParams& a0);

  const std::vector<AgentState>& agents() const { return agents_; }
  const RunResult& result() const { return result_; }
  const MasConfig& config() const { return config_; }

 private:
  double observe(const JointParams& joint);
  void finalize();

  MasConfig config_;
  RewardOracle oracle_;
  RandomStream noise_;
  std::vector<AgentState> agents_;
  RunResult result_;
};

RunResult run_mas(const MasConfig& config, const RewardOracle& oracle, const JointParams& a0);

}  // namespace mabo
