#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mabo/config.hpp"
#include "mabo/orchestrator.hpp"
#include "mabo/points.hpp"
#include "mabo/rkhs_sampler.hpp"

namespace mabo {

/// Synthetic reward of a toy run: a pre-RKHS function over the joint
/// parameters, its safety threshold and a safe starting point.
struct ToyProblem {
  PreRkhsFunction reward;
  PointMatrix eval_grid;
  Eigen::VectorXd eval_values;
  double threshold = 0.0;
  JointParams a0;
  double a0_value = 0.0;

  RewardOracle oracle() const;
};

/// Draws the toy reward from the config's "reward_function" stream. Only
/// the seed and the reward, domain and agent keys matter, so all variants of
/// one seed share the same problem.
ToyProblem make_toy_problem(const RunConfig& config);

struct ExperimentSummary {
  Experiment experiment = Experiment::Toy4;
  std::optional<RunResult> run;
  double threshold = 0.0;
  double initial_reward = 0.0;
  double best_reward = 0.0;
  std::size_t violations = 0;
  /// Evaluations strictly below h - 3 sigma.
  std::size_t violations_beyond_noise = 0;
  /// validate_kernel: number of failing Gram matrices.
  std::size_t failures = 0;
  std::optional<std::string> error;
  double wall_seconds = 0.0;

  bool ok() const { return !error && failures == 0; }
};

/// Runs one experiment and writes its artifacts into `out_dir`:
/// rewards.csv, agent_traces.csv, manifest.json, plus best_episode.csv for
/// platooning, samples.csv for sample_rkhs and kernel_validation.csv for
/// validate_kernel.
ExperimentSummary run_experiment(const RunConfig& config, const std::filesystem::path& out_dir);

/// Toy run on a problem that was already drawn.
ExperimentSummary run_toy(const RunConfig& config, const ToyProblem& problem, const std::filesystem::path& out_dir);

struct AblationCell {
  Variant variant = Variant::FullAlgorithm;
  std::uint64_t seed = 0;
  double initial_reward = 0.0;
  double best_reward = 0.0;
  std::size_t violations = 0;
  std::size_t violations_beyond_noise = 0;
  std::optional<std::string> error;
};

/// Every variant for every seed, each in out_dir/seed_<s>/<variant>/, plus
/// out_dir/summary.csv with one row per cell and one median row per variant.
std::vector<AblationCell> run_ablation_suite(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
                                             const std::vector<Variant>& variants,
                                             const std::filesystem::path& out_dir);

/// Median of the best rewards of the successful cells of one variant.
double median_best_reward(const std::vector<AblationCell>& cells, Variant variant);

}  // namespace mabo
