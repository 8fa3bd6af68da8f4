#include "mabo/orchestrator.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <stdexcept>

#include "mabo/error.hpp"

namespace mabo {

namespace {

struct OracleFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void validate(const MasConfig& c) {
  if (c.params_per_agent == 0) throw ConfigError("params_per_agent must be >= 1");
  if (!(c.domain_lower < c.domain_upper)) throw ConfigError("domain lower bound must be below upper bound");
  if (!(c.rkhs_bound >= 0.0)) throw ConfigError("RKHS bound B must be non-negative");
  if (!(c.noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (c.beta_override && !(*c.beta_override >= 0.0)) throw ConfigError("beta_override must be non-negative");
}

KernelSpec agent_kernel(const MasConfig& c) {
  if (!c.temporal) return KernelSpec::matern52(c.spatial);
  const int horizon = static_cast<int>(std::max<std::size_t>(c.iterations + 1, 2));
  return spatio_temporal_kernel(c.spatial, c.temporal->rbf, c.temporal->matern12, horizon);
}

bool same_data(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.targets != b.targets) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.inputs[i].time != b.inputs[i].time || a.inputs[i].spatial != b.inputs[i].spatial) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::FullAlgorithm: return "full_algorithm";
    case Variant::NoLatent: return "no_latent";
    case Variant::NoComm: return "no_comm";
    case Variant::FullComm: return "full_comm";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants{Variant::FullAlgorithm, Variant::NoLatent, Variant::NoComm,
                                             Variant::FullComm};
  return variants;
}

std::size_t ResolutionPolicy::resolution_for(std::size_t dims) const {
  if (dims == 0) throw InputError("spatial dimension must be positive");
  std::size_t res = dims <= 2 ? low_dim : (dims == 3 ? dim3 : high_dim);
  if (res == 0) throw ConfigError("grid resolution must be positive");
  auto total = [dims](std::size_t r) {
    double count = 1.0;
    for (std::size_t d = 0; d < dims; ++d) count *= static_cast<double>(r);
    return count;
  };
  while (res > 1 && total(res) > static_cast<double>(max_points)) --res;
  return res;
}

MasConfig ablation_variant(MasConfig config, Variant variant) {
  config.variant = variant;
  const std::size_t n = config.graph.num_agents();
  switch (variant) {
    case Variant::FullAlgorithm:
      break;
    case Variant::NoLatent:
      config.temporal.reset();
      break;
    case Variant::NoComm:
      config.graph = CommGraph::empty(n);
      break;
    case Variant::FullComm:
      config.graph = CommGraph::complete(n);
      break;
  }
  return config;
}

AgentId expert_index(std::size_t t, std::size_t num_agents) {
  if (t < 1 || num_agents < 1) throw InputError("expert_index needs t >= 1 and N >= 1");
  return (t - 1) % num_agents + 1;
}

AgentState::AgentState(AgentId id, std::vector<AgentId> neighborhood, std::shared_ptr<const ParamGrid> lattice,
                       KernelSpec kernel, std::size_t params_per_agent, double noise_std)
    : id_(id),
      neighborhood_(std::move(neighborhood)),
      params_per_agent_(params_per_agent),
      lattice_(std::move(lattice)),
      kernel_(std::move(kernel)) {
  if (!std::is_sorted(neighborhood_.begin(), neighborhood_.end())) {
    throw InternalError("neighborhood must be ascending");
  }
  auto it = std::find(neighborhood_.begin(), neighborhood_.end(), id_);
  if (it == neighborhood_.end()) throw InternalError("closed neighborhood must contain the agent itself");
  own_slot_ = static_cast<std::size_t>(it - neighborhood_.begin());
  if (lattice_->dims() != neighborhood_.size() * params_per_agent_) {
    throw InternalError("agent lattice dimension does not match its neighborhood");
  }
  dataset_.noise_std = noise_std;
}

Eigen::VectorXd AgentState::member_part(const Eigen::VectorXd& row, AgentId member) const {
  auto it = std::find(neighborhood_.begin(), neighborhood_.end(), member);
  if (it == neighborhood_.end()) throw InputError("agent is not in this neighborhood");
  const auto slot = static_cast<Eigen::Index>(it - neighborhood_.begin());
  const auto n = static_cast<Eigen::Index>(params_per_agent_);
  return row.segment(slot * n, n);
}

Eigen::VectorXd AgentState::own_part(const Eigen::VectorXd& row) const { return member_part(row, id_); }

void AgentState::record(const Eigen::VectorXd& own_applied, const std::vector<Message>& inbox, double time,
                        double reward) {
  const auto n = static_cast<Eigen::Index>(params_per_agent_);
  SpatioTemporalInput input;
  input.spatial.resize(static_cast<Eigen::Index>(neighborhood_.size()) * n);
  input.time = time;
  std::vector<bool> filled(neighborhood_.size(), false);
  auto place = [&](AgentId from, const Eigen::VectorXd& params) {
    auto it = std::find(neighborhood_.begin(), neighborhood_.end(), from);
    if (it == neighborhood_.end()) {
      throw InternalError("agent " + std::to_string(id_) + " received parameters from non-neighbor " +
                          std::to_string(from));
    }
    if (params.size() != n) throw InternalError("message has the wrong parameter dimension");
    const auto slot = static_cast<std::size_t>(it - neighborhood_.begin());
    if (filled[slot]) throw InternalError("duplicate message in one iteration");
    input.spatial.segment(static_cast<Eigen::Index>(slot) * n, n) = params;
    filled[slot] = true;
  };
  place(id_, own_applied);
  for (const auto& m : inbox) place(m.from, m.params);
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw InternalError("agent " + std::to_string(id_) + " is missing a neighbor's parameters");
  }
  dataset_.add(std::move(input), reward);
}

AgentPlan plan_agent(const AgentState& agent, std::size_t t, const MasConfig& config) {
  const Dataset& data = agent.dataset();
  if (data.empty()) throw InternalError("agent planned before initialization");
  const double next_time = static_cast<double>(t + 1);
  const double h = config.safety_threshold;

  const Posterior posterior = fit(data, agent.kernel());

  std::vector<std::size_t> seed_rows;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data.targets[r] >= h) seed_rows.push_back(r);
  }
  if (seed_rows.empty()) seed_rows.push_back(0);  // a0 is safe by assumption
  PointMatrix extras(static_cast<Eigen::Index>(seed_rows.size()), static_cast<Eigen::Index>(agent.lattice().dims()));
  for (std::size_t k = 0; k < seed_rows.size(); ++k) {
    extras.row(static_cast<Eigen::Index>(k)) = data.inputs[seed_rows[k]].spatial.transpose();
  }
  const ParamGrid grid = agent.lattice().with_extra_points(extras);

  AgentPlan plan;
  plan.beta = config.beta_override ? *config.beta_override
                                   : beta(posterior, config.rkhs_bound, config.noise_std, config.delta);
  Prediction prediction;
  SafeBoSets sets = compute_safe_set(grid, posterior, plan.beta, config.rkhs_bound, h, grid.extra_positions(),
                                     next_time, &prediction);
  sets.maximizer = compute_maximizers(sets);
  sets.expander = compute_expanders(sets, GridMetric(grid, agent.kernel(), next_time), config.rkhs_bound, h);
  const Acquisition acq =
      acquire(sets, std::span<const double>(prediction.stddev.data(), static_cast<std::size_t>(prediction.stddev.size())));

  const auto point = grid.point(acq.position);
  plan.suggestion = Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
  plan.own = agent.own_part(plan.suggestion);
  plan.fallback = acq.fallback;
  plan.suggestion_safe = sets.safe[acq.position] != 0;
  plan.safe_count = sets.count_safe();
  plan.maximizer_count = sets.count_maximizers();
  plan.expander_count = sets.count_expanders();
  plan.grid_size = grid.size();
  return plan;
}

std::size_t RunResult::violation_count() const {
  return static_cast<std::size_t>(std::count(violations.begin(), violations.end(), 1));
}

Orchestrator::Orchestrator(MasConfig config, RewardOracle oracle)
    : config_(std::move(config)), oracle_(std::move(oracle)), noise_(config_.noise_seed) {
  validate(config_);
  if (!oracle_) throw ConfigError("reward oracle is required");
  const KernelSpec kernel = agent_kernel(config_);
  std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const ParamGrid>> lattices;
  const std::size_t n_agents = config_.graph.num_agents();
  agents_.reserve(n_agents);
  for (AgentId i = 1; i <= n_agents; ++i) {
    auto hood = config_.graph.closed_neighborhood(i);
    const std::size_t dims = hood.size() * config_.params_per_agent;
    const std::size_t res = config_.resolution.resolution_for(dims);
    auto& lattice = lattices[{dims, res}];
    if (!lattice) {
      lattice = std::make_shared<const ParamGrid>(
          ParamGrid::lattice(dims, res, config_.domain_lower, config_.domain_upper));
    }
    agents_.emplace_back(i, std::move(hood), lattice, kernel, config_.params_per_agent, config_.noise_std);
  }
  result_.threshold = config_.safety_threshold;
}

double Orchestrator::observe(const JointParams& joint) {
  double value = 0.0;
  try {
    value = oracle_(joint);
  } catch (const std::exception& e) {
    throw OracleFailure(e.what());
  }
  if (!std::isfinite(value)) throw OracleFailure("oracle returned a non-finite reward");
  return value + config_.noise_std * noise_.normal();
}

void Orchestrator::initialize(const JointParams& a0) {
  const auto n_agents = static_cast<Eigen::Index>(agents_.size());
  const auto n = static_cast<Eigen::Index>(config_.params_per_agent);
  if (a0.rows() != n_agents || a0.cols() != n) throw InputError("initial parameters must be N x n");
  if ((a0.array() < config_.domain_lower).any() || (a0.array() > config_.domain_upper).any()) {
    throw InputError("initial parameters lie outside the domain");
  }
  const double y0 = observe(a0);
  for (auto& agent : agents_) {
    std::vector<Message> inbox;
    for (AgentId j : config_.graph.neighbors(agent.id())) {
      inbox.push_back({j, a0.row(static_cast<Eigen::Index>(j - 1)).transpose()});
    }
    agent.record(a0.row(static_cast<Eigen::Index>(agent.id() - 1)).transpose(), inbox, 1.0, y0);
  }
  result_.joint_params.assign(1, a0);
  result_.rewards.assign(1, y0);
  result_.violations.assign(1, y0 < config_.safety_threshold);
  finalize();
}

void Orchestrator::step(std::size_t t) {
  const std::size_t n_agents = agents_.size();
  if (result_.rewards.size() != t) throw InternalError("step called out of order");

  // Agents with the same neighborhood and identical data reach identical
  // plans; compute those once.
  std::vector<std::size_t> representative(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    representative[i] = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (representative[j] == j && agents_[j].neighborhood() == agents_[i].neighborhood() &&
          same_data(agents_[j].dataset(), agents_[i].dataset())) {
        representative[i] = j;
        break;
      }
    }
  }

  std::vector<AgentPlan> plans(n_agents);
  if (config_.parallel_agents) {
    std::vector<std::future<AgentPlan>> futures(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) {
      if (representative[i] != i) continue;
      futures[i] = std::async(std::launch::async, [this, i, t] { return plan_agent(agents_[i], t, config_); });
    }
    for (std::size_t i = 0; i < n_agents; ++i) {
      if (representative[i] == i) plans[i] = futures[i].get();
    }
  } else {
    for (std::size_t i = 0; i < n_agents; ++i) {
      if (representative[i] == i) plans[i] = plan_agent(agents_[i], t, config_);
    }
  }
  for (std::size_t i = 0; i < n_agents; ++i) {
    if (representative[i] == i) continue;
    plans[i] = plans[representative[i]];
    plans[i].own = agents_[i].own_part(plans[i].suggestion);
  }

  std::vector<Eigen::VectorXd> applied(n_agents);
  std::vector<std::uint8_t> overridden(n_agents, 0);
  for (std::size_t i = 0; i < n_agents; ++i) applied[i] = plans[i].own;

  const AgentId expert = expert_index(t, n_agents);
  const AgentPlan& expert_plan = plans[expert - 1];
  if (!expert_plan.suggestion_safe) throw InternalError("expert suggestion is outside its safe set");
  for (AgentId i : config_.graph.neighbors(expert)) {
    applied[i - 1] = agents_[expert - 1].member_part(expert_plan.suggestion, i);
    overridden[i - 1] = 1;
  }

  // First-order exchange: each agent sends only its own applied parameters.
  std::vector<std::vector<Message>> inbox(n_agents);
  for (AgentId j = 1; j <= n_agents; ++j) {
    for (AgentId i : config_.graph.neighbors(j)) inbox[i - 1].push_back({j, applied[j - 1]});
  }

  JointParams joint(static_cast<Eigen::Index>(n_agents), static_cast<Eigen::Index>(config_.params_per_agent));
  for (std::size_t i = 0; i < n_agents; ++i) joint.row(static_cast<Eigen::Index>(i)) = applied[i].transpose();
  const double y = observe(joint);

  for (std::size_t i = 0; i < n_agents; ++i) {
    agents_[i].record(applied[i], inbox[i], static_cast<double>(t + 1), y);
    AgentTrace trace;
    trace.t = t;
    trace.agent = i + 1;
    trace.expert = expert;
    trace.suggested_own = plans[i].own;
    trace.applied_own = applied[i];
    trace.overridden = overridden[i] != 0;
    trace.fallback = plans[i].fallback;
    trace.safe_count = plans[i].safe_count;
    trace.maximizer_count = plans[i].maximizer_count;
    trace.expander_count = plans[i].expander_count;
    trace.grid_size = plans[i].grid_size;
    trace.beta = plans[i].beta;
    result_.traces.push_back(std::move(trace));
  }
  result_.joint_params.push_back(joint);
  result_.rewards.push_back(y);
  result_.violations.push_back(y < config_.safety_threshold);
  finalize();
}

void Orchestrator::finalize() {
  const auto best = std::max_element(result_.rewards.begin(), result_.rewards.end());
  result_.best_index = static_cast<std::size_t>(best - result_.rewards.begin());
  result_.best_reward = *best;
  result_.best_param = result_.joint_params[result_.best_index];
}

RunResult Orchestrator::run(const JointParams& a0) {
  try {
    initialize(a0);
    for (std::size_t t = 1; t <= config_.iterations; ++t) step(t);
  } catch (const OracleFailure& e) {
    result_.error = std::string("oracle failure: ") + e.what();
    if (!result_.rewards.empty()) finalize();
  }
  return result_;
}

RunResult run_mas(const MasConfig& config, const RewardOracle& oracle, const JointParams& a0) {
  Orchestrator orchestrator(config, oracle);
  return orchestrator.run(a0);
}

}  // namespace mabo
