#include "mabo/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mabo/csv.hpp"
#include "mabo/error.hpp"
#include "mabo/platooning.hpp"

namespace mabo {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kMaxSampleGridPoints = 1e7;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
}

std::string hex64(std::uint64_t value) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << value;
  return s.str();
}

double lengthscale_scale(const RunConfig& config) {
  const auto& domain = config.at("domain");
  if (!domain.value("normalized_lengthscales", false)) return 1.0;
  return domain["upper"].get<double>() - domain["lower"].get<double>();
}

JointParams reshape_params(const nlohmann::json& flat, std::size_t agents, std::size_t n) {
  JointParams a(static_cast<Eigen::Index>(agents), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = flat[i * n + k].get<double>();
    }
  }
  return a;
}

std::vector<std::string> param_columns(const std::string& prefix, std::size_t agents, std::size_t n) {
  std::vector<std::string> cols;
  for (std::size_t i = 1; i <= agents; ++i) {
    for (std::size_t k = 1; k <= n; ++k) {
      cols.push_back(prefix + std::to_string(i) + (n > 1 ? "_" + std::to_string(k) : std::string()));
    }
  }
  return cols;
}

ordered_json matrix_json(const JointParams& a) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index k = 0; k < a.cols(); ++k) row.push_back(a(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t count_beyond_noise(const RunResult& r, double noise_std) {
  const double floor = r.threshold - 3.0 * noise_std;
  return static_cast<std::size_t>(
      std::count_if(r.rewards.begin(), r.rewards.end(), [floor](double y) { return y < floor; }));
}

void write_rewards_csv(const fs::path& path, const RunResult& r) {
  const std::size_t agents = r.joint_params.empty() ? 0 : static_cast<std::size_t>(r.joint_params[0].rows());
  const std::size_t n = r.joint_params.empty() ? 0 : static_cast<std::size_t>(r.joint_params[0].cols());
  std::vector<std::string> header{"t", "reward", "violation"};
  for (auto& c : param_columns("a_", agents, n)) header.push_back(std::move(c));
  auto out = open_output(path);
  CsvWriter csv(out, std::move(header));
  for (std::size_t t = 0; t < r.rewards.size(); ++t) {
    csv.field(t).field(r.rewards[t]).field(r.violations[t] != 0);
    const JointParams& a = r.joint_params[t];
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index k = 0; k < a.cols(); ++k) csv.field(a(i, k));
    }
    csv.end_row();
  }
}

void write_traces_csv(const fs::path& path, const RunResult& r, std::size_t n) {
  std::vector<std::string> header{"t",         "agent",           "expert",          "overridden", "fallback",
                                  "safe_count", "maximizer_count", "expander_count", "grid_size",  "beta"};
  for (std::size_t k = 1; k <= n; ++k) header.push_back("suggested_" + std::to_string(k));
  for (std::size_t k = 1; k <= n; ++k) header.push_back("applied_" + std::to_string(k));
  auto out = open_output(path);
  CsvWriter csv(out, std::move(header));
  for (const auto& tr : r.traces) {
    csv.field(tr.t).field(tr.agent).field(tr.expert).field(tr.overridden).field(tr.fallback);
    csv.field(tr.safe_count).field(tr.maximizer_count).field(tr.expander_count).field(tr.grid_size).field(tr.beta);
    for (Eigen::Index k = 0; k < tr.suggested_own.size(); ++k) csv.field(tr.suggested_own[k]);
    for (Eigen::Index k = 0; k < tr.applied_own.size(); ++k) csv.field(tr.applied_own[k]);
    csv.end_row();
  }
}

void write_manifest(const fs::path& path, const RunConfig& config, ordered_json body, double wall_seconds) {
  ordered_json m;
  m["experiment"] = std::string(to_string(config.experiment()));
  m["seed"] = config.seed();
  if (config.doc().contains("variant")) m["variant"] = config.doc()["variant"];
  m["config_hash"] = hex64(config.hash());
  m["config"] = ordered_json::parse(config.doc().dump());
  for (auto& [key, value] : body.items()) m[key] = value;
  m["wall_time_seconds"] = wall_seconds;
  auto out = open_output(path);
  out << m.dump(2) << '\n';
}

ExperimentSummary summarize_run(const RunConfig& config, RunResult result, double noise_std) {
  ExperimentSummary s;
  s.experiment = config.experiment();
  s.threshold = result.threshold;
  s.initial_reward = result.rewards.empty() ? std::numeric_limits<double>::quiet_NaN() : result.rewards.front();
  s.best_reward = result.rewards.empty() ? std::numeric_limits<double>::quiet_NaN() : result.best_reward;
  s.violations = result.violation_count();
  s.violations_beyond_noise = count_beyond_noise(result, noise_std);
  s.error = result.error;
  s.run = std::move(result);
  return s;
}

ordered_json run_body(const ExperimentSummary& s, double noise_std) {
  const RunResult& r = *s.run;
  ordered_json body;
  body["threshold"] = s.threshold;
  body["noise_std"] = noise_std;
  body["iterations_completed"] = r.rewards.empty() ? 0 : r.rewards.size() - 1;
  body["initial_reward"] = s.initial_reward;
  body["best_reward"] = s.best_reward;
  body["best_index"] = r.best_index;
  body["best_param"] = r.rewards.empty() ? ordered_json(nullptr) : matrix_json(r.best_param);
  body["violation_count"] = s.violations;
  body["violations_beyond_noise"] = s.violations_beyond_noise;
  body["error"] = s.error ? ordered_json(*s.error) : ordered_json(nullptr);
  return body;
}

void write_run_artifacts(const fs::path& dir, const RunConfig& config, const ExperimentSummary& s, double noise_std,
                         ordered_json extra) {
  const RunResult& r = *s.run;
  write_rewards_csv(dir / "rewards.csv", r);
  write_traces_csv(dir / "agent_traces.csv", r, config.at("params_per_agent").get<std::size_t>());
  ordered_json body = run_body(s, noise_std);
  for (auto& [key, value] : extra.items()) body[key] = value;
  write_manifest(dir / "manifest.json", config, std::move(body), s.wall_seconds);
}

double median_of(std::vector<double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  const std::size_t m = x.size() / 2;
  return x.size() % 2 == 1 ? x[m] : 0.5 * (x[m - 1] + x[m]);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentSummary run_platooning(const RunConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const MasConfig mas = mas_config(config);
  const PlatoonConfig platoon = resolve_vehicles(platoon_config(config));
  const JointParams a0 = reshape_params(config.at("initial_params"), mas.graph.num_agents(), 1);
  ExperimentSummary s = summarize_run(config, run_mas(mas, make_platooning_oracle(platoon), a0), mas.noise_std);

  ordered_json extra;
  ordered_json vehicles = ordered_json::array();
  for (const auto& v : platoon.vehicles) {
    vehicles.push_back({{"wheel_radius", v.wheel_radius},
                        {"rolling_coeff", v.rolling_coeff},
                        {"frontal_area", v.frontal_area},
                        {"drag_coeff", v.drag_coeff},
                        {"mass", v.mass}});
  }
  extra["vehicles"] = std::move(vehicles);
  if (!s.run->rewards.empty()) {
    const JointParams& best = s.run->best_param;
    const std::vector<double> gains(best.data(), best.data() + best.size());
    const EpisodeTrace trace = simulate_episode(gains, platoon);
    extra["best_episode_min_distance"] = trace.min_distance;
    extra["best_episode_crashed"] = trace.crashed;
    auto out = open_output(out_dir / "best_episode.csv");
    write_episode_csv(out, trace);
  }
  s.wall_seconds = seconds_since(start);
  write_run_artifacts(out_dir, config, s, mas.noise_std, std::move(extra));
  return s;
}

ExperimentSummary run_sample_rkhs(const RunConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const KernelSpec kernel = kernel_from_json(config.at("kernel_spec"));
  const auto dims = config.at("dims").get<std::size_t>();
  const auto res = config.at("grid_resolution").get<std::size_t>();
  const double lo = config.at("domain.lower").get<double>();
  const double hi = config.at("domain.upper").get<double>();
  const double time = config.at("time").get<double>();
  if (std::pow(static_cast<double>(res), static_cast<double>(dims)) > kMaxSampleGridPoints) {
    throw ConfigError("grid_resolution: grid_resolution^dims exceeds 1e7 points");
  }
  DomainBox box = DomainBox::spatial(dims, lo, hi);
  box.time_lower = box.time_upper = time;
  RandomStream rng = RandomStream::named(config.seed(), "reward_function");
  const PreRkhsFunction f = sample_pre_rkhs(kernel, config.at("centers").get<std::size_t>(),
                                            config.at("norm").get<double>(), box, rng,
                                            {config.at("coefficient_lower").get<double>(),
                                             config.at("coefficient_upper").get<double>()});
  const PointMatrix grid = make_lattice(dims, res, lo, hi);
  const Eigen::VectorXd values = f.evaluate(grid, time);
  const double q = config.at("quantile").get<double>();
  const double threshold = quantile_lower(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), q);

  std::vector<std::string> header;
  for (std::size_t d = 1; d <= dims; ++d) header.push_back("x_" + std::to_string(d));
  header.push_back("value");
  {
    auto out = open_output(out_dir / "samples.csv");
    CsvWriter csv(out, header);
    for (Eigen::Index r = 0; r < grid.rows(); ++r) {
      for (Eigen::Index d = 0; d < grid.cols(); ++d) csv.field(grid(r, d));
      csv.field(values[r]).end_row();
    }
  }
  header.back() = "time";
  header.push_back("coefficient");
  {
    auto out = open_output(out_dir / "centers.csv");
    CsvWriter csv(out, header);
    for (std::size_t j = 0; j < f.centers().size(); ++j) {
      for (Eigen::Index d = 0; d < f.centers()[j].spatial.size(); ++d) csv.field(f.centers()[j].spatial[d]);
      csv.field(f.centers()[j].time).field(f.coefficients()[static_cast<Eigen::Index>(j)]).end_row();
    }
  }
  ExperimentSummary s;
  s.experiment = config.experiment();
  s.threshold = threshold;
  s.wall_seconds = seconds_since(start);
  ordered_json body;
  body["rkhs_norm"] = f.rkhs_norm();
  body["squared_rkhs_norm"] = f.squared_rkhs_norm();
  body["threshold"] = threshold;
  body["grid_points"] = grid.rows();
  body["min_value"] = values.minCoeff();
  body["max_value"] = values.maxCoeff();
  write_manifest(out_dir / "manifest.json", config, std::move(body), s.wall_seconds);
  return s;
}

ExperimentSummary run_validate_kernel(const RunConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RandomStream rng = RandomStream::named(config.seed(), "kernel_validation");
  const auto trials = config.at("trials").get<std::size_t>();
  const auto max_size = config.at("max_size").get<std::size_t>();
  const auto max_dims = config.at("max_dims").get<std::size_t>();
  const int horizon = config.at("horizon").get<int>();
  const double tol = config.at("tolerance").get<double>();
  const bool random_hyper = config.at("random_hyperparameters").get<bool>();
  auto configured = [&](const char* key) {
    const auto& k = config.at(std::string("kernel.") + key);
    const double sigma = k["sigma_f"].get<double>();
    return BaseKernelParams{k["lengthscale"].get<double>(), sigma * sigma};
  };
  auto draw = [&](const char* key, double l_lo, double l_hi) {
    if (!random_hyper) return configured(key);
    const double l = std::exp(rng.uniform(std::log(l_lo), std::log(l_hi)));
    const double sigma = rng.uniform(0.1, 3.0);
    return BaseKernelParams{l, sigma * sigma};
  };
  static constexpr const char* kFamilies[] = {"temporal", "spatial", "spatio_temporal"};

  auto out = open_output(out_dir / "kernel_validation.csv");
  CsvWriter csv(out, {"trial", "family", "size", "dims", "min_eigenvalue", "max_eigenvalue", "pass"});
  ExperimentSummary s;
  s.experiment = config.experiment();
  double worst_ratio = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t family = trial % 3;
    const std::size_t size = 1 + static_cast<std::size_t>(rng.next_u64() % max_size);
    const std::size_t dims = 1 + static_cast<std::size_t>(rng.next_u64() % max_dims);
    const BaseKernelParams spatial = draw("spatial", 0.05, 2.0);
    const BaseKernelParams rbf = draw("rbf", 0.5, 50.0);
    const BaseKernelParams ma12 = draw("matern12", 0.5, 50.0);
    KernelSpec kernel = family == 0   ? temporal_kernel(rbf, ma12, horizon)
                        : family == 1 ? KernelSpec::matern52(spatial)
                                      : spatio_temporal_kernel(spatial, rbf, ma12, horizon);
    std::vector<SpatioTemporalInput> inputs;
    for (std::size_t i = 0; i < size; ++i) {
      if (i > 0 && rng.uniform01() < 0.2) {
        inputs.push_back(inputs[static_cast<std::size_t>(rng.next_u64() % i)]);
        continue;
      }
      SpatioTemporalInput x;
      x.spatial.resize(static_cast<Eigen::Index>(dims));
      for (std::size_t d = 0; d < dims; ++d) x.spatial[static_cast<Eigen::Index>(d)] = rng.uniform01();
      x.time = rng.uniform(0.0, static_cast<double>(horizon));
      inputs.push_back(std::move(x));
    }
    const SpectrumSummary spec = spectrum_summary(gram(kernel, inputs));
    const bool pass = spec.min_eigenvalue >= -tol * spec.max_eigenvalue;
    if (!pass) ++s.failures;
    if (spec.max_eigenvalue > 0.0) worst_ratio = std::min(worst_ratio, spec.min_eigenvalue / spec.max_eigenvalue);
    csv.field(trial).field(std::string_view(kFamilies[family])).field(size).field(dims);
    csv.field(spec.min_eigenvalue).field(spec.max_eigenvalue).field(pass).end_row();
  }
  out.close();
  s.wall_seconds = seconds_since(start);
  ordered_json body;
  body["trials"] = trials;
  body["failures"] = s.failures;
  body["worst_min_over_max"] = worst_ratio;
  write_manifest(out_dir / "manifest.json", config, std::move(body), s.wall_seconds);
  return s;
}

}  // namespace

RewardOracle ToyProblem::oracle() const {
  const PreRkhsFunction f = reward;
  return [f](const JointParams& a) {
    Eigen::VectorXd x(a.size());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index k = 0; k < a.cols(); ++k) x[i * a.cols() + k] = a(i, k);
    }
    return f(InputView{std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), 1.0});
  };
}

ToyProblem make_toy_problem(const RunConfig& config) {
  config.validate();
  if (!config.doc().contains("reward")) throw ConfigError("reward: experiment has no synthetic reward");
  const auto agents = config.at("agents").get<std::size_t>();
  const auto n = config.at("params_per_agent").get<std::size_t>();
  const std::size_t dims = agents * n;
  const double lo = config.at("domain.lower").get<double>();
  const double hi = config.at("domain.upper").get<double>();
  const auto& rc = config.at("reward");
  const double sigma = rc["sigma_f"].get<double>();
  const KernelSpec kernel =
      KernelSpec::matern32({rc["lengthscale"].get<double>() * lengthscale_scale(config), sigma * sigma});

  RandomStream rng = RandomStream::named(config.seed(), "reward_function");
  PreRkhsFunction f = sample_pre_rkhs(kernel, rc["centers"].get<std::size_t>(), rc["norm"].get<double>(),
                                      DomainBox::spatial(dims, lo, hi), rng,
                                      {rc["coefficient_lower"].get<double>(), rc["coefficient_upper"].get<double>()});
  PointMatrix grid = make_lattice(dims, rc["eval_resolution"].get<std::size_t>(), lo, hi);
  Eigen::VectorXd values = f.evaluate(grid);
  const std::span<const double> vs(values.data(), static_cast<std::size_t>(values.size()));

  const auto& h = config.at("threshold");
  const double threshold = h.is_null() ? quantile_lower(vs, config.at("quantile").get<double>()) : h.get<double>();

  JointParams a0;
  if (!config.at("initial_params").is_null()) {
    a0 = reshape_params(config.at("initial_params"), agents, n);
  } else {
    std::vector<Eigen::Index> order(vs.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
    const double q = rc["a0_quantile"].get<double>();
    const auto pick = order[static_cast<std::size_t>(std::floor(q * static_cast<double>(order.size() - 1)))];
    a0.resize(static_cast<Eigen::Index>(agents), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < agents; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        a0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = grid(pick, static_cast<Eigen::Index>(i * n + k));
      }
    }
  }
  ToyProblem problem{std::move(f), std::move(grid), std::move(values), threshold, a0, 0.0};
  problem.a0_value = problem.oracle()(a0);
  return problem;
}

ExperimentSummary run_toy(const RunConfig& config, const ToyProblem& problem, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  ensure_dir(out_dir);
  MasConfig mas = mas_config(config);
  mas.safety_threshold = problem.threshold;
  ExperimentSummary s = summarize_run(config, run_mas(mas, problem.oracle(), problem.a0), mas.noise_std);
  s.wall_seconds = seconds_since(start);
  ordered_json extra;
  extra["initial_true_reward"] = problem.a0_value;
  extra["reward_grid_max"] = problem.eval_values.maxCoeff();
  write_run_artifacts(out_dir, config, s, mas.noise_std, std::move(extra));
  return s;
}

ExperimentSummary run_experiment(const RunConfig& config, const fs::path& out_dir) {
  config.validate();
  ensure_dir(out_dir);
  switch (config.experiment()) {
    case Experiment::Toy4:
    case Experiment::Toy8: {
      const auto start = std::chrono::steady_clock::now();
      const ToyProblem problem = make_toy_problem(config);
      ExperimentSummary s = run_toy(config, problem, out_dir);
      s.wall_seconds = seconds_since(start);
      return s;
    }
    case Experiment::Platooning:
      return run_platooning(config, out_dir);
    case Experiment::SampleRkhs:
      return run_sample_rkhs(config, out_dir);
    case Experiment::ValidateKernel:
      return run_validate_kernel(config, out_dir);
  }
  throw InternalError("unhandled experiment");
}

std::vector<AblationCell> run_ablation_suite(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
                                             const std::vector<Variant>& variants, const fs::path& out_dir) {
  if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
  if (variants.empty()) throw ConfigError("variants: need at least one variant");
  if (config.experiment() != Experiment::Toy4 && config.experiment() != Experiment::Toy8) {
    throw ConfigError("experiment: the ablation suite runs toy experiments only");
  }
  ensure_dir(out_dir);
  std::vector<AblationCell> cells;
  for (std::uint64_t seed : seeds) {
    RunConfig seeded = config;
    seeded.set("seed", seed);
    std::optional<ToyProblem> problem;
    std::optional<std::string> problem_error;
    try {
      problem = make_toy_problem(seeded);
    } catch (const std::exception& e) {
      problem_error = e.what();
    }
    for (Variant v : variants) {
      AblationCell cell;
      cell.variant = v;
      cell.seed = seed;
      try {
        if (problem_error) throw std::runtime_error(*problem_error);
        RunConfig cfg = seeded;
        cfg.set("variant", std::string(to_string(v)));
        const ExperimentSummary s =
            run_toy(cfg, *problem, out_dir / ("seed_" + std::to_string(seed)) / std::string(to_string(v)));
        cell.initial_reward = s.initial_reward;
        cell.best_reward = s.best_reward;
        cell.violations = s.violations;
        cell.violations_beyond_noise = s.violations_beyond_noise;
        cell.error = s.error;
      } catch (const std::exception& e) {
        cell.initial_reward = cell.best_reward = std::numeric_limits<double>::quiet_NaN();
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }

  auto out = open_output(out_dir / "summary.csv");
  CsvWriter csv(out, {"row", "variant", "seed", "initial_reward", "best_reward", "improvement", "violations",
                      "violations_beyond_noise", "error"});
  for (const auto& c : cells) {
    csv.field(std::string_view("run")).field(to_string(c.variant)).field(static_cast<long long>(c.seed));
    csv.field(c.initial_reward).field(c.best_reward).field(c.best_reward - c.initial_reward);
    csv.field(c.violations).field(c.violations_beyond_noise);
    std::string err = c.error.value_or("");
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    csv.field(std::string_view(err)).end_row();
  }
  for (Variant v : variants) {
    std::vector<double> initial;
    std::vector<double> gain;
    std::vector<double> viol;
    std::vector<double> viol_noise;
    for (const auto& c : cells) {
      if (c.variant != v || c.error) continue;
      initial.push_back(c.initial_reward);
      gain.push_back(c.best_reward - c.initial_reward);
      viol.push_back(static_cast<double>(c.violations));
      viol_noise.push_back(static_cast<double>(c.violations_beyond_noise));
    }
    csv.field(std::string_view("median")).field(to_string(v)).field(std::string_view(""));
    csv.field(median_of(initial)).field(median_best_reward(cells, v)).field(median_of(gain));
    csv.field(median_of(viol)).field(median_of(viol_noise)).field(std::string_view("")).end_row();
  }
  return cells;
}

double median_best_reward(const std::vector<AblationCell>& cells, Variant variant) {
  std::vector<double> x;
  for (const auto& c : cells) {
    if (c.variant == variant && !c.error) x.push_back(c.best_reward);
  }
  return median_of(std::move(x));
}

}  // namespace mabo
