#include "mabo/config.hpp"

#include <fstream>
#include <sstream>

#include "mabo/error.hpp"
#include "mabo/rng.hpp"

namespace mabo {

using nlohmann::json;

namespace {

// Subtrees that are replaced wholesale and validated by their own parser.
bool is_opaque(std::string_view path) { return path == "kernel_spec"; }

json base_kernel(double lengthscale, double sigma_f) { return {{"lengthscale", lengthscale}, {"sigma_f", sigma_f}}; }

json mas_defaults() {
  return {
      {"variant", "full_algorithm"},
      {"seed", 0u},
      {"agents", 4u},
      {"params_per_agent", 1u},
      {"graph", "path"},
      {"iterations", 50u},
      {"rkhs_bound", 1.0},
      {"threshold", nullptr},
      {"quantile", 0.2},
      {"noise_std", 1e-3},
      {"delta", 0.01},
      {"beta_override", nullptr},
      {"domain", {{"lower", 0.0}, {"upper", 1.0}, {"normalized_lengthscales", true}}},
      {"kernel",
       {{"spatial", base_kernel(0.3, 1.0)}, {"rbf", base_kernel(20.0, 0.1)}, {"matern12", base_kernel(5.0, 0.1)}}},
      {"grid", {{"low_dim", 30u}, {"dim3", 12u}, {"high_dim", 7u}, {"max_points", 3'000'000u}}},
      {"initial_params", nullptr},
      {"parallel", false},
  };
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    parts.emplace_back(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (parts.back().empty()) throw ConfigError("malformed key path '" + std::string(path) + "'");
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

bool is_number_array(const json& v) {
  if (!v.is_array()) return false;
  for (const auto& x : v) {
    if (!x.is_number()) return false;
  }
  return true;
}

// Keys whose null means "derive it"; their defaults may be numbers.
bool nullable(const std::string& path) {
  return path == "quantile" || path == "threshold" || path == "beta_override" || path == "initial_params";
}

void check_type(const std::string& path, const json& schema, const json& value) {
  if (value.is_null() && nullable(path)) return;
  bool ok = false;
  switch (schema.type()) {
    case json::value_t::null:
      ok = value.is_null() || value.is_number() || is_number_array(value);
      break;
    case json::value_t::number_float:
      ok = value.is_number();
      break;
    case json::value_t::number_unsigned:
    case json::value_t::number_integer:
      ok = value.is_number_unsigned();
      break;
    case json::value_t::boolean:
      ok = value.is_boolean();
      break;
    case json::value_t::string:
      ok = value.is_string();
      break;
    case json::value_t::array:
      ok = is_number_array(value);
      break;
    case json::value_t::object:
      ok = value.is_object();
      break;
    default:
      ok = false;
  }
  if (!ok) throw ConfigError(path + ": expected " + std::string(schema.type_name()) + ", got " + value.dump());
}

double number(const RunConfig& c, std::string_view path) { return c.at(path).get<double>(); }
std::size_t count(const RunConfig& c, std::string_view path) { return c.at(path).get<std::size_t>(); }

void require(bool condition, std::string_view path, std::string_view message) {
  if (!condition) throw ConfigError(std::string(path) + ": " + std::string(message));
}

void require_positive(const RunConfig& c, std::string_view path) {
  require(number(c, path) > 0.0, path, "must be positive");
}

}  // namespace

std::string_view to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::Toy4: return "toy4";
    case Experiment::Toy8: return "toy8";
    case Experiment::Platooning: return "platooning";
    case Experiment::SampleRkhs: return "sample_rkhs";
    case Experiment::ValidateKernel: return "validate_kernel";
  }
  return "?";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::Toy4, Experiment::Toy8, Experiment::Platooning, Experiment::SampleRkhs,
                       Experiment::ValidateKernel}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("experiment: unknown experiment '" + std::string(name) + "'");
}

RunConfig RunConfig::defaults(Experiment experiment) {
  RunConfig c;
  c.experiment_ = experiment;
  switch (experiment) {
    case Experiment::Toy4:
    case Experiment::Toy8: {
      c.doc_ = mas_defaults();
      const bool eight = experiment == Experiment::Toy8;
      c.doc_["agents"] = eight ? 8u : 4u;
      c.doc_["reward"] = {{"lengthscale", eight ? 0.1 : 0.4},
                          {"sigma_f", 1.0},
                          {"centers", 1000u},
                          {"norm", 1.0},
                          {"coefficient_lower", 0.0},
                          {"coefficient_upper", 1.0},
                          {"eval_resolution", eight ? 5u : 15u},
                          {"a0_quantile", 0.5}};
      break;
    }
    case Experiment::Platooning:
      c.doc_ = mas_defaults();
      c.doc_["rkhs_bound"] = 5.0;
      c.doc_["threshold"] = -1.0;
      c.doc_["quantile"] = nullptr;
      c.doc_["noise_std"] = 0.0;
      c.doc_["domain"]["upper"] = 10.0;
      c.doc_["kernel"] = {
          {"spatial", base_kernel(0.2, 1.0)}, {"rbf", base_kernel(20.0, 1.0)}, {"matern12", base_kernel(5.0, 1.0)}};
      c.doc_["initial_params"] = {4.0, 5.0, 4.0, 5.0};
      c.doc_["platoon"] = {{"d_ref", 100.0},
                           {"leader_speed", 30.0},
                           {"episode_length", 120.0},
                           {"dt", 0.1},
                           {"initial_positions", {0.0, 300.0, 520.0, 700.0, 1000.0}},
                           {"follower_initial_speed", 30.0},
                           {"traction", "wheel_torque"}};
      break;
    case Experiment::SampleRkhs:
      c.doc_ = {{"seed", 0u},
                {"dims", 1u},
                {"centers", 1000u},
                {"norm", 1.0},
                {"coefficient_lower", -1.0},
                {"coefficient_upper", 1.0},
                {"quantile", 0.2},
                {"grid_resolution", 200u},
                {"time", 1.0},
                {"domain", {{"lower", 0.0}, {"upper", 1.0}}},
                {"kernel_spec", json(KernelSpec::matern32({0.4, 1.0}))}};
      break;
    case Experiment::ValidateKernel:
      c.doc_ = {{"seed", 0u},
                {"trials", 200u},
                {"max_size", 40u},
                {"max_dims", 4u},
                {"horizon", 51u},
                {"tolerance", 1e-8},
                {"random_hyperparameters", true},
                {"kernel",
                 {{"spatial", base_kernel(0.3, 1.0)},
                  {"rbf", base_kernel(20.0, 0.1)},
                  {"matern12", base_kernel(5.0, 0.1)}}}};
      break;
  }
  c.doc_["experiment"] = std::string(to_string(experiment));
  return c;
}

const json& RunConfig::at(std::string_view key_path) const {
  const json* node = &doc_;
  for (const auto& part : split_path(key_path)) {
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError(std::string(key_path) + ": unknown key");
    }
    node = &(*node)[part];
  }
  return *node;
}

void RunConfig::set(std::string_view key_path, const json& value) {
  const auto parts = split_path(key_path);
  if (parts.front() == "experiment") {
    if (value != doc_["experiment"]) throw ConfigError("experiment: cannot be changed by an override");
    return;
  }
  const RunConfig schema_config = defaults(experiment_);
  const json* schema = &schema_config.doc_;
  json* node = &doc_;
  std::string path;
  for (const auto& part : parts) {
    path += (path.empty() ? "" : ".") + part;
    if (!schema->is_object() || !schema->contains(part)) throw ConfigError(path + ": unknown key");
    schema = &(*schema)[part];
    node = &(*node)[part];
    if (is_opaque(path)) break;
  }
  if (path != key_path) throw ConfigError(std::string(key_path) + ": unknown key");
  check_type(path, *schema, value);
  if (schema->is_object() && !is_opaque(path)) {
    for (const auto& [key, child] : value.items()) set(path + "." + key, child);
    return;
  }
  *node = value;
}

void RunConfig::set_from_text(std::string_view key_path, std::string_view text) {
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = std::string(text);
  set(key_path, value);
}

void RunConfig::merge(const json& overrides) {
  if (!overrides.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : overrides.items()) set(key, value);
}

std::uint64_t RunConfig::seed() const { return at("seed").get<std::uint64_t>(); }

Variant RunConfig::variant() const {
  if (!doc_.contains("variant")) return Variant::FullAlgorithm;
  try {
    return parse_variant(doc_["variant"].get<std::string>());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("variant: ") + e.what());
  }
}

std::uint64_t RunConfig::hash() const { return fnv1a64(doc_.dump()); }

void RunConfig::validate() const {
  if (experiment_ == Experiment::SampleRkhs) {
    require(count(*this, "dims") >= 1, "dims", "must be at least 1");
    require(count(*this, "centers") >= 1, "centers", "must be at least 1");
    require(count(*this, "grid_resolution") >= 1, "grid_resolution", "must be at least 1");
    require_positive(*this, "norm");
    require(number(*this, "coefficient_lower") < number(*this, "coefficient_upper"), "coefficient_lower",
            "must be below coefficient_upper");
    const double q = number(*this, "quantile");
    require(q > 0.0 && q < 1.0, "quantile", "must lie in (0, 1)");
    require(number(*this, "domain.lower") < number(*this, "domain.upper"), "domain", "lower must be below upper");
    kernel_from_json(at("kernel_spec"));
    return;
  }
  if (experiment_ == Experiment::ValidateKernel) {
    require(count(*this, "trials") >= 1, "trials", "must be at least 1");
    require(count(*this, "max_size") >= 1, "max_size", "must be at least 1");
    require(count(*this, "max_dims") >= 1, "max_dims", "must be at least 1");
    require(count(*this, "horizon") >= 2, "horizon", "must be at least 2");
    require(number(*this, "tolerance") >= 0.0, "tolerance", "must be non-negative");
    for (const char* k : {"kernel.spatial", "kernel.rbf", "kernel.matern12"}) {
      require_positive(*this, std::string(k) + ".lengthscale");
      require_positive(*this, std::string(k) + ".sigma_f");
    }
    return;
  }

  variant();
  build_graph(*this);
  require(count(*this, "params_per_agent") >= 1, "params_per_agent", "must be at least 1");
  require(number(*this, "rkhs_bound") >= 0.0, "rkhs_bound", "must be non-negative");
  require(number(*this, "noise_std") >= 0.0, "noise_std", "must be non-negative");
  const double delta = number(*this, "delta");
  require(delta > 0.0 && delta < 1.0, "delta", "must lie in (0, 1)");
  if (!at("beta_override").is_null()) {
    require(at("beta_override").is_number() && number(*this, "beta_override") >= 0.0, "beta_override",
            "must be a non-negative number or null");
  }
  const json& q = at("quantile");
  const json& h = at("threshold");
  require(q.is_null() || q.is_number(), "quantile", "must be a number or null");
  require(h.is_null() || h.is_number(), "threshold", "must be a number or null");
  if (q.is_number()) require(q.get<double>() > 0.0 && q.get<double>() < 1.0, "quantile", "must lie in (0, 1)");
  require(!(q.is_null() && h.is_null()), "threshold", "set either threshold or quantile");
  const double lo = number(*this, "domain.lower");
  const double hi = number(*this, "domain.upper");
  require(lo < hi, "domain", "lower must be below upper");
  for (const char* k : {"kernel.spatial", "kernel.rbf", "kernel.matern12"}) {
    require_positive(*this, std::string(k) + ".lengthscale");
    require_positive(*this, std::string(k) + ".sigma_f");
  }
  for (const char* k : {"grid.low_dim", "grid.dim3", "grid.high_dim", "grid.max_points"}) {
    require(count(*this, k) >= 1, k, "must be at least 1");
  }
  const json& a0 = at("initial_params");
  if (!a0.is_null()) {
    require(is_number_array(a0), "initial_params", "must be an array of numbers or null");
    require(a0.size() == count(*this, "agents") * count(*this, "params_per_agent"), "initial_params",
            "needs agents * params_per_agent entries");
    for (const auto& v : a0) require(v.get<double>() >= lo && v.get<double>() <= hi, "initial_params", "outside the domain");
  }
  if (doc_.contains("reward")) {
    require_positive(*this, "reward.lengthscale");
    require_positive(*this, "reward.sigma_f");
    require_positive(*this, "reward.norm");
    require(number(*this, "reward.coefficient_lower") < number(*this, "reward.coefficient_upper"),
            "reward.coefficient_lower", "must be below reward.coefficient_upper");
    require(count(*this, "reward.centers") >= 1, "reward.centers", "must be at least 1");
    require(count(*this, "reward.eval_resolution") >= 1, "reward.eval_resolution", "must be at least 1");
    const double a0q = number(*this, "reward.a0_quantile");
    require(a0q >= 0.0 && a0q <= 1.0, "reward.a0_quantile", "must lie in [0, 1]");
  }
  if (experiment_ == Experiment::Platooning) {
    require(count(*this, "params_per_agent") == 1, "params_per_agent", "platooning tunes one gain per follower");
    const PlatoonConfig p = platoon_config(*this);
    require(p.num_followers() == count(*this, "agents"), "platoon.initial_positions",
            "needs one follower per agent plus the leader");
  }
}

RunConfig load_config_text(std::string_view text, Experiment fallback) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  Experiment experiment = fallback;
  if (doc.contains("experiment")) {
    require(doc["experiment"].is_string(), "experiment", "must be a string");
    experiment = parse_experiment(doc["experiment"].get<std::string>());
  }
  RunConfig config = RunConfig::defaults(experiment);
  config.merge(doc);
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path, Experiment fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_config_text(buffer.str(), fallback);
}

CommGraph build_graph(const RunConfig& config) {
  const std::size_t n = count(config, "agents");
  require(n >= 1, "agents", "must be at least 1");
  const std::string name = config.at("graph").get<std::string>();
  if (name == "path") return CommGraph::path(n);
  if (name == "complete") return CommGraph::complete(n);
  if (name == "empty") return CommGraph::empty(n);
  throw ConfigError("graph: unknown graph '" + name + "' (path, complete, empty)");
}

MasConfig mas_config(const RunConfig& config) {
  config.validate();
  MasConfig m;
  m.graph = build_graph(config);
  m.params_per_agent = count(config, "params_per_agent");
  m.domain_lower = number(config, "domain.lower");
  m.domain_upper = number(config, "domain.upper");
  m.iterations = count(config, "iterations");
  m.rkhs_bound = number(config, "rkhs_bound");
  const json& h = config.at("threshold");
  m.safety_threshold = h.is_null() ? 0.0 : h.get<double>();
  m.noise_std = number(config, "noise_std");
  m.delta = number(config, "delta");
  if (!config.at("beta_override").is_null()) m.beta_override = number(config, "beta_override");
  // Spatial lengthscales are given relative to a unit-width domain.
  const double width = config.at("domain.normalized_lengthscales").get<bool>() ? m.domain_upper - m.domain_lower : 1.0;
  auto params = [&](std::string_view key, double scale) {
    const std::string k(key);
    const double sigma = number(config, k + ".sigma_f");
    return BaseKernelParams{number(config, k + ".lengthscale") * scale, sigma * sigma};
  };
  m.spatial = params("kernel.spatial", width);
  m.temporal = TemporalKernelParams{params("kernel.rbf", 1.0), params("kernel.matern12", 1.0)};
  m.resolution.low_dim = count(config, "grid.low_dim");
  m.resolution.dim3 = count(config, "grid.dim3");
  m.resolution.high_dim = count(config, "grid.high_dim");
  m.resolution.max_points = count(config, "grid.max_points");
  m.noise_seed = RandomStream::named(config.seed(), "observation_noise").next_u64();
  m.parallel_agents = config.at("parallel").get<bool>();
  return ablation_variant(std::move(m), config.variant());
}

PlatoonConfig platoon_config(const RunConfig& config) {
  PlatoonConfig p;
  p.d_ref = number(config, "platoon.d_ref");
  p.leader_speed = number(config, "platoon.leader_speed");
  p.episode_length = number(config, "platoon.episode_length");
  p.dt = number(config, "platoon.dt");
  p.initial_positions = config.at("platoon.initial_positions").get<std::vector<double>>();
  p.follower_initial_speed = number(config, "platoon.follower_initial_speed");
  const std::string traction = config.at("platoon.traction").get<std::string>();
  if (traction == "wheel_torque") {
    p.traction = TractionInput::WheelTorque;
  } else if (traction == "force") {
    p.traction = TractionInput::Force;
  } else {
    throw ConfigError("platoon.traction: expected wheel_torque or force");
  }
  p.seed = config.seed();
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("platoon: ") + e.what());
  }
  return p;
}

}  // namespace mabo
