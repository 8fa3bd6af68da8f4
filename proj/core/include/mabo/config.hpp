#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mabo/kernels.hpp"
#include "mabo/orchestrator.hpp"
#include "mabo/platooning.hpp"

namespace mabo {

enum class Experiment { Toy4, Toy8, Platooning, SampleRkhs, ValidateKernel };

std::string_view to_string(Experiment experiment);
Experiment parse_experiment(std::string_view name);

/// Validated experiment configuration. The document always has exactly the
/// keys of the experiment's defaults; values may differ.
class RunConfig {
 public:
  static RunConfig defaults(Experiment experiment);

  Experiment experiment() const { return experiment_; }
  const nlohmann::json& doc() const { return doc_; }

  /// Replaces the value at a dotted key path ("kernel.spatial.lengthscale").
  /// Unknown keys and type mismatches throw ConfigError naming the path.
  void set(std::string_view key_path, const nlohmann::json& value);
  /// Parses `text` as JSON, falling back to a plain string.
  void set_from_text(std::string_view key_path, std::string_view text);
  /// Applies every key of `overrides` (a nested object) on top of this config.
  void merge(const nlohmann::json& overrides);

  const nlohmann::json& at(std::string_view key_path) const;
  std::uint64_t seed() const;
  Variant variant() const;

  /// FNV-1a of the canonical JSON dump.
  std::uint64_t hash() const;

  /// Cross-key checks; throws ConfigError naming the offending key.
  void validate() const;

 private:

  Experiment experiment_ = Experiment::Toy4;
  nlohmann::json doc_;
};

/// Defaults for the experiment named in the file (or `fallback` when the
/// file has no "experiment" key), with the file's keys applied on top.
RunConfig load_config(const std::filesystem::path& path, Experiment fallback);
RunConfig load_config_text(std::string_view text, Experiment fallback);

/// Communication graph named by the "graph" key (path, complete, empty).
CommGraph build_graph(const RunConfig& config);
/// Multi-agent settings. The safety threshold is left at 0 when the config
/// asks for a quantile; the experiment runner fills it in.
MasConfig mas_config(const RunConfig& config);
PlatoonConfig platoon_config(const RunConfig& config);

}  // namespace mabo
