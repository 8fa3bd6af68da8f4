// Command-line entry point for the experiments.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mabo/config.hpp"
#include "mabo/csv.hpp"
#include "mabo/error.hpp"
#include "mabo/experiments.hpp"

namespace {

namespace fs = std::filesystem;
using mabo::Experiment;
using mabo::RunConfig;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file; its keys override the defaults")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--set", opts.sets, "Override a config key, e.g. --set kernel.spatial.lengthscale=0.2")
      ->allow_extra_args(false);
  cmd->add_option("--seed", opts.seed, "Master seed");
}

RunConfig build_config(const CommonOptions& opts, Experiment fallback) {
  RunConfig config = opts.config_path.empty() ? RunConfig::defaults(fallback)
                                              : mabo::load_config(opts.config_path, fallback);
  for (const auto& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw mabo::ConfigError("--set expects key=value, got '" + s + "'");
    config.set_from_text(s.substr(0, eq), s.substr(eq + 1));
  }
  if (opts.seed) config.set("seed", *opts.seed);
  if (opts.iterations) config.set("iterations", *opts.iterations);
  return config;
}

void require_family(const RunConfig& config, std::initializer_list<Experiment> allowed, const char* command) {
  for (Experiment e : allowed) {
    if (config.experiment() == e) return;
  }
  throw mabo::ConfigError(std::string(command) + ": config is for experiment '" +
                          std::string(mabo::to_string(config.experiment())) + "'");
}

fs::path out_dir(const CommonOptions& opts, const RunConfig& config) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  return fs::path("runs") / std::string(mabo::to_string(config.experiment()));
}

int report(const mabo::ExperimentSummary& s, const fs::path& dir) {
  std::cout << mabo::to_string(s.experiment);
  if (s.run) {
    std::cout << " initial=" << mabo::format_double(s.initial_reward) << " best=" << mabo::format_double(s.best_reward)
              << " threshold=" << mabo::format_double(s.threshold) << " violations=" << s.violations;
  }
  if (s.experiment == Experiment::ValidateKernel) std::cout << " failures=" << s.failures;
  std::cout << " out=" << dir.string() << '\n';
  if (s.error) {
    std::cerr << "error: " << *s.error << '\n';
    return 1;
  }
  if (s.failures > 0) {
    std::cerr << "error: " << s.failures << " Gram matrices failed the eigenvalue check\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe Bayesian optimization for distributed multi-agent systems"};
  app.require_subcommand(1);

  CommonOptions toy_opts;
  std::optional<int> agents;
  std::string variant;
  auto* toy = app.add_subcommand("run-toy", "Synthetic reward with four or eight agents");
  add_common(toy, toy_opts);
  toy->add_option("--agents", agents, "Number of agents")->check(CLI::IsMember({4, 8}));
  toy->add_option("--variant", variant, "full_algorithm, no_latent, no_comm or full_comm");
  toy->add_option("--iterations", toy_opts.iterations, "Number of iterations T");

  CommonOptions plat_opts;
  std::string plat_variant;
  auto* plat = app.add_subcommand("run-platooning", "Tune the platoon's P gains");
  add_common(plat, plat_opts);
  plat->add_option("--variant", plat_variant, "Ablation variant");
  plat->add_option("--iterations", plat_opts.iterations, "Number of iterations T");

  CommonOptions abl_opts;
  std::size_t num_seeds = 0;
  std::optional<int> abl_agents;
  std::vector<std::string> variant_names;
  auto* abl = app.add_subcommand("run-ablation", "All variants over seeds 1..K");
  add_common(abl, abl_opts);
  abl->add_option("--seeds", num_seeds, "Number of seeds K")->required()->check(CLI::PositiveNumber);
  abl->add_option("--agents", abl_agents, "Number of agents (default 8)")->check(CLI::IsMember({4, 8}));
  abl->add_option("--variants", variant_names, "Subset of variants");
  abl->add_option("--iterations", abl_opts.iterations, "Number of iterations T");

  CommonOptions rkhs_opts;
  std::optional<std::size_t> dims;
  auto* rkhs = app.add_subcommand("sample-rkhs", "Draw a pre-RKHS function and tabulate it on a grid");
  add_common(rkhs, rkhs_opts);
  rkhs->add_option("--dims", dims, "Spatial dimension");

  CommonOptions kern_opts;
  std::optional<std::size_t> trials;
  auto* kern = app.add_subcommand("validate-kernel", "Eigenvalue check of random Gram matrices");
  add_common(kern, kern_opts);
  kern->add_option("--trials", trials, "Number of Gram matrices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*toy) {
      const Experiment fallback = agents.value_or(4) == 8 ? Experiment::Toy8 : Experiment::Toy4;
      RunConfig config = build_config(toy_opts, fallback);
      require_family(config, {Experiment::Toy4, Experiment::Toy8}, "run-toy");
      if (agents && config.experiment() != fallback) {
        throw mabo::ConfigError("run-toy: --agents disagrees with the config's experiment");
      }
      if (!variant.empty()) config.set("variant", variant);
      config.validate();
      const fs::path dir = out_dir(toy_opts, config);
      return report(mabo::run_experiment(config, dir), dir);
    }
    if (*plat) {
      RunConfig config = build_config(plat_opts, Experiment::Platooning);
      require_family(config, {Experiment::Platooning}, "run-platooning");
      if (!plat_variant.empty()) config.set("variant", plat_variant);
      config.validate();
      const fs::path dir = out_dir(plat_opts, config);
      return report(mabo::run_experiment(config, dir), dir);
    }
    if (*abl) {
      const Experiment fallback = abl_agents.value_or(8) == 8 ? Experiment::Toy8 : Experiment::Toy4;
      RunConfig config = build_config(abl_opts, fallback);
      require_family(config, {Experiment::Toy4, Experiment::Toy8}, "run-ablation");
      config.validate();
      std::vector<mabo::Variant> variants;
      for (const auto& name : variant_names) variants.push_back(mabo::parse_variant(name));
      if (variants.empty()) variants = mabo::all_variants();
      std::vector<std::uint64_t> seeds;
      for (std::size_t k = 1; k <= num_seeds; ++k) seeds.push_back(k);
      const fs::path dir = abl_opts.out_dir.empty() ? fs::path("runs") / "ablation" : fs::path(abl_opts.out_dir);
      const auto cells = mabo::run_ablation_suite(config, seeds, variants, dir);
      std::size_t failed = 0;
      for (mabo::Variant v : variants) {
        std::cout << mabo::to_string(v) << " median_best=" << mabo::format_double(mabo::median_best_reward(cells, v))
                  << '\n';
      }
      for (const auto& c : cells) failed += c.error ? 1 : 0;
      std::cout << "summary=" << (dir / "summary.csv").string() << '\n';
      if (failed > 0) {
        std::cerr << "error: " << failed << " ablation cells failed; see summary.csv\n";
        return 1;
      }
      return 0;
    }
    if (*rkhs) {
      RunConfig config = build_config(rkhs_opts, Experiment::SampleRkhs);
      require_family(config, {Experiment::SampleRkhs}, "sample-rkhs");
      if (dims) config.set("dims", *dims);
      config.validate();
      const fs::path dir = out_dir(rkhs_opts, config);
      return report(mabo::run_experiment(config, dir), dir);
    }
    if (*kern) {
      RunConfig config = build_config(kern_opts, Experiment::ValidateKernel);
      require_family(config, {Experiment::ValidateKernel}, "validate-kernel");
      if (trials) config.set("trials", *trials);
      config.validate();
      const fs::path dir = out_dir(kern_opts, config);
      return report(mabo::run_experiment(config, dir), dir);
    }
  } catch (const mabo::ConfigError& e) {
    std::cerr << "error: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
