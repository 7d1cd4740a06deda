// stripefree denoise|simulate|bounds|sweep --config PATH [--seed N] [--out DIR]
//
// Exit codes: 0 success, 2 configuration or file error, 3 numerical failure
// (including a solve that stopped at max_iterations; outputs are still written).

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "stripefree/stripefree.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int run(const std::string& command, stripefree::RunConfig cfg) {
  using namespace stripefree;
  if (!cfg.command.empty() && cfg.command != command)
    throw ConfigError("config file is for '" + cfg.command + "' but '" + command + "' was requested");
  cfg.command = command;

  bool converged = true;
  if (command == "denoise") {
    const DenoiseResult r = cmd_denoise(cfg);
    converged = r.converged;
    std::cout << "iterations " << r.iterations << ", gap " << r.gap << ", hash " << hex64(r.hash) << "\n";
    if (r.snr_output) std::cout << "snr " << *r.snr_input << " dB -> " << *r.snr_output << " dB\n";
  } else if (command == "simulate") {
    const SimulateResult r = cmd_simulate(cfg);
    std::cout << "noise fraction " << r.noise_fraction << ", hash " << hex64(r.hash) << "\n";
  } else if (command == "bounds") {
    const BoundsResult r = cmd_bounds(cfg);
    std::cout << r.cells.size() << " table cells, " << r.filters.size() << " filters\n";
  } else {
    const SweepResult r = cmd_sweep(cfg);
    converged = r.all_converged;
    std::cout << r.rows.size() << " sweep points over [" << r.alpha_min << ", " << r.alpha_max << "]\n";
    if (r.best_alpha) std::cout << "best alpha " << *r.best_alpha << ", snr " << *r.best_snr << " dB\n";
  }
  std::cout << "wrote results to " << cfg.output_dir << "\n";
  if (!converged) {
    std::cerr << "warning: solver stopped before reaching the gap tolerance\n";
    return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational stripe and structured-noise removal"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string chosen;

  const std::pair<const char*, const char*> commands[] = {
      {"denoise", "Remove structured noise from an image"},
      {"simulate", "Synthesize a noisy image from a clean one or a phantom"},
      {"bounds", "Gaussianity table and per-filter operator-norm bounds"},
      {"sweep", "Noise norm against alpha, with an optional SNR search"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the seed");
    sub->add_option("--out", out, "Override the output directory");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    stripefree::RunConfig cfg = stripefree::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out) cfg.output_dir = *out;
    return run(chosen, cfg);
  } catch (const stripefree::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stripefree::IoError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stripefree::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stripefree::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
