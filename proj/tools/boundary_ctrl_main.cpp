#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral simulator and boundary control synthesis on an interval"};
  app.set_version_flag("--version", BOUNDARY_CTRL_VERSION);
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string envelope;
  app.add_option("command", command, "spectrum | evolve | check | synthesize | certify")
      ->required()
      ->check(CLI::IsMember({"spectrum", "evolve", "check", "synthesize", "certify"}));
  app.add_option("--config", config_path, "experiment configuration (key = value, or .json)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--envelope", envelope, "control CSV (window,u) for evolve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bctrl::runner::kExitConfig;
  }

  try {
    const auto config = bctrl::runner::load_config(config_path);
    bctrl::runner::RunOptions options;
    options.out_dir = out_dir;
    options.seed = seed;
    if (!envelope.empty()) options.envelope = envelope;
    const auto result = bctrl::runner::run_command(command, config, options);
    if (!result.message.empty()) std::cerr << "boundary-ctrl: " << result.message << "\n";
    for (const auto& f : result.files) std::cout << f.string() << "\n";
    return result.exit_code;
  } catch (const bctrl::ConfigError& e) {
    std::cerr << "boundary-ctrl: config error: " << e.what() << "\n";
    return bctrl::runner::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "boundary-ctrl: " << e.what() << "\n";
    return 1;
  }
}
