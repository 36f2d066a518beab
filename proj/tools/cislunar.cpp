// Command-line entry point: solve, propagate or validate one scenario file.

#include "cislunar/cli_scenarios.hpp"
#include "cislunar/error.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Minimum-time low-thrust transfers between the lunar Gateway and LLO/LEO"};
  std::string config_path;
  std::string mode = "solve";
  std::string out;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "solve, propagate or validate")
      ->check(CLI::IsMember({"solve", "propagate", "validate"}));
  auto* seed_opt = app.add_option("--seed", seed, "DE random seed (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config)");
  CLI11_PARSE(app, argc, argv);

  try {
    const cislunar::ScenarioConfig cfg = cislunar::load_config(config_path);
    cislunar::RunOptions opt;
    opt.mode = cislunar::mode_from_string(mode);
    if (*seed_opt) opt.seed = seed;
    if (!out.empty()) opt.output_dir = out;
    return cislunar::run(cfg, opt, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
