#include <iostream>

#include "CLI11.hpp"

#include "masterheat/cli/run.hpp"

int main(int argc, char** argv) {
  using namespace masterheat::cli;
  CLI::App app{"Master heat operator toolkit: operator evaluation, mild solutions and verification runs"};
  std::string config_path, preset, out_dir;
  long long seed = -1;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--preset", preset, "Shipped scenario preset (see presets/)");
  app.add_option("--seed", seed, "Seed overriding the configuration")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "Output directory overriding the configuration");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(exit_config_error);
  }
  if (config_path.empty() == preset.empty()) {
    std::cerr << "exactly one of --config or --preset is required\n";
    return exit_config_error;
  }
  RunConfig config;
  try {
    config = load_config(config_path.empty() ? preset_path(preset) : std::filesystem::path(config_path));
  } catch (const masterheat::Error& e) {
    std::cerr << e.what() << '\n';
    return exit_config_error;
  }
  if (seed >= 0) {
    config.seed = static_cast<std::uint64_t>(seed);
    config.resolved["seed"] = config.seed;
  }
  if (!out_dir.empty()) {
    config.output_dir = out_dir;
    config.resolved["output_dir"] = out_dir;
  }
  try {
    return run(config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "failed to write outputs: " << e.what() << '\n';
    return exit_numerical_fail;
  }
}
