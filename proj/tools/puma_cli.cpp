// Command-line front end: load a preset and/or config file, apply
// overrides, run the experiment and write its CSV.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "puma/puma.hpp"

namespace {

int exit_code(puma::ErrorCategory c) {
  switch (c) {
    case puma::ErrorCategory::config:
    case puma::ErrorCategory::domain:
    case puma::ErrorCategory::format: return 2;
    case puma::ErrorCategory::accuracy:
    case puma::ErrorCategory::numeric:
    case puma::ErrorCategory::degenerate: return 3;
    case puma::ErrorCategory::io: return 4;
  }
  return 3;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw puma::IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluid-antenna multiple-access link simulator (PUMA / CUMA / sFAMA)"};
  std::string config_path, preset_name, out_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  long long trials = 0;
  int workers = 0;
  bool list_presets = false, print_config = false;

  app.add_option("--config", config_path, "Configuration file ([channel]/[receiver]/[run] sections)");
  app.add_option("--preset", preset_name, "Start from a named preset");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--trials", trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "CSV output path");
  app.add_option("--set", overrides, "Override section.key=value (repeatable)")->take_all();
  app.add_option("--workers", workers, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("--list-presets", list_presets, "List preset names and exit");
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_presets) {
      for (const auto& [name, _] : puma::preset_documents()) std::cout << name << "\n";
      return 0;
    }
    puma::RunConfig cfg = preset_name.empty() ? puma::RunConfig{} : puma::preset(preset_name);
    if (!config_path.empty()) cfg = puma::parse_config(read_file(config_path), cfg);
    for (const auto& o : overrides) puma::apply_override(cfg, o);
    if (app.count("--seed")) cfg.spec.master_seed = seed;
    if (app.count("--trials")) cfg.spec.trials = trials;
    if (app.count("--out")) cfg.output_path = out_path;
    puma::validate_config(cfg);

    if (print_config) {
      std::cout << puma::serialize_config(cfg);
      return 0;
    }
    const auto result = puma::run_experiment(cfg, workers, &std::cerr);
    if (cfg.output_path.empty()) std::cout << result.csv();
    return 0;
  } catch (const puma::Error& e) {
    std::cerr << "error[" << puma::category_name(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return 3;
  }
}
