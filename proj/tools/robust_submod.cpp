// robust-submod: experiment runner and property battery.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "robsub/errors.hpp"
#include "robsub/experiment.hpp"
#include "robsub/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int run_verify(bool quick) {
  robsub::verify::BatteryOptions options;
  options.quick = quick;
  bool all = true;
  for (const auto& r : robsub::verify::run_battery(options)) {
    std::printf("[%s] %-28s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
    all = all && r.passed;
  }
  return all ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust multi-task subset selection experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  for (const char* name : {"satsel", "swp", "online", "imgsum"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " suite");
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "base seed (overrides config)");
    sub->add_option("--runs", runs, "number of runs (overrides config)")->check(CLI::PositiveNumber);
  }
  bool quick = false;
  auto* verify = app.add_subcommand("verify", "run the property battery");
  verify->add_flag("--quick", quick, "reduced instance counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto* chosen = app.get_subcommands().front();
  if (chosen == verify) return run_verify(quick);

  namespace ex = robsub::experiment;
  try {
    const ex::Suite suite = ex::parse_suite(chosen->get_name());
    ex::ExperimentConfig config = ex::load_config(config_path, suite);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;
    if (runs) config.runs = *runs;
    ex::validate(config);
    const auto result = ex::run_suite(config);
    for (const auto& f : result.files) std::cout << f << '\n';
    return kExitOk;
  } catch (const robsub::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
