#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "diffnet/errors.hpp"
#include "diffnet/scenario.hpp"

namespace {

struct CliArgs {
  std::string config;
  std::string out = "runs";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string model;
};

void add_common(CLI::App* cmd, CliArgs& args, bool with_out = true) {
  cmd->add_option("--config", args.config, "scenario config (JSON)")->required();
  if (with_out) cmd->add_option("--out", args.out, "output root directory");
  cmd->add_option("--seed", args.seed, "override the config rng_seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--model", args.model, "override the config model")
      ->check(CLI::IsMember({"reduced", "full", "both"}));
}

int dispatch(const CliArgs& args, diffnet::RunMode mode) {
  diffnet::ConfigOverrides ov;
  if (args.seed_set) ov.seed = args.seed;
  if (!args.model.empty()) ov.model = args.model;
  const diffnet::ScenarioConfig config = diffnet::load_config(args.config, ov);
  const diffnet::RunResult result = diffnet::run_scenario(config, args.out, mode);
  std::cout << "wrote " << result.out_dir.string() << "\n" << result.summary_json;
  return 0;
}

int do_validate(const CliArgs& args) {
  diffnet::ConfigOverrides ov;
  if (args.seed_set) ov.seed = args.seed;
  if (!args.model.empty()) ov.model = args.model;
  const diffnet::ScenarioConfig config = diffnet::load_config(args.config, ov);
  const diffnet::SystemSpec spec = diffnet::build_system(config);  // throws on issues
  std::cout << "ok: " << config.name << " (" << spec.cells.size() << " cells, "
            << diffnet::num_senders(spec) << " senders, " << diffnet::num_receivers(spec)
            << " receivers)\n";
  try {
    const diffnet::TimeScales ts = diffnet::time_scales(spec);
    std::cout << "eps_u = " << ts.eps_u << ", eps_v = " << ts.eps_v
              << (ts.separated ? " (time scales separated)" : " (separation NOT satisfied)")
              << "\n";
  } catch (const std::invalid_argument&) {
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion-mediated sender/receiver network simulator"};
  app.require_subcommand(1);

  CliArgs args;
  auto* validate = app.add_subcommand("validate", "parse a config and validate the system");
  add_common(validate, args, false);
  auto* gain = app.add_subcommand("gain", "assemble and export the communication gain matrix");
  add_common(gain, args);
  auto* simulate = app.add_subcommand("simulate", "run the configured model(s), write trajectories");
  add_common(simulate, args);
  auto* sweep = app.add_subcommand("sweep", "run the configured epsilon sweep");
  add_common(sweep, args);
  auto* analyze = app.add_subcommand("analyze", "run analyses only (no trajectory files)");
  add_common(analyze, args);
  auto* run = app.add_subcommand("run", "full pipeline: trajectories plus analyses");
  add_common(run, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return do_validate(args);
    if (gain->parsed()) return dispatch(args, diffnet::RunMode::Gain);
    if (simulate->parsed()) return dispatch(args, diffnet::RunMode::Simulate);
    if (sweep->parsed()) return dispatch(args, diffnet::RunMode::Sweep);
    if (analyze->parsed()) return dispatch(args, diffnet::RunMode::Analyze);
    if (run->parsed()) return dispatch(args, diffnet::RunMode::Run);
  } catch (const diffnet::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const diffnet::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const diffnet::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
