// Command-line front end: single runs and seeded batches.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cbf_shield/batch.hpp"
#include "cbf_shield/errors.hpp"
#include "cbf_shield/log.hpp"
#include "cbf_shield/trace_io.hpp"

namespace {

using namespace cbf_shield;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInvalid = 2;

struct CommonFlags {
  std::string scenario;
  std::string out = ".";
  std::optional<double> dt;
  std::optional<std::string> heading_frozen;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("scenario", flags.scenario, "Scenario JSON file")->required();
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--dt", flags.dt, "Override the simulation step (s)");
  cmd->add_option("--heading-frozen", flags.heading_frozen,
                  "Freeze the ellipse frame during differentiation")
      ->check(CLI::IsMember({"true", "false"}));
  cmd->add_option("--seed", flags.seed, "Override the scenario seed (batch: the first seed)");
}

ScenarioSpec load(const CommonFlags& flags) {
  ScenarioSpec spec = load_scenario(flags.scenario);
  if (flags.dt) spec.sim.dt = *flags.dt;
  if (flags.seed) spec.sim.seed = *flags.seed;
  if (flags.heading_frozen) spec.filter.barrier.heading_frozen = *flags.heading_frozen == "true";
  validate(spec);
  return spec;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

int run_command(const CommonFlags& flags, const std::string& mode_name, bool plot) {
  const ScenarioSpec spec = load(flags);
  const AblationMode mode = parse_mode(mode_name);
  const SimulationTrace trace = run_scenario(spec, spec.sim.seed, mode);
  const Metrics metrics = compute_metrics(trace);
  write_run_artifacts(flags.out, trace, metrics, spec.road.build(), plot);
  std::cout << metrics_to_json(metrics).dump(2) << '\n';
  return kOk;
}

int batch_command(const CommonFlags& flags, const std::vector<std::string>& mode_names, int seeds) {
  const ScenarioSpec spec = load(flags);
  BatchOptions options;
  options.seeds = seeds;
  options.modes.clear();
  for (const auto& m : mode_names) options.modes.push_back(parse_mode(m));
  const std::filesystem::path dir = flags.out;
  std::filesystem::create_directories(dir);
  try {
    const RunReport report = run_batch(spec, options);
    write_json(dir / "report.json", report_to_json(report));
    write_json(dir / "timings.json", timings_to_json(report));
    std::cout << format_table(report);
    return kOk;
  } catch (const BatchError& e) {
    nlohmann::json j = report_to_json(e.partial());
    j["partial"] = true;
    j["error"] = e.what();
    write_json(dir / "report.json", j);
    std::cerr << "error: " << e.what() << "\nnote: partial results written to "
              << (dir / "report.json").string() << '\n';
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"CBF safety shield: closed-loop runs and seeded batches"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string mode = "full";
  bool plot = false;
  auto* run = app.add_subcommand("run", "Run one scenario and write trace.csv, metrics.json");
  add_common(run, run_flags);
  run->add_option("--mode", mode, "Ablation mode")
      ->check(CLI::IsMember({"none", "obstacles_only", "full"}));
  run->add_flag("--plot", plot, "Also write trajectory.svg");

  CommonFlags batch_flags;
  std::vector<std::string> modes{"none", "full"};
  int seeds = 10;
  auto* batch = app.add_subcommand("batch", "Seeded variants per mode and an accident table");
  add_common(batch, batch_flags);
  batch->add_option("--seeds", seeds, "Number of seeded variants")->check(CLI::PositiveNumber);
  batch->add_option("--modes", modes, "Comma separated ablation modes")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "obstacles_only", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return run_command(run_flags, mode, plot);
    return batch_command(batch_flags, modes, seeds);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
