#include "cbf_shield/batch.hpp"

#include <chrono>

#include <fmt/format.h>

#include "cbf_shield/trace_io.hpp"

namespace cbf_shield {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RunEntry run_one(const ScenarioSpec& spec, AblationMode mode, std::uint64_t seed) {
  RunEntry entry;
  entry.mode = mode;
  entry.seed = seed;
  const auto start = Clock::now();
  try {
    entry.metrics = compute_metrics(run_scenario(spec, seed, mode));
  } catch (const std::exception& e) {
    entry.ok = false;
    entry.error = e.what();
  }
  entry.wall_seconds = seconds_since(start);
  return entry;
}

RunReport prepare(const ScenarioSpec& spec, const BatchOptions& options) {
  if (options.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
  if (options.modes.empty()) throw std::invalid_argument("at least one mode is required");
  validate(spec);
  RunReport report;
  report.scenario = spec.name;
  report.seeds = options.seeds;
  report.base_seed = spec.sim.seed;
  report.modes = options.modes;
  report.config = config_echo(spec);
  report.entries.resize(options.modes.size() * static_cast<std::size_t>(options.seeds));
  return report;
}

RunReport finish(RunReport report, Clock::time_point start) {
  report.table = aggregate(report.entries, report.modes);
  report.wall_seconds = seconds_since(start);
  for (const auto& e : report.entries) {
    if (!e.ok) {
      throw BatchError(fmt::format("{} seed {} failed: {}", to_string(e.mode), e.seed, e.error),
                       std::move(report));
    }
  }
  return report;
}

}  // namespace

RunReport run_batch(const ScenarioSpec& spec, const BatchOptions& options) {
  const auto start = Clock::now();
  RunReport report = prepare(spec, options);
  const auto n = static_cast<long long>(report.entries.size());
  // Every job writes only its own slot; the table is built after the join.
#pragma omp parallel for schedule(dynamic, 1)
  for (long long k = 0; k < n; ++k) {
    const auto m = static_cast<std::size_t>(k) / static_cast<std::size_t>(options.seeds);
    const auto i = static_cast<std::uint64_t>(k % options.seeds);
    report.entries[static_cast<std::size_t>(k)] =
        run_one(spec, options.modes[m], spec.sim.seed + i);
  }
  return finish(std::move(report), start);
}

RunReport run_batch_serial(const ScenarioSpec& spec, const BatchOptions& options) {
  const auto start = Clock::now();
  RunReport report = prepare(spec, options);
  std::size_t k = 0;
  for (const auto mode : options.modes)
    for (int i = 0; i < options.seeds; ++i)
      report.entries[k++] = run_one(spec, mode, spec.sim.seed + static_cast<std::uint64_t>(i));
  return finish(std::move(report), start);
}

std::vector<AggregateRow> aggregate(const std::vector<RunEntry>& entries,
                                    const std::vector<AblationMode>& modes) {
  std::vector<AggregateRow> table;
  for (const auto mode : modes) {
    AggregateRow row;
    row.mode = mode;
    for (const auto& e : entries) {
      if (e.mode != mode || !e.ok) continue;
      ++row.runs;
      row.collisions += e.metrics.collision_count;
      row.at_fault_collisions += e.metrics.at_fault_collision_count;
      if (e.metrics.collision_count > 0) ++row.runs_with_collision;
      if (e.metrics.at_fault_collision_count > 0) ++row.runs_with_at_fault;
    }
    table.push_back(row);
  }
  return table;
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["scenario"] = report.scenario;
  j["seeds"] = report.seeds;
  j["base_seed"] = report.base_seed;
  auto& modes = j["modes"] = nlohmann::json::array();
  for (const auto m : report.modes) modes.push_back(std::string(to_string(m)));
  auto& runs = j["runs"] = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json r;
    r["mode"] = std::string(to_string(e.mode));
    r["seed"] = e.seed;
    if (e.ok) {
      r["metrics"] = metrics_to_json(e.metrics);
    } else {
      r["error"] = e.error;
    }
    runs.push_back(std::move(r));
  }
  auto& table = j["table"] = nlohmann::json::array();
  for (const auto& row : report.table) {
    table.push_back({{"mode", std::string(to_string(row.mode))},
                     {"runs", row.runs},
                     {"runs_with_collision", row.runs_with_collision},
                     {"runs_with_at_fault", row.runs_with_at_fault},
                     {"collisions", row.collisions},
                     {"at_fault_collisions", row.at_fault_collisions}});
  }
  j["config"] = report.config;
  return j;
}

nlohmann::json timings_to_json(const RunReport& report) {
  nlohmann::json j;
  j["total_seconds"] = report.wall_seconds;
  auto& runs = j["runs"] = nlohmann::json::array();
  for (const auto& e : report.entries)
    runs.push_back({{"mode", std::string(to_string(e.mode))}, {"seed", e.seed},
                    {"seconds", e.wall_seconds}});
  return j;
}

std::string format_table(const RunReport& report) {
  std::string out = fmt::format("{:<16} {:>18} {:>18}\n", "mode", "collisions", "at-fault");
  for (const auto& row : report.table) {
    out += fmt::format("{:<16} {:>18} {:>18}\n", to_string(row.mode),
                       fmt::format("{}/{}", row.runs_with_collision, row.runs),
                       fmt::format("{}/{}", row.runs_with_at_fault, row.runs));
  }
  return out;
}

nlohmann::json config_echo(const ScenarioSpec& spec) {
  const auto& f = spec.filter;
  const auto& b = f.barrier;
  nlohmann::json j;
  j["sim"] = {{"duration", spec.sim.duration}, {"dt", spec.sim.dt}, {"seed", spec.sim.seed}};
  j["road"] = {{"d_min", spec.road.d_min}, {"d_max", spec.road.d_max},
               {"waypoints", spec.road.centerline.size()}};
  j["barrier"] = {{"c_safe", b.c_safe},       {"lon_margin", b.lon_margin},
                  {"lat_margin", b.lat_margin}, {"alpha1", b.alpha1},
                  {"alpha2", b.alpha2},       {"beta", b.beta},
                  {"gamma", b.gamma},         {"heading_frozen", b.heading_frozen}};
  j["filter"] = {{"q", {f.q.aa, f.q.as, f.q.ss}},
                 {"risk_radius", f.risk_radius},
                 {"h_activation", f.h_activation},
                 {"limits", {f.limits.a_min, f.limits.a_max, f.limits.steer_min, f.limits.steer_max}}};
  j["planner"] = {{"target_speed", spec.planner.target_speed},
                  {"lane_offset", spec.planner.lane_offset}};
  j["vehicles"] = spec.vehicles.size();
  j["statics"] = spec.statics.size();
  j["traffic"] = spec.traffic ? spec.traffic->count : 0;
  j["ogm"] = spec.ogm && spec.ogm->enabled;
  return j;
}

}  // namespace cbf_shield
