#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbf_shield/metrics.hpp"

namespace cbf_shield {

struct RunEntry {
  AblationMode mode = AblationMode::full;
  std::uint64_t seed = 0;
  Metrics metrics;
  double wall_seconds = 0.0;
  bool ok = true;
  std::string error;
};

/// One row of the accident table.
struct AggregateRow {
  AblationMode mode = AblationMode::full;
  int runs = 0;
  /// Runs with at least one collision, and with at least one at-fault one.
  int runs_with_collision = 0;
  int runs_with_at_fault = 0;
  /// Sums of the per-run event counts.
  int collisions = 0;
  int at_fault_collisions = 0;
};

struct RunReport {
  std::string scenario;
  int seeds = 0;
  std::uint64_t base_seed = 0;
  std::vector<AblationMode> modes;
  /// Mode-major, then seed order, independent of scheduling.
  std::vector<RunEntry> entries;
  std::vector<AggregateRow> table;
  nlohmann::json config;
  double wall_seconds = 0.0;
};

struct BatchOptions {
  int seeds = 1;
  std::vector<AblationMode> modes{AblationMode::full};
};

/// Thrown after every job has finished when at least one failed; carries
/// the partial report.
class BatchError : public std::runtime_error {
 public:
  BatchError(const std::string& what, RunReport partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const RunReport& partial() const { return partial_; }

 private:
  RunReport partial_;
};

/// Variant i runs with seed spec.sim.seed + i, so one seed reproduces `run`.
RunReport run_batch(const ScenarioSpec& spec, const BatchOptions& options);
RunReport run_batch_serial(const ScenarioSpec& spec, const BatchOptions& options);

std::vector<AggregateRow> aggregate(const std::vector<RunEntry>& entries,
                                    const std::vector<AblationMode>& modes);

/// Everything except wall-clock timings, so repeated runs serialise
/// identically. Timings go to timings_to_json.
nlohmann::json report_to_json(const RunReport& report);
nlohmann::json timings_to_json(const RunReport& report);
/// Plain-text accident table, one row per mode.
std::string format_table(const RunReport& report);

nlohmann::json config_echo(const ScenarioSpec& spec);

}  // namespace cbf_shield
