#pragma once

#include <filesystem>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cbf_shield/metrics.hpp"

namespace cbf_shield {

/// One row per tick. Columns:
///   t,x,y,v,phi,s,d,mu,a_o,steer_o,a,steer,revised,fallback,active,supplementary
/// followed by obj<id>_x,obj<id>_y,obj<id>_h for every tracked object.
void write_trace_csv(std::ostream& out, const SimulationTrace& trace);

/// min_h is null when the scene has no objects.
nlohmann::json metrics_to_json(const Metrics& metrics);

/// Top panel: road, ego and object paths. Bottom panel: min h over time.
void write_trajectory_svg(std::ostream& out, const SimulationTrace& trace, const RoadModel& road);

void write_run_artifacts(const std::filesystem::path& dir, const SimulationTrace& trace,
                         const Metrics& metrics, const RoadModel& road, bool plot);

}  // namespace cbf_shield
