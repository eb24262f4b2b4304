#pragma once

#include "cbf_shield/simulator.hpp"

namespace cbf_shield {

struct Metrics {
  int collision_count = 0;
  int at_fault_collision_count = 0;
  double min_h = 0.0;
  double max_abs_lateral_offset = 0.0;
  double revision_tick_fraction = 0.0;
  int fallback_ticks = 0;
  /// Ran the full duration without a collision.
  bool completed = false;
};

Metrics compute_metrics(const SimulationTrace& trace);

}  // namespace cbf_shield
