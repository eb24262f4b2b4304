#include "cbf_shield/metrics.hpp"

#include <algorithm>
#include <limits>

namespace cbf_shield {

Metrics compute_metrics(const SimulationTrace& trace) {
  Metrics m;
  m.min_h = std::numeric_limits<double>::infinity();
  std::size_t revised = 0;
  for (const auto& tick : trace.ticks) {
    m.max_abs_lateral_offset = std::max(m.max_abs_lateral_offset, std::abs(tick.frenet.d));
    for (const auto& obj : tick.objects) m.min_h = std::min(m.min_h, obj.h);
    if (tick.revised) ++revised;
    if (tick.fallback) ++m.fallback_ticks;
  }
  m.collision_count = static_cast<int>(trace.collisions.size());
  for (const auto& ev : trace.collisions)
    if (classify_fault(trace, ev)) ++m.at_fault_collision_count;
  m.revision_tick_fraction =
      trace.ticks.empty() ? 0.0 : static_cast<double>(revised) / static_cast<double>(trace.ticks.size());
  m.completed = m.collision_count == 0;
  return m;
}

}  // namespace cbf_shield
