#include "cbf_shield/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cbf_shield {

namespace {

// Fixed significant digits keep the output byte-stable across runs.
std::string num(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
  out << "t,x,y,v,phi,s,d,mu,a_o,steer_o,a,steer,revised,fallback,active,supplementary";
  for (const auto& o : trace.objects)
    out << fmt::format(",obj{0}_x,obj{0}_y,obj{0}_h", o.id);
  out << '\n';
  for (const auto& tick : trace.ticks) {
    std::string line = fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", num(tick.t), num(tick.ego.x),
        num(tick.ego.y), num(tick.ego.v), num(tick.ego.phi), num(tick.frenet.s),
        num(tick.frenet.d), num(tick.frenet.mu), num(tick.u_o.a), num(tick.u_o.steer),
        num(tick.u.a), num(tick.u.steer), tick.revised ? 1 : 0, tick.fallback ? 1 : 0,
        tick.active.size(), tick.supplementary_boxes);
    for (const auto& o : tick.objects)
      line += fmt::format(",{},{},{}", num(o.box.x), num(o.box.y), num(o.h));
    out << line << '\n';
  }
}

nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["collision_count"] = m.collision_count;
  j["at_fault_collision_count"] = m.at_fault_collision_count;
  j["min_h"] = std::isfinite(m.min_h) ? nlohmann::json(m.min_h) : nlohmann::json(nullptr);
  j["max_abs_lateral_offset"] = m.max_abs_lateral_offset;
  j["revision_tick_fraction"] = m.revision_tick_fraction;
  j["fallback_ticks"] = m.fallback_ticks;
  j["completed"] = m.completed;
  return j;
}

namespace {

struct Extent {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();
  void add(Vec2 p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
};

std::string polyline(const std::vector<Vec2>& pts, const std::string& stroke, double width,
                     const std::string& extra = {}) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                  num(width) + "\" " + extra + " points=\"";
  for (const auto& p : pts) s += fmt::format("{:.3f},{:.3f} ", p.x, p.y);
  s += "\"/>\n";
  return s;
}

const char* kPalette[] = {"#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf", "#ff7f0e"};

}  // namespace

void write_trajectory_svg(std::ostream& out, const SimulationTrace& trace, const RoadModel& road) {
  constexpr double kWidth = 1000.0;
  constexpr double kMapHeight = 420.0;
  constexpr double kPlotHeight = 200.0;
  constexpr double kPad = 30.0;

  std::vector<Vec2> centre, lower, upper;
  Extent ext;
  for (std::size_t i = 0; i < road.waypoints().size(); ++i) {
    const double s = road.arc_length()[i];
    centre.push_back(road.at(s).position);
    lower.push_back(road.at(s, road.d_min()).position);
    upper.push_back(road.at(s, road.d_max()).position);
    ext.add(lower.back());
    ext.add(upper.back());
  }
  std::vector<Vec2> ego;
  std::vector<std::vector<Vec2>> objs(trace.objects.size());
  for (const auto& tick : trace.ticks) {
    ego.push_back({tick.ego.x, tick.ego.y});
    ext.add(ego.back());
    for (std::size_t k = 0; k < tick.objects.size() && k < objs.size(); ++k)
      objs[k].push_back({tick.objects[k].box.x, tick.objects[k].box.y});
  }

  // Equal axis scaling so curvature reads true.
  const double span_x = std::max(ext.x1 - ext.x0, 1.0);
  const double span_y = std::max(ext.y1 - ext.y0, 1.0);
  const double scale = std::min((kWidth - 2 * kPad) / span_x, (kMapHeight - 2 * kPad) / span_y);
  const auto map = [&](Vec2 p) {
    return Vec2{kPad + (p.x - ext.x0) * scale, kMapHeight - kPad - (p.y - ext.y0) * scale};
  };
  const auto mapped = [&](const std::vector<Vec2>& pts) {
    std::vector<Vec2> r;
    r.reserve(pts.size());
    for (const auto& p : pts) r.push_back(map(p));
    return r;
  };

  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      kWidth, kMapHeight + kPlotHeight);
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << fmt::format("<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">{} ({}, seed {})</text>\n",
                     kPad, trace.scenario, to_string(trace.mode), trace.seed);
  out << polyline(mapped(lower), "#444", 1.5);
  out << polyline(mapped(upper), "#444", 1.5);
  out << polyline(mapped(centre), "#999", 1.0, "stroke-dasharray=\"6,4\"");
  for (std::size_t k = 0; k < objs.size(); ++k) {
    if (objs[k].empty()) continue;
    const char* colour = kPalette[k % std::size(kPalette)];
    if (trace.objects[k].is_static) {
      const auto& box = trace.ticks.front().objects[k].box;
      std::vector<Vec2> ring;
      for (const auto& c : box.corners()) ring.push_back(map(c));
      ring.push_back(ring.front());
      out << polyline(ring, colour, 1.5);
    } else {
      out << polyline(mapped(objs[k]), colour, 1.5);
    }
  }
  out << polyline(mapped(ego), "#1f77b4", 2.5);
  for (const auto& c : trace.collisions) {
    const Vec2 p = map({trace.ticks[c.tick].ego.x, trace.ticks[c.tick].ego.y});
    out << fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n",
                       p.x, p.y);
  }

  // min h over objects per tick.
  std::vector<Vec2> h_series;
  double h_lo = 0.0;
  double h_hi = 1.0;
  for (const auto& tick : trace.ticks) {
    if (tick.objects.empty()) continue;
    double h = std::numeric_limits<double>::infinity();
    for (const auto& o : tick.objects) h = std::min(h, o.h);
    h_series.push_back({tick.t, h});
    h_lo = std::min(h_lo, h);
    h_hi = std::max(h_hi, h);
  }
  const double top = kMapHeight + 10.0;
  const double bottom = kMapHeight + kPlotHeight - kPad;
  const double t_end = trace.ticks.empty() ? 1.0 : std::max(trace.ticks.back().t, 1e-9);
  const auto plot = [&](Vec2 p) {
    return Vec2{kPad + p.x / t_end * (kWidth - 2 * kPad),
                bottom - (p.y - h_lo) / (h_hi - h_lo) * (bottom - top)};
  };
  out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
                     kPad, top, kWidth - 2 * kPad, bottom - top);
  const Vec2 z0 = plot({0.0, 0.0});
  const Vec2 z1 = plot({t_end, 0.0});
  out << fmt::format("<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" stroke=\"red\" stroke-dasharray=\"4,3\"/>\n",
                     z0.x, z0.y, z1.x, z1.y);
  if (!h_series.empty()) {
    std::vector<Vec2> pts;
    for (const auto& p : h_series) pts.push_back(plot(p));
    out << polyline(pts, "#1f77b4", 1.5);
  }
  out << fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">min h over time (range {:.2f} to {:.2f})</text>\n",
                     kPad + 6, top + 14, h_lo, h_hi);
  out << "</svg>\n";
}

void write_run_artifacts(const std::filesystem::path& dir, const SimulationTrace& trace,
                         const Metrics& metrics, const RoadModel& road, bool plot) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "trace.csv");
    write_trace_csv(csv, trace);
  }
  {
    nlohmann::json j = metrics_to_json(metrics);
    j["scenario"] = trace.scenario;
    j["mode"] = std::string(to_string(trace.mode));
    j["seed"] = trace.seed;
    j["max_supplementary_boxes"] = trace.max_supplementary_boxes;
    auto& events = j["collisions"] = nlohmann::json::array();
    for (const auto& c : trace.collisions)
      events.push_back({{"t", c.t}, {"object", c.object_id}, {"penetration", c.penetration},
                        {"at_fault", classify_fault(trace, c)}});
    std::ofstream out(dir / "metrics.json");
    out << j.dump(2) << '\n';
  }
  if (plot) {
    std::ofstream svg(dir / "trajectory.svg");
    write_trajectory_svg(svg, trace, road);
  }
}

}  // namespace cbf_shield
