#include "cbf_shield/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cbf_shield/errors.hpp"
#include "cbf_shield/occupancy_grid_io.hpp"

namespace cbf_shield {

using nlohmann::json;

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::none:
      return "none";
    case AblationMode::obstacles_only:
      return "obstacles_only";
    case AblationMode::full:
      return "full";
  }
  return "unknown";
}

AblationMode parse_mode(std::string_view name) {
  if (name == "none") return AblationMode::none;
  if (name == "obstacles_only") return AblationMode::obstacles_only;
  if (name == "full") return AblationMode::full;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

void validate(const ScenarioSpec& spec) {
  if (!(spec.sim.duration > 0.0)) throw std::invalid_argument("sim.duration must be positive");
  if (!(spec.sim.dt > 0.0)) throw std::invalid_argument("sim.dt must be positive");
  if (spec.road.centerline.size() < 2) throw std::invalid_argument("road needs a centreline");
  if (!is_valid(spec.ego.geometry)) throw std::invalid_argument("invalid ego geometry");
  for (const auto& v : spec.vehicles)
    if (!(v.length > 0.0 && v.width > 0.0))
      throw std::invalid_argument("background vehicle " + std::to_string(v.id) + " has no extent");
  for (const auto& o : spec.statics)
    if (!(o.length > 0.0 && o.width > 0.0))
      throw std::invalid_argument("static object " + std::to_string(o.id) + " has no extent");
  FilterConfig cfg = spec.filter;
  cfg.geometry = spec.ego.geometry;
  validate(cfg);
}

namespace {

// Portable uniform draws: std::uniform_real_distribution is not specified
// bit-for-bit across standard libraries.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::vector<BackgroundVehicle> materialize_vehicles(const ScenarioSpec& spec, std::uint64_t seed) {
  std::vector<BackgroundVehicle> out = spec.vehicles;
  if (!spec.traffic || spec.traffic->count <= 0 || spec.traffic->lanes.empty()) return out;
  const TrafficSpec& tr = *spec.traffic;
  Draw draw(seed);

  int next_id = 1000;
  const double ego_s = spec.ego.initial.s;
  const double ego_d = spec.ego.initial.d;
  const auto clashes = [&](double s, double d) {
    if (std::abs(d - ego_d) < 1.0 && std::abs(s - ego_s) < tr.min_spacing) return true;
    return std::any_of(out.begin(), out.end(), [&](const BackgroundVehicle& o) {
      return std::abs(o.d - d) < 1.0 && std::abs(o.s - s) < tr.min_spacing;
    });
  };

  if (tr.lead_brake) {
    BackgroundVehicle lead;
    lead.id = next_id++;
    lead.s = ego_s + draw.uniform(tr.lead_gap_min, tr.lead_gap_max);
    lead.d = ego_d;
    lead.v = draw.uniform(tr.speed_min, tr.speed_max);
    lead.longitudinal.kind = LongitudinalScript::Kind::brake;
    lead.longitudinal.trigger.time = draw.uniform(tr.brake_time_min, tr.brake_time_max);
    lead.longitudinal.accel = draw.uniform(tr.decel_min, tr.decel_max);
    lead.longitudinal.v_final = 0.0;
    out.push_back(lead);
  }

  for (int i = 0; i < tr.count; ++i) {
    BackgroundVehicle v;
    v.id = next_id++;
    bool placed = false;
    for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
      v.d = tr.lanes[draw.index(tr.lanes.size())];
      v.s = ego_s + draw.uniform(-tr.s_behind, tr.s_ahead_max);
      if (v.s > ego_s && v.s < ego_s + tr.s_ahead_min) continue;
      placed = !clashes(v.s, v.d);
    }
    if (!placed) continue;
    v.v = draw.uniform(tr.speed_min, tr.speed_max);
    const bool in_ego_lane = std::abs(v.d - ego_d) < 1.0;
    if (!in_ego_lane && draw.chance(tr.cut_in_probability)) {
      v.lateral.kind = LateralScript::Kind::lane_change;
      v.lateral.d_target = ego_d;
      v.lateral.lat_speed = draw.uniform(tr.lat_speed_min, tr.lat_speed_max);
      v.lateral.trigger.gap = draw.uniform(tr.cut_gap_min, tr.cut_gap_max);
    }
    if (draw.chance(tr.brake_probability)) {
      v.longitudinal.kind = LongitudinalScript::Kind::brake;
      v.longitudinal.trigger.time = draw.uniform(tr.brake_time_min, tr.brake_time_max);
      v.longitudinal.accel = draw.uniform(tr.decel_min, tr.decel_max);
      v.longitudinal.v_final = draw.uniform(0.0, 0.5 * v.v);
    }
    out.push_back(v);
  }
  return out;
}

namespace {

class ScenarioParser {
 public:
  ScenarioParser(std::string_view text, std::filesystem::path base_dir)
      : text_(text), base_dir_(std::move(base_dir)) {}

  ScenarioSpec parse() {
    json root;
    try {
      root = json::parse(text_);
    } catch (const json::parse_error& e) {
      throw ParseError(line_at(e.byte == 0 ? 0 : e.byte - 1), "invalid JSON: " + std::string(e.what()));
    }
    if (!root.is_object()) throw ParseError(1, "scenario must be a JSON object");

    ScenarioSpec spec;
    spec.name = root.value("name", std::string("scenario"));
    try {
      road(section(root, "road"), spec.road);
      ego(section(root, "ego"), spec.ego);
      if (root.contains("planner")) planner(root["planner"], spec.planner);
      if (root.contains("background")) background(root["background"], spec);
      if (root.contains("ogm")) spec.ogm = ogm(root["ogm"]);
      sim(section(root, "sim"), spec.sim);
      if (root.contains("filter")) filter(root["filter"], spec.filter);
      spec.filter.geometry = spec.ego.geometry;
      validate(spec);
    } catch (const json::type_error& e) {
      throw ParseError(last_key_line(), std::string("type error near '") + last_key_ + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(last_key_line(), e.what());
    }
    return spec;
  }

 private:
  const json& section(const json& obj, const char* key) {
    if (!obj.contains(key)) throw ParseError(1, std::string("missing required section '") + key + "'");
    last_key_ = key;
    return obj.at(key);
  }

  template <typename T>
  T get(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    last_key_ = key;
    return obj.at(key).get<T>();
  }

  double req(const json& obj, const char* key) {
    if (!obj.contains(key)) throw ParseError(last_key_line(), std::string("missing field '") + key + "'");
    last_key_ = key;
    return obj.at(key).get<double>();
  }

  Vec2 vec2(const json& v) {
    if (!v.is_array() || v.size() != 2) throw ParseError(last_key_line(), "expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  void road(const json& j, RoadSpec& out) {
    out.d_min = req(j, "d_min");
    out.d_max = req(j, "d_max");
    if (j.contains("waypoints")) {
      last_key_ = "waypoints";
      for (const auto& p : j["waypoints"]) out.centerline.push_back(vec2(p));
      return;
    }
    if (!j.contains("pieces")) throw ParseError(last_key_line(), "road needs 'waypoints' or 'pieces'");
    const Vec2 start = j.contains("start") ? vec2(j["start"]) : Vec2{};
    const double heading = get(j, "heading", 0.0);
    const double spacing = get(j, "spacing", 1.0);
    std::vector<RoadSegmentSpec> pieces;
    last_key_ = "pieces";
    for (const auto& p : j["pieces"]) {
      if (p.contains("straight")) {
        pieces.push_back({p["straight"].get<double>(), 0.0});
      } else if (p.contains("arc")) {
        last_key_ = "arc";
        const auto& a = p["arc"];
        const double radius = req(a, "radius");
        const double angle = req(a, "angle");
        if (!(radius > 0.0)) throw ParseError(last_key_line(), "arc radius must be positive");
        pieces.push_back({radius * std::abs(angle), angle >= 0.0 ? 1.0 / radius : -1.0 / radius});
      } else {
        throw ParseError(last_key_line(), "road piece must be 'straight' or 'arc'");
      }
    }
    out.centerline = sample_centerline(start, heading, pieces, spacing);
  }

  void ego(const json& j, EgoSpec& out) {
    out.initial.s = get(j, "s", out.initial.s);
    out.initial.d = get(j, "d", out.initial.d);
    out.initial.v = get(j, "v", out.initial.v);
    out.initial.mu = get(j, "mu", out.initial.mu);
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      last_key_ = "geometry";
      out.geometry.wheelbase = get(g, "wheelbase", out.geometry.wheelbase);
      out.geometry.rear_wheelbase = get(g, "rear_wheelbase", out.geometry.rear_wheelbase);
      out.geometry.body_length = get(g, "length", out.geometry.body_length);
      out.geometry.body_width = get(g, "width", out.geometry.body_width);
    }
  }

  void planner(const json& j, PlannerParams& out) {
    out.target_speed = get(j, "target_speed", out.target_speed);
    out.speed_gain = get(j, "speed_gain", out.speed_gain);
    out.lookahead_min = get(j, "lookahead_min", out.lookahead_min);
    out.lookahead_gain = get(j, "lookahead_gain", out.lookahead_gain);
    out.lane_offset = get(j, "lane_offset", out.lane_offset);
  }

  Trigger trigger(const json& j) {
    Trigger t;
    if (j.contains("trigger_time")) t.time = get(j, "trigger_time", 0.0);
    if (j.contains("trigger_gap")) t.gap = get(j, "trigger_gap", 0.0);
    return t;
  }

  BackgroundVehicle vehicle(const json& j) {
    BackgroundVehicle v;
    v.id = get(j, "id", 1);
    v.length = get(j, "length", v.length);
    v.width = get(j, "width", v.width);
    v.s = req(j, "s");
    v.d = get(j, "d", 0.0);
    v.v = get(j, "v", 0.0);
    v.perceived = get(j, "perceived", true);
    if (j.contains("longitudinal")) {
      last_key_ = "longitudinal";
      const auto& l = j["longitudinal"];
      const auto type = get(l, "type", std::string("constant"));
      auto& lon = v.longitudinal;
      if (type == "constant") {
        lon.kind = LongitudinalScript::Kind::constant;
      } else if (type == "brake" || type == "accelerate") {
        lon.kind = type == "brake" ? LongitudinalScript::Kind::brake
                                   : LongitudinalScript::Kind::accelerate;
        lon.trigger = trigger(l);
        lon.accel = req(l, "accel");
        lon.v_final = get(l, "v_final", 0.0);
        if (!(lon.accel > 0.0)) throw ParseError(last_key_line(), "accel must be positive");
      } else {
        throw ParseError(last_key_line(), "unknown longitudinal type '" + type + "'");
      }
    }
    if (j.contains("lateral")) {
      last_key_ = "lateral";
      const auto& l = j["lateral"];
      const auto type = get(l, "type", std::string("keep"));
      auto& lat = v.lateral;
      if (type == "keep") {
        lat.kind = LateralScript::Kind::keep;
      } else if (type == "lane_change") {
        lat.kind = LateralScript::Kind::lane_change;
        lat.trigger = trigger(l);
        lat.d_target = req(l, "d_target");
        lat.lat_speed = get(l, "lat_speed", lat.lat_speed);
        if (!(lat.lat_speed > 0.0)) throw ParseError(last_key_line(), "lat_speed must be positive");
      } else if (type == "merge") {
        lat.kind = LateralScript::Kind::merge;
        lat.d_target = req(l, "d_target");
        lat.s_start = req(l, "s_start");
        lat.s_end = req(l, "s_end");
      } else {
        throw ParseError(last_key_line(), "unknown lateral type '" + type + "'");
      }
    }
    return v;
  }

  StaticObject static_object(const json& j) {
    StaticObject o;
    o.id = get(j, "id", o.id);
    o.s = req(j, "s");
    o.d = get(j, "d", 0.0);
    o.length = req(j, "length");
    o.width = req(j, "width");
    o.heading = get(j, "heading", 0.0);
    o.perceived = get(j, "perceived", true);
    return o;
  }

  void background(const json& j, ScenarioSpec& spec) {
    if (j.is_array()) {
      for (const auto& v : j) spec.vehicles.push_back(vehicle(v));
      return;
    }
    if (j.contains("vehicles"))
      for (const auto& v : j["vehicles"]) spec.vehicles.push_back(vehicle(v));
    if (j.contains("static"))
      for (const auto& o : j["static"]) spec.statics.push_back(static_object(o));
    if (j.contains("traffic")) {
      last_key_ = "traffic";
      const auto& t = j["traffic"];
      TrafficSpec tr;
      tr.count = get(t, "count", tr.count);
      tr.lanes = get(t, "lanes", tr.lanes);
      tr.s_ahead_min = get(t, "s_ahead_min", tr.s_ahead_min);
      tr.s_ahead_max = get(t, "s_ahead_max", tr.s_ahead_max);
      tr.s_behind = get(t, "s_behind", tr.s_behind);
      tr.min_spacing = get(t, "min_spacing", tr.min_spacing);
      tr.speed_min = get(t, "speed_min", tr.speed_min);
      tr.speed_max = get(t, "speed_max", tr.speed_max);
      tr.cut_in_probability = get(t, "cut_in_probability", tr.cut_in_probability);
      tr.brake_probability = get(t, "brake_probability", tr.brake_probability);
      tr.decel_min = get(t, "decel_min", tr.decel_min);
      tr.decel_max = get(t, "decel_max", tr.decel_max);
      tr.brake_time_min = get(t, "brake_time_min", tr.brake_time_min);
      tr.brake_time_max = get(t, "brake_time_max", tr.brake_time_max);
      tr.cut_gap_min = get(t, "cut_gap_min", tr.cut_gap_min);
      tr.cut_gap_max = get(t, "cut_gap_max", tr.cut_gap_max);
      tr.lat_speed_min = get(t, "lat_speed_min", tr.lat_speed_min);
      tr.lat_speed_max = get(t, "lat_speed_max", tr.lat_speed_max);
      tr.lead_brake = get(t, "lead_brake", tr.lead_brake);
      tr.lead_gap_min = get(t, "lead_gap_min", tr.lead_gap_min);
      tr.lead_gap_max = get(t, "lead_gap_max", tr.lead_gap_max);
      if (tr.lanes.empty() && tr.count > 0) throw ParseError(last_key_line(), "traffic needs 'lanes'");
      spec.traffic = tr;
    }
  }

  OgmSpec ogm(const json& j) {
    last_key_ = "ogm";
    OgmSpec out;
    out.enabled = get(j, "enabled", true);
    if (j.contains("file")) {
      const auto path = base_dir_ / get(j, "file", std::string());
      try {
        out.grid = read_occupancy_grid(path);
      } catch (const ParseError& e) {
        throw ParseError(last_key_line(), path.string() + ": " + e.what());
      }
    } else if (j.contains("rasterize")) {
      last_key_ = "rasterize";
      const auto& r = j["rasterize"];
      const Vec2 origin = vec2(r.at("origin"));
      const double res = req(r, "resolution");
      const auto size = r.at("size").get<std::vector<long long>>();
      if (size.size() != 2 || size[0] <= 0 || size[1] <= 0)
        throw ParseError(last_key_line(), "rasterize.size must be [n_cols, n_rows]");
      out.grid = OccupancyGrid(origin, res, static_cast<std::size_t>(size[0]),
                               static_cast<std::size_t>(size[1]));
      out.rasterize_unperceived = true;
    } else {
      throw ParseError(last_key_line(), "ogm needs 'file' or 'rasterize'");
    }
    return out;
  }

  void sim(const json& j, SimSpec& out) {
    out.duration = get(j, "duration", out.duration);
    out.dt = get(j, "dt", out.dt);
    out.seed = get(j, "seed", out.seed);
    if (j.contains("mode")) out.mode = parse_mode(get(j, "mode", std::string("full")));
  }

  void filter(const json& j, FilterConfig& out) {
    auto& b = out.barrier;
    b.c_safe = get(j, "c_safe", b.c_safe);
    b.lon_margin = get(j, "lon_margin", b.lon_margin);
    b.lat_margin = get(j, "lat_margin", b.lat_margin);
    b.alpha1 = get(j, "alpha1", b.alpha1);
    b.alpha2 = get(j, "alpha2", b.alpha2);
    b.beta = get(j, "beta", b.beta);
    b.gamma = get(j, "gamma", b.gamma);
    b.heading_frozen = get(j, "heading_frozen", b.heading_frozen);
    out.risk_radius = get(j, "risk_radius", out.risk_radius);
    out.h_activation = get(j, "h_activation", out.h_activation);
    if (j.contains("q")) {
      last_key_ = "q";
      const auto q = j["q"].get<std::vector<double>>();
      if (q.size() != 3) throw ParseError(last_key_line(), "q must be [aa, as, ss]");
      out.q = {q[0], q[1], q[2]};
    }
    if (j.contains("limits")) {
      last_key_ = "limits";
      const auto& l = j["limits"];
      out.limits.a_min = get(l, "a_min", out.limits.a_min);
      out.limits.a_max = get(l, "a_max", out.limits.a_max);
      out.limits.steer_min = get(l, "steer_min", out.limits.steer_min);
      out.limits.steer_max = get(l, "steer_max", out.limits.steer_max);
    }
    out.perception.coverage_fraction = get(j, "coverage_fraction", out.perception.coverage_fraction);
    out.perception.linkage_threshold = get(j, "linkage_threshold", out.perception.linkage_threshold);
  }

  int line_at(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
  }

  int last_key_line() const {
    if (last_key_.empty()) return 1;
    const auto pos = text_.find("\"" + last_key_ + "\"");
    return pos == std::string_view::npos ? 1 : line_at(pos);
  }

  std::string_view text_;
  std::filesystem::path base_dir_;
  std::string last_key_;
};

}  // namespace

ScenarioSpec parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  return ScenarioParser(text, base_dir).parse();
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

}  // namespace cbf_shield
