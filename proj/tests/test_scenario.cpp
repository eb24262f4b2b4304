#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "cbf_shield/errors.hpp"
#include "cbf_shield/scenario.hpp"

using namespace cbf_shield;

namespace {

const std::filesystem::path kScenarios{CBF_SHIELD_SCENARIO_DIR};

int parse_error_line(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::string parse_error_message(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

const char* kMinimal = R"({
  "road": {"pieces": [{"straight": 100}], "d_min": -2, "d_max": 2},
  "ego": {"s": 5, "v": 10},
  "sim": {"duration": 3, "dt": 0.05}
})";

}  // namespace

TEST_CASE("minimal scenario fills defaults") {
  const auto spec = parse_scenario(kMinimal);
  CHECK(spec.name == "scenario");
  CHECK(spec.road.d_min == -2.0);
  CHECK(spec.road.d_max == 2.0);
  CHECK(spec.ego.initial.s == 5.0);
  CHECK(spec.ego.initial.v == 10.0);
  CHECK(spec.sim.duration == 3.0);
  CHECK(spec.sim.dt == 0.05);
  CHECK(spec.sim.mode == AblationMode::full);
  CHECK(spec.vehicles.empty());
  CHECK_FALSE(spec.traffic.has_value());
  CHECK_FALSE(spec.ogm.has_value());
  const auto road = spec.road.build();
  CHECK(road.length() == doctest::Approx(100.0));
}

TEST_CASE("mode names round trip") {
  for (const auto m : {AblationMode::none, AblationMode::obstacles_only, AblationMode::full})
    CHECK(parse_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_mode("shielded"), std::invalid_argument);
}

TEST_CASE("missing sections are named at line 1") {
  const std::string no_road = R"({
  "ego": {"s": 5, "v": 10},
  "sim": {"duration": 3}
})";
  CHECK(parse_error_line(no_road) == 1);
  CHECK(parse_error_message(no_road).find("missing required section 'road'") != std::string::npos);

  const std::string no_sim = R"({
  "road": {"pieces": [{"straight": 100}], "d_min": -2, "d_max": 2},
  "ego": {"s": 5}
})";
  CHECK(parse_error_message(no_sim).find("'sim'") != std::string::npos);
}

TEST_CASE("errors carry the offending line") {
  const std::string syntax = "{\n  \"road\": {\n    \"d_min\": -2,,\n  }\n}";
  CHECK(parse_error_line(syntax) == 3);

  const std::string bad_type = R"({
  "road": {"pieces": [{"straight": 100}], "d_min": -2, "d_max": 2},
  "ego": {"s": 5, "v": 10},
  "background": {"vehicles": [
    {"id": 1, "s": 30,
     "longitudinal": {"type": "teleport"}}
  ]},
  "sim": {"duration": 3}
})";
  CHECK(parse_error_line(bad_type) == 6);
  CHECK(parse_error_message(bad_type).find("teleport") != std::string::npos);

  const std::string bad_radius = R"({
  "road": {"pieces": [{"straight": 100},
                      {"arc": {"radius": -5, "angle": 0.3}}],
           "d_min": -2, "d_max": 2},
  "ego": {"s": 5},
  "sim": {"duration": 3}
})";
  CHECK(parse_error_line(bad_radius) == 3);

  const std::string not_object = "[1, 2, 3]";
  CHECK(parse_error_line(not_object) == 1);
}

TEST_CASE("semantic violations are rejected") {
  const std::string zero_dt = R"({
  "road": {"pieces": [{"straight": 100}], "d_min": -2, "d_max": 2},
  "ego": {"s": 5},
  "sim": {"duration": 3, "dt": 0}
})";
  CHECK(parse_error_message(zero_dt).find("dt") != std::string::npos);

  const std::string bad_mode = R"({
  "road": {"pieces": [{"straight": 100}], "d_min": -2, "d_max": 2},
  "ego": {"s": 5},
  "sim": {"duration": 3, "mode": "paranoid"}
})";
  CHECK(parse_error_line(bad_mode) == 4);

  ScenarioSpec spec = parse_scenario(kMinimal);
  spec.vehicles.push_back({});
  spec.vehicles.back().length = 0.0;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("every shipped scenario loads") {
  for (const char* name : {"lead_brake", "cut_in", "ramp_rear", "ramp_left", "traffic", "ogm_door"}) {
    CAPTURE(name);
    const auto spec = load_scenario(kScenarios / (std::string(name) + ".json"));
    CHECK(spec.name == name);
    CHECK_NOTHROW(validate(spec));
  }
  CHECK_THROWS_AS(load_scenario(kScenarios / "does_not_exist.json"), ParseError);
}

TEST_CASE("lead brake scenario carries its script") {
  const auto spec = load_scenario(kScenarios / "lead_brake.json");
  REQUIRE(spec.vehicles.size() == 1);
  const auto& lead = spec.vehicles[0];
  CHECK(lead.longitudinal.kind == LongitudinalScript::Kind::brake);
  REQUIRE(lead.longitudinal.trigger.time.has_value());
  CHECK(*lead.longitudinal.trigger.time == 2.0);
  CHECK(lead.longitudinal.accel == 6.0);
  CHECK(lead.s - spec.ego.initial.s == 25.0);
}

TEST_CASE("ogm scenario rasterises its hidden object") {
  const auto spec = load_scenario(kScenarios / "ogm_door.json");
  REQUIRE(spec.ogm.has_value());
  CHECK(spec.ogm->rasterize_unperceived);
  CHECK(spec.ogm->grid.n_cols() == 200);
  CHECK(spec.ogm->grid.n_rows() == 60);
  int hidden = 0;
  for (const auto& o : spec.statics) hidden += o.perceived ? 0 : 1;
  CHECK(hidden == 1);
}

TEST_CASE("trigger fires on time or on gap") {
  Trigger t;
  CHECK_FALSE(t.fires(100.0, 1.0));
  t.time = 2.0;
  CHECK_FALSE(t.fires(1.9, 1.0));
  CHECK(t.fires(2.0, 50.0));
  Trigger g;
  g.gap = 10.0;
  CHECK(g.fires(0.0, 9.0));
  CHECK_FALSE(g.fires(0.0, 11.0));
  // ego already past the vehicle
  CHECK_FALSE(g.fires(0.0, -1.0));
}

TEST_CASE("traffic generation is seeded and spaced") {
  const auto spec = load_scenario(kScenarios / "traffic.json");
  REQUIRE(spec.traffic.has_value());
  const auto& tr = *spec.traffic;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const auto a = materialize_vehicles(spec, seed);
    const auto b = materialize_vehicles(spec, seed);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(a[i].s == b[i].s);
      CHECK(a[i].d == b[i].d);
      CHECK(a[i].v == b[i].v);
    }
    bool has_lead = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& v = a[i];
      CHECK(v.v >= tr.speed_min);
      CHECK(v.v <= tr.speed_max);
      CHECK(v.s >= spec.ego.initial.s - tr.s_behind);
      CHECK(v.s <= spec.ego.initial.s + tr.s_ahead_max);
      const bool same_lane = std::abs(v.d - spec.ego.initial.d) < 1.0;
      if (same_lane) {
        CHECK(std::abs(v.s - spec.ego.initial.s) >= tr.min_spacing);
        has_lead = has_lead || v.longitudinal.kind == LongitudinalScript::Kind::brake;
      }
      for (std::size_t j = i + 1; j < a.size(); ++j) {
        if (std::abs(a[j].d - v.d) < 1.0) CHECK(std::abs(a[j].s - v.s) >= tr.min_spacing);
        CHECK(a[j].id != v.id);
      }
      if (v.lateral.kind == LateralScript::Kind::lane_change) {
        CHECK(v.lateral.d_target == spec.ego.initial.d);
        CHECK_FALSE(same_lane);
      }
    }
    CHECK(has_lead);
  }
  const auto s1 = materialize_vehicles(spec, 1);
  const auto s2 = materialize_vehicles(spec, 2);
  bool differ = s1.size() != s2.size();
  for (std::size_t i = 0; !differ && i < s1.size(); ++i) differ = s1[i].s != s2[i].s;
  CHECK(differ);
}

TEST_CASE("scripted vehicles survive materialisation unchanged") {
  const auto spec = load_scenario(kScenarios / "cut_in.json");
  const auto v = materialize_vehicles(spec, 99);
  REQUIRE(v.size() == spec.vehicles.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v[i].id == spec.vehicles[i].id);
    CHECK(v[i].s == spec.vehicles[i].s);
  }
}
