#include <doctest.h>

#include "wifiloc/io.hpp"
#include "wifiloc/scenario.hpp"

using namespace wifiloc;

namespace {

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, from.size(), to);
  return text;
}

}  // namespace

TEST_CASE("reference scenario") {
  const auto sc = reference_scenario();
  CHECK(sc.floorplan.area() == 40.0);
  CHECK(sc.access_points.size() == 8);
  CHECK(sc.waypoints.size() == 16);
  CHECK(sc.duration_s == 320.0);
  CHECK(sc.effective_speed() * 320.0 == doctest::Approx(sim::path_length(sc.waypoints)));
  CHECK(sc.survey.odometry_rate_hz == 100.0);
  CHECK(sc.survey.scan_rate_hz == 1.0);
  CHECK(sc.train.patience == 5);
  CHECK(sc.train.batch_size == 32);
  CHECK(sc.test_scans == 64);
}

TEST_CASE("bundled data file matches the built-in reference") {
  const auto from_file = load_scenario(WIFILOC_DATA_DIR "/reference_scenario.json");
  const auto builtin = reference_scenario();
  CHECK(from_file.floorplan.width == builtin.floorplan.width);
  CHECK(from_file.floorplan.obstacles.size() == builtin.floorplan.obstacles.size());
  REQUIRE(from_file.access_points.size() == builtin.access_points.size());
  for (std::size_t k = 0; k < builtin.access_points.size(); ++k) {
    CHECK(from_file.access_points[k].id == builtin.access_points[k].id);
    CHECK(from_file.access_points[k].position == builtin.access_points[k].position);
    CHECK(from_file.access_points[k].tx_power_dbm == builtin.access_points[k].tx_power_dbm);
    CHECK(from_file.access_points[k].path_loss_exponent == builtin.access_points[k].path_loss_exponent);
    CHECK(from_file.access_points[k].detection_floor_dbm == builtin.access_points[k].detection_floor_dbm);
  }
  CHECK(from_file.waypoints == builtin.waypoints);
  CHECK(from_file.duration_s == builtin.duration_s);
  CHECK(from_file.survey.rng_seed == builtin.survey.rng_seed);
  CHECK(from_file.survey.scan_start_offset_s == builtin.survey.scan_start_offset_s);
}

TEST_CASE("scenario validation errors") {
  const auto ref = reference_scenario_json();
  CHECK_THROWS_AS(parse_scenario("{"), DataError);
  CHECK_THROWS_AS(parse_scenario("{}"), DataError);
  CHECK_THROWS_WITH_AS(parse_scenario(replaced(ref, "[0.25, 0.25], [0.25, 9.75]", "[3.75, 0.25], [0.25, 9.75]")),
                       "unreachable waypoint", DataError);
  CHECK_THROWS_WITH_AS(parse_scenario(replaced(ref, "[1.75, 9.75], [1.75, 0.25]", "[2.0, 9.75], [2.0, 0.25]")),
                       "path blocked", DataError);
  CHECK_THROWS_AS(parse_scenario(replaced(ref, "\"02:00:00:00:00:02\"", "\"02:00:00:00:00:01\"")), DataError);
  CHECK_THROWS_AS(parse_scenario(replaced(ref, "\"duration_s\": 320.0", "\"duration_s\": -1")), DataError);
  CHECK_THROWS_AS(parse_scenario(replaced(ref, "\"02:00:00:00:00:01\"", "\"not-a-mac\"")), DataError);
}

TEST_CASE("speed without duration") {
  auto text = replaced(reference_scenario_json(), "\"duration_s\": 320.0", "\"speed_mps\": 0.5");
  CHECK(parse_scenario(text).effective_speed() == 0.5);
}

TEST_CASE("pipeline stages are deterministic") {
  const auto sc = reference_scenario();
  const auto a = simulate_test_scans(sc);
  CHECK(a.size() == 64);
  CHECK(a == simulate_test_scans(sc));
  const auto g = simulate_grid(sc, 0.99);
  CHECK(g == simulate_grid(sc, 0.99));
  for (const auto& o : a) {
    CHECK(o.x >= 0.25);
    CHECK(o.x <= 3.75);
    CHECK(o.y >= 0.25);
    CHECK(o.y <= 9.75);
    CHECK_FALSE(sc.floorplan.blocked(o.x, o.y));
  }
}
