#include "wifiloc/scenario.hpp"

#include <set>

#include <json.hpp>

#include "wifiloc/dataset.hpp"
#include "wifiloc/io.hpp"

namespace wifiloc {

using nlohmann::json;

namespace {

constexpr const char* kReferenceScenario = R"json({
  "floorplan": {
    "width": 4.0,
    "height": 10.0,
    "obstacles": [
      {"x_min": 3.5, "y_min": 0.0, "x_max": 4.0, "y_max": 1.5},
      {"x_min": 1.8, "y_min": 4.8, "x_max": 2.2, "y_max": 5.2}
    ]
  },
  "access_points": [
    {"id": "02:00:00:00:00:01", "x": 0.0, "y": 0.0, "tx_power_dbm": -40.0, "path_loss_exponent": 3.5, "detection_floor_dbm": -95.0},
    {"id": "02:00:00:00:00:02", "x": 4.0, "y": 2.0, "tx_power_dbm": -38.0, "path_loss_exponent": 3.5, "detection_floor_dbm": -95.0},
    {"id": "02:00:00:00:00:03", "x": 0.0, "y": 4.0, "tx_power_dbm": -42.0, "path_loss_exponent": 3.8, "detection_floor_dbm": -95.0},
    {"id": "02:00:00:00:00:04", "x": 4.0, "y": 6.0, "tx_power_dbm": -40.0, "path_loss_exponent": 3.5, "detection_floor_dbm": -95.0},
    {"id": "02:00:00:00:00:05", "x": 0.0, "y": 8.0, "tx_power_dbm": -36.0, "path_loss_exponent": 3.2, "detection_floor_dbm": -95.0},
    {"id": "02:00:00:00:00:06", "x": 4.0, "y": 10.0, "tx_power_dbm": -40.0, "path_loss_exponent": 3.5, "detection_floor_dbm": -95.0},
    {"id": "02:00:00:00:00:07", "x": 2.0, "y": 2.5, "tx_power_dbm": -45.0, "path_loss_exponent": 3.8, "detection_floor_dbm": -95.0},
    {"id": "02:00:00:00:00:08", "x": 2.0, "y": 7.5, "tx_power_dbm": -60.0, "path_loss_exponent": 3.5, "detection_floor_dbm": -80.0}
  ],
  "waypoints": [
    [0.25, 0.25], [0.25, 9.75], [0.75, 9.75], [0.75, 0.25],
    [1.25, 0.25], [1.25, 9.75], [1.75, 9.75], [1.75, 0.25],
    [2.25, 0.25], [2.25, 9.75], [2.75, 9.75], [2.75, 0.25],
    [3.25, 0.25], [3.25, 9.75], [3.75, 9.75], [3.75, 1.75]
  ],
  "duration_s": 320.0,
  "survey": {
    "odometry_rate_hz": 100.0,
    "scan_rate_hz": 1.0,
    "scan_start_offset_s": 0.3,
    "shadowing_sigma_db": 2.0,
    "odom_drift_per_m": 0.01,
    "odom_jitter_m": 0.005,
    "rng_seed": 7
  },
  "grid": {"spacings": [0.99, 0.66], "dwell_scans": 1},
  "train": {"epochs_max": 100, "batch_size": 32, "patience": 5, "learning_rate": 0.001, "val_fraction": 0.2, "rng_seed": 1},
  "evaluation": {"test_scans": 64, "test_margin_m": 0.25},
  "outputs": {
    "odometry": "odometry.csv",
    "true_poses": "true_poses.csv",
    "scans": "scans.jsonl",
    "grid_truth": "grid_truth.json",
    "test": "test.csv"
  }
}
)json";

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

ScenarioConfig from_json(const json& doc) {
  ScenarioConfig sc;
  const auto& fp = doc.at("floorplan");
  sc.floorplan.width = fp.at("width").get<double>();
  sc.floorplan.height = fp.at("height").get<double>();
  for (const auto& o : fp.value("obstacles", json::array())) {
    sc.floorplan.obstacles.push_back({o.at("x_min").get<double>(), o.at("y_min").get<double>(),
                                      o.at("x_max").get<double>(), o.at("y_max").get<double>()});
  }
  for (const auto& a : doc.at("access_points")) {
    sim::AccessPointSpec ap{ApId::parse(a.at("id").get<std::string>()),
                            {a.at("x").get<double>(), a.at("y").get<double>(), 0.0}};
    ap.tx_power_dbm = get_or(a, "tx_power_dbm", ap.tx_power_dbm);
    ap.path_loss_exponent = get_or(a, "path_loss_exponent", ap.path_loss_exponent);
    ap.detection_floor_dbm = get_or(a, "detection_floor_dbm", ap.detection_floor_dbm);
    sc.access_points.push_back(std::move(ap));
  }
  for (const auto& w : doc.value("waypoints", json::array())) {
    if (!w.is_array() || w.size() != 2) throw DataError("scenario: waypoint must be [x, y]");
    sc.waypoints.push_back({w[0].get<double>(), w[1].get<double>(), 0.0});
  }
  sc.speed_mps = get_or(doc, "speed_mps", 0.0);
  if (doc.contains("duration_s")) sc.duration_s = doc.at("duration_s").get<double>();

  const auto survey = doc.value("survey", json::object());
  sc.survey.odometry_rate_hz = get_or(survey, "odometry_rate_hz", sc.survey.odometry_rate_hz);
  sc.survey.scan_rate_hz = get_or(survey, "scan_rate_hz", sc.survey.scan_rate_hz);
  sc.survey.scan_start_offset_s = get_or(survey, "scan_start_offset_s", sc.survey.scan_start_offset_s);
  sc.survey.shadowing_sigma_db = get_or(survey, "shadowing_sigma_db", sc.survey.shadowing_sigma_db);
  sc.survey.odom_noise.drift_per_m = get_or(survey, "odom_drift_per_m", sc.survey.odom_noise.drift_per_m);
  sc.survey.odom_noise.jitter_m = get_or(survey, "odom_jitter_m", sc.survey.odom_noise.jitter_m);
  sc.survey.rng_seed = get_or<std::uint64_t>(survey, "rng_seed", sc.survey.rng_seed);

  const auto grid = doc.value("grid", json::object());
  sc.grid_spacings = get_or(grid, "spacings", sc.grid_spacings);
  sc.grid_dwell_scans = get_or(grid, "dwell_scans", sc.grid_dwell_scans);

  const auto train = doc.value("train", json::object());
  sc.train.epochs_max = get_or(train, "epochs_max", sc.train.epochs_max);
  sc.train.batch_size = get_or(train, "batch_size", sc.train.batch_size);
  sc.train.patience = get_or(train, "patience", sc.train.patience);
  sc.train.adam.learning_rate = get_or(train, "learning_rate", sc.train.adam.learning_rate);
  sc.train.val_fraction = get_or(train, "val_fraction", sc.train.val_fraction);
  sc.train.rng_seed = get_or<std::uint64_t>(train, "rng_seed", sc.train.rng_seed);

  const auto ev = doc.value("evaluation", json::object());
  sc.test_scans = get_or<std::size_t>(ev, "test_scans", sc.test_scans);
  sc.test_margin_m = get_or(ev, "test_margin_m", sc.test_margin_m);

  const auto out = doc.value("outputs", json::object());
  sc.odometry_file = get_or<std::string>(out, "odometry", sc.odometry_file);
  sc.true_pose_file = get_or<std::string>(out, "true_poses", sc.true_pose_file);
  sc.scan_file = get_or<std::string>(out, "scans", sc.scan_file);
  sc.grid_truth_file = get_or<std::string>(out, "grid_truth", sc.grid_truth_file);
  sc.test_file = get_or<std::string>(out, "test", sc.test_file);
  return sc;
}

}  // namespace

double ScenarioConfig::effective_speed() const {
  if (duration_s) {
    if (!(*duration_s > 0.0)) throw DataError("scenario: duration_s must be positive");
    return sim::path_length(waypoints) / *duration_s;
  }
  if (!(speed_mps > 0.0)) throw DataError("scenario: set speed_mps or duration_s");
  return speed_mps;
}

void ScenarioConfig::validate() const {
  floorplan.validate();
  survey.validate();
  train.validate();
  if (access_points.empty()) throw DataError("scenario: no access points");
  std::set<ApId> ids;
  for (const auto& ap : access_points) {
    ap.validate();
    if (!ids.insert(ap.id).second) throw DataError("scenario: duplicate AP " + ap.id.str());
  }
  for (const auto& w : waypoints) {
    if (!floorplan.in_bounds(w.x, w.y)) throw DataError("scenario: waypoint outside floorplan");
    if (floorplan.blocked(w.x, w.y)) throw DataError("unreachable waypoint");
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (floorplan.segment_blocked(waypoints[i - 1].x, waypoints[i - 1].y, waypoints[i].x, waypoints[i].y))
      throw DataError("path blocked");
  }
  if (waypoints.size() >= 2) (void)effective_speed();
  for (const double s : grid_spacings) {
    if (!(s > 0.0)) throw DataError("scenario: grid spacing must be positive");
  }
  if (grid_dwell_scans < 1) throw DataError("scenario: dwell_scans must be at least 1");
}

ScenarioConfig parse_scenario(const std::string& json_text) {
  ScenarioConfig sc;
  try {
    sc = from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw DataError(std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(io::read_file(path)); }

std::string reference_scenario_json() { return kReferenceScenario; }

ScenarioConfig reference_scenario() { return parse_scenario(kReferenceScenario); }

sim::SurveyRecording simulate_continuous(const ScenarioConfig& sc) {
  return sim::drive_continuous(sc.floorplan, sc.access_points, sc.waypoints, sc.effective_speed(), sc.survey);
}

std::vector<sim::GridObservation> simulate_grid(const ScenarioConfig& sc, double spacing) {
  return sim::survey_grid_observations(sc.floorplan, sc.access_points, spacing, sc.grid_dwell_scans, sc.survey);
}

std::vector<sim::GridObservation> simulate_test_scans(const ScenarioConfig& sc) {
  // Offset the seed so test scans never share shadowing draws with the survey.
  return sim::random_test_scans(sc.floorplan, sc.access_points, sc.test_scans, sc.survey.shadowing_sigma_db,
                                sc.survey.rng_seed + 0x9e3779b97f4a7c15ULL, sc.test_margin_m);
}

AlignedSurvey align_and_build(std::span<const WifiScan> scans, std::span<const OdometrySample> odometry) {
  AlignedSurvey out;
  out.alignment = align::match_scans(scans, odometry);
  out.dataset = build_dataset(out.alignment, scans, odometry);
  return out;
}

}  // namespace wifiloc
