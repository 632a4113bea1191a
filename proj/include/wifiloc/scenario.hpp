#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wifiloc/alignment.hpp"
#include "wifiloc/localizer.hpp"
#include "wifiloc/simulator.hpp"

namespace wifiloc {

/// Everything needed to script a survey: world, robot route, survey
/// parameters, grid spacings and training overrides. Loaded from JSON.
struct ScenarioConfig {
  sim::Floorplan floorplan;
  std::vector<sim::AccessPointSpec> access_points;
  std::vector<Pose2D> waypoints;
  /// Either a fixed speed or a target duration; duration wins when both are set.
  double speed_mps = 0.0;
  std::optional<double> duration_s;
  sim::SurveyConfig survey;
  std::vector<double> grid_spacings{0.99, 0.66};
  int grid_dwell_scans = 1;
  nn::TrainConfig train;
  std::size_t test_scans = 64;
  double test_margin_m = 0.25;
  std::string odometry_file = "odometry.csv";
  std::string true_pose_file = "true_poses.csv";
  std::string scan_file = "scans.jsonl";
  std::string grid_truth_file = "grid_truth.json";
  std::string test_file = "test.csv";

  /// Drive speed implied by speed_mps / duration_s.
  double effective_speed() const;
  /// Throws DataError when geometry is inconsistent (waypoints blocked, APs
  /// invalid, no speed).
  void validate() const;
};

ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// The bundled 4 m x 10 m reference room: two obstacles, 8 APs, a
/// boustrophedon route driven in 320 s.
ScenarioConfig reference_scenario();
std::string reference_scenario_json();

// Pipeline stages driven by a scenario.
sim::SurveyRecording simulate_continuous(const ScenarioConfig& sc);
std::vector<sim::GridObservation> simulate_grid(const ScenarioConfig& sc, double spacing);
std::vector<sim::GridObservation> simulate_test_scans(const ScenarioConfig& sc);

struct AlignedSurvey {
  FingerprintDataset dataset;
  align::AlignmentResult alignment;
};

/// DTW-aligns scans to odometry and builds the fingerprint dataset.
AlignedSurvey align_and_build(std::span<const WifiScan> scans, std::span<const OdometrySample> odometry);

}  // namespace wifiloc
