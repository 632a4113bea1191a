#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "wifiloc/core.hpp"

namespace wifiloc::sim {

struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  /// Closed containment: points on the edge count as inside.
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

struct Floorplan {
  double width = 0.0;
  double height = 0.0;
  std::vector<Rect> obstacles;

  void validate() const;
  bool in_bounds(double x, double y) const;
  bool blocked(double x, double y) const;
  /// True when the segment p->q touches any obstacle.
  bool segment_blocked(double px, double py, double qx, double qy) const;
  double area() const { return width * height; }
};

struct AccessPointSpec {
  ApId id;
  Pose2D position;
  double tx_power_dbm = -40.0;
  double path_loss_exponent = 2.5;
  double detection_floor_dbm = -95.0;

  void validate() const;
};

struct OdometryNoise {
  double drift_per_m = 0.0;  // per-axis drift stddev after one metre travelled (random walk)
  double jitter_m = 0.0;     // independent per-sample stddev
};

struct SurveyConfig {
  double odometry_rate_hz = 100.0;
  double scan_rate_hz = 1.0;
  double scan_start_offset_s = 0.0;
  double shadowing_sigma_db = 0.0;
  OdometryNoise odom_noise;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SurveyRecording {
  std::vector<OdometrySample> true_poses;
  std::vector<OdometrySample> odometry;
  std::vector<WifiScan> scans;
  SurveyConfig config;
};

/// A scan taken at a known (logged) position, as in a manual grid survey.
struct GridObservation {
  double x = 0.0;
  double y = 0.0;
  WifiScan scan;

  friend bool operator==(const GridObservation&, const GridObservation&) = default;
};

inline constexpr double kReferenceDistanceM = 1.0;

/// Received power from `ap` at `p` under log-distance path loss with
/// log-normal shadowing. Returns nullopt below the AP's detection floor.
std::optional<double> rssi_at(const AccessPointSpec& ap, const Pose2D& p, double shadowing_sigma_db,
                              std::mt19937_64& rng);

/// One scan at pose `p`: every AP above its detection floor.
WifiScan scan_at(const std::vector<AccessPointSpec>& aps, const Pose2D& p, double t,
                 double shadowing_sigma_db, std::mt19937_64& rng);

/// Drive through `waypoints` at constant `speed_mps`, recording odometry at
/// cfg.odometry_rate_hz and WiFi scans at cfg.scan_rate_hz.
SurveyRecording drive_continuous(const Floorplan& plan, const std::vector<AccessPointSpec>& aps,
                                 const std::vector<Pose2D>& waypoints, double speed_mps,
                                 const SurveyConfig& cfg);

/// Polyline length of the waypoint path.
double path_length(const std::vector<Pose2D>& waypoints);

/// Free lattice points k*spacing (origin at the floorplan corner).
std::vector<Pose2D> grid_points(const Floorplan& plan, double spacing);

std::vector<GridObservation> survey_grid_observations(const Floorplan& plan,
                                                      const std::vector<AccessPointSpec>& aps,
                                                      double spacing, int dwell_scans,
                                                      const SurveyConfig& cfg);

/// Stop-and-scan survey over the lattice; positions are logged exactly.
FingerprintDataset survey_grid(const Floorplan& plan, const std::vector<AccessPointSpec>& aps,
                               double spacing, int dwell_scans, const SurveyConfig& cfg);

/// `count` scans at uniformly random free positions at least `margin_m` from
/// the walls, with their true poses.
std::vector<GridObservation> random_test_scans(const Floorplan& plan,
                                               const std::vector<AccessPointSpec>& aps,
                                               std::size_t count, double shadowing_sigma_db,
                                               std::uint64_t seed, double margin_m = 0.0);

}  // namespace wifiloc::sim
