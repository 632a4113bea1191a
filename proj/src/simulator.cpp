#include "wifiloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wifiloc/dataset.hpp"

namespace wifiloc::sim {

namespace {

constexpr double kEps = 1e-9;

double wrap_heading(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w >= std::numbers::pi) w -= 2.0 * std::numbers::pi;
  return w;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// Liang-Barsky clip of p->q against a closed rectangle.
bool segment_hits_rect(double px, double py, double qx, double qy, const Rect& r) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = qx - px;
  const double dy = qy - py;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {px - r.x_min, r.x_max - px, py - r.y_min, r.y_max - py};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

// Constant-speed traversal of a polyline.
class Polyline {
 public:
  explicit Polyline(const std::vector<Pose2D>& pts) : pts_(pts) {
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      cumulative_.push_back(cumulative_.back() +
                            std::hypot(pts_[i].x - pts_[i - 1].x, pts_[i].y - pts_[i - 1].y));
    }
  }

  double length() const { return cumulative_.back(); }

  Pose2D at(double s) const {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t seg = static_cast<std::size_t>(it - cumulative_.begin());
    seg = std::clamp<std::size_t>(seg, 1, pts_.size() - 1);
    // Skip zero-length segments so the heading stays defined.
    while (seg + 1 < pts_.size() && cumulative_[seg] - cumulative_[seg - 1] <= 0.0) ++seg;
    const auto& a = pts_[seg - 1];
    const auto& b = pts_[seg];
    const double len = cumulative_[seg] - cumulative_[seg - 1];
    const double u = len > 0.0 ? std::clamp((s - cumulative_[seg - 1]) / len, 0.0, 1.0) : 0.0;
    return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), wrap_heading(std::atan2(b.y - a.y, b.x - a.x))};
  }

 private:
  std::vector<Pose2D> pts_;
  std::vector<double> cumulative_;
};

}  // namespace

void Floorplan::validate() const {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height))
    throw DataError("floorplan dimensions must be positive");
  for (const auto& o : obstacles) {
    if (!(o.x_min <= o.x_max && o.y_min <= o.y_max))
      throw DataError("obstacle rectangle has inverted bounds");
    if (o.x_min < 0.0 || o.y_min < 0.0 || o.x_max > width || o.y_max > height)
      throw DataError("obstacle lies outside the floorplan");
  }
}

bool Floorplan::in_bounds(double x, double y) const {
  return x >= 0.0 && y >= 0.0 && x <= width && y <= height;
}

bool Floorplan::blocked(double x, double y) const {
  return std::any_of(obstacles.begin(), obstacles.end(), [&](const Rect& r) { return r.contains(x, y); });
}

bool Floorplan::segment_blocked(double px, double py, double qx, double qy) const {
  return std::any_of(obstacles.begin(), obstacles.end(),
                     [&](const Rect& r) { return segment_hits_rect(px, py, qx, qy, r); });
}

void AccessPointSpec::validate() const {
  if (!(path_loss_exponent >= 1.5 && path_loss_exponent <= 6.0))
    throw DataError("AP " + id.str() + ": path loss exponent outside [1.5, 6]");
  if (!(detection_floor_dbm <= tx_power_dbm))
    throw DataError("AP " + id.str() + ": detection floor above transmit power");
}

void SurveyConfig::validate() const {
  if (!(scan_rate_hz > 0.0) || !(odometry_rate_hz > scan_rate_hz))
    throw DataError("survey rates must satisfy odometry_rate_hz > scan_rate_hz > 0");
  if (!(shadowing_sigma_db >= 0.0) || !(odom_noise.drift_per_m >= 0.0) || !(odom_noise.jitter_m >= 0.0))
    throw DataError("noise parameters must be non-negative");
  if (!std::isfinite(scan_start_offset_s)) throw DataError("scan start offset must be finite");
}

std::optional<double> rssi_at(const AccessPointSpec& ap, const Pose2D& p, double shadowing_sigma_db,
                              std::mt19937_64& rng) {
  const double d = std::hypot(p.x - ap.position.x, p.y - ap.position.y);
  double rssi = ap.tx_power_dbm -
                10.0 * ap.path_loss_exponent * std::log10(std::max(d, kReferenceDistanceM) / kReferenceDistanceM);
  if (shadowing_sigma_db > 0.0) {
    std::normal_distribution<double> shadow(0.0, shadowing_sigma_db);
    rssi += shadow(rng);
  }
  if (rssi < ap.detection_floor_dbm) return std::nullopt;
  return rssi;
}

WifiScan scan_at(const std::vector<AccessPointSpec>& aps, const Pose2D& p, double t,
                 double shadowing_sigma_db, std::mt19937_64& rng) {
  WifiScan scan{t, {}};
  for (const auto& ap : aps) {
    if (auto v = rssi_at(ap, p, shadowing_sigma_db, rng)) scan.readings.emplace(ap.id, *v);
  }
  return scan;
}

double path_length(const std::vector<Pose2D>& waypoints) {
  if (waypoints.empty()) return 0.0;
  return Polyline(waypoints).length();
}

SurveyRecording drive_continuous(const Floorplan& plan, const std::vector<AccessPointSpec>& aps,
                                 const std::vector<Pose2D>& waypoints, double speed_mps,
                                 const SurveyConfig& cfg) {
  plan.validate();
  cfg.validate();
  for (const auto& ap : aps) ap.validate();
  if (!(speed_mps > 0.0)) throw DataError("speed must be positive");
  if (waypoints.size() < 2) throw DataError("need at least two waypoints");
  for (const auto& w : waypoints) {
    if (!plan.in_bounds(w.x, w.y)) throw DataError("waypoint outside floorplan");
    if (plan.blocked(w.x, w.y)) throw DataError("unreachable waypoint");
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const auto& a = waypoints[i - 1];
    const auto& b = waypoints[i];
    if (plan.segment_blocked(a.x, a.y, b.x, b.y)) throw DataError("path blocked");
  }

  const Polyline path(waypoints);
  const double duration = path.length() / speed_mps;
  const auto n_odom = static_cast<std::size_t>(std::floor(duration * cfg.odometry_rate_hz + kEps)) + 1;

  auto odom_rng = make_stream(cfg.rng_seed, 1);
  auto shadow_rng = make_stream(cfg.rng_seed, 2);
  std::normal_distribution<double> unit(0.0, 1.0);

  SurveyRecording rec;
  rec.config = cfg;
  rec.true_poses.reserve(n_odom);
  rec.odometry.reserve(n_odom);
  double drift_x = 0.0;
  double drift_y = 0.0;
  Pose2D prev;
  for (std::size_t k = 0; k < n_odom; ++k) {
    const double t = static_cast<double>(k) / cfg.odometry_rate_hz;
    const Pose2D truth = path.at(speed_mps * t);
    if (k > 0 && cfg.odom_noise.drift_per_m > 0.0) {
      // Variance grows linearly with distance travelled.
      const double step = std::hypot(truth.x - prev.x, truth.y - prev.y);
      const double sd = cfg.odom_noise.drift_per_m * std::sqrt(step);
      drift_x += sd * unit(odom_rng);
      drift_y += sd * unit(odom_rng);
    }
    Pose2D noisy = truth;
    noisy.x += drift_x;
    noisy.y += drift_y;
    if (cfg.odom_noise.jitter_m > 0.0) {
      noisy.x += cfg.odom_noise.jitter_m * unit(odom_rng);
      noisy.y += cfg.odom_noise.jitter_m * unit(odom_rng);
    }
    rec.true_poses.push_back({t, truth});
    rec.odometry.push_back({t, noisy});
    prev = truth;
  }

  const double t_end = rec.true_poses.back().t;
  for (std::size_t k = 0;; ++k) {
    const double t = cfg.scan_start_offset_s + static_cast<double>(k) / cfg.scan_rate_hz;
    if (t > t_end + kEps) break;
    if (t < 0.0) continue;
    WifiScan scan = scan_at(aps, path.at(speed_mps * t), t, cfg.shadowing_sigma_db, shadow_rng);
    // A scan that hears nothing is not recorded.
    if (!scan.readings.empty()) rec.scans.push_back(std::move(scan));
  }
  return rec;
}

std::vector<Pose2D> grid_points(const Floorplan& plan, double spacing) {
  plan.validate();
  if (!(spacing > 0.0)) throw DataError("grid spacing must be positive");
  if (spacing > plan.width && spacing > plan.height) throw DataError("degenerate grid");
  const auto nx = static_cast<std::size_t>(std::floor(plan.width / spacing + kEps)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor(plan.height / spacing + kEps)) + 1;
  std::vector<Pose2D> pts;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = static_cast<double>(ix) * spacing;
      const double y = static_cast<double>(iy) * spacing;
      if (!plan.blocked(x, y)) pts.push_back({x, y, 0.0});
    }
  }
  return pts;
}

std::vector<GridObservation> survey_grid_observations(const Floorplan& plan,
                                                      const std::vector<AccessPointSpec>& aps,
                                                      double spacing, int dwell_scans,
                                                      const SurveyConfig& cfg) {
  cfg.validate();
  for (const auto& ap : aps) ap.validate();
  if (dwell_scans < 1) throw DataError("dwell_scans must be at least 1");
  const auto pts = grid_points(plan, spacing);
  auto shadow_rng = make_stream(cfg.rng_seed, 3);
  std::vector<GridObservation> out;
  out.reserve(pts.size() * static_cast<std::size_t>(dwell_scans));
  std::size_t scan_index = 0;
  for (const auto& p : pts) {
    for (int d = 0; d < dwell_scans; ++d, ++scan_index) {
      const double t = cfg.scan_start_offset_s + static_cast<double>(scan_index) / cfg.scan_rate_hz;
      out.push_back({p.x, p.y, scan_at(aps, p, t, cfg.shadowing_sigma_db, shadow_rng)});
    }
  }
  return out;
}

FingerprintDataset survey_grid(const Floorplan& plan, const std::vector<AccessPointSpec>& aps,
                               double spacing, int dwell_scans, const SurveyConfig& cfg) {
  return dataset_from_observations(survey_grid_observations(plan, aps, spacing, dwell_scans, cfg));
}

std::vector<GridObservation> random_test_scans(const Floorplan& plan,
                                               const std::vector<AccessPointSpec>& aps,
                                               std::size_t count, double shadowing_sigma_db,
                                               std::uint64_t seed, double margin_m) {
  plan.validate();
  if (!(margin_m >= 0.0) || 2.0 * margin_m >= plan.width || 2.0 * margin_m >= plan.height)
    throw DataError("test margin leaves no free area");
  auto rng = make_stream(seed, 4);
  std::uniform_real_distribution<double> ux(margin_m, plan.width - margin_m);
  std::uniform_real_distribution<double> uy(margin_m, plan.height - margin_m);
  std::vector<GridObservation> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 1)) throw DataError("floorplan has no free space for test scans");
    const Pose2D p{ux(rng), uy(rng), 0.0};
    if (plan.blocked(p.x, p.y)) continue;
    auto scan = scan_at(aps, p, static_cast<double>(out.size()), shadowing_sigma_db, rng);
    if (scan.readings.empty()) continue;
    out.push_back({p.x, p.y, std::move(scan)});
  }
  return out;
}

}  // namespace wifiloc::sim
