#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wifiloc/alignment.hpp"
#include "wifiloc/core.hpp"
#include "wifiloc/simulator.hpp"

namespace wifiloc {

inline constexpr double kMissingRssiFillDbm = -100.0;
inline constexpr double kDefaultHeatmapCellM = 0.33;

/// One row per scan: scan timestamp, matched odometry x/y, RSSI per AP in the
/// union of all APs seen (absent where the scan did not hear the AP).
FingerprintDataset build_dataset(const align::AlignmentResult& alignment, std::span<const WifiScan> scans,
                                 std::span<const OdometrySample> odometry);

/// Dataset from scans with logged positions. Rows are ordered by scan time.
FingerprintDataset dataset_from_observations(std::span<const sim::GridObservation> observations);

/// Inverse of dataset_from_observations for rows that carry at least one reading.
std::vector<sim::GridObservation> observations_from_dataset(const FingerprintDataset& ds);

struct DenseData {
  Eigen::MatrixXd features;  // rows x APs, dBm
  Eigen::MatrixXd targets;   // rows x 2 (x, y)
};

/// Replaces missing RSSI with `fill_dbm`.
DenseData impute(const FingerprintDataset& ds, double fill_dbm = kMissingRssiFillDbm);

/// Subset of rows (in the given index order) with the same columns.
FingerprintDataset select_rows(const FingerprintDataset& ds, std::span<const std::size_t> indices);

struct HeatmapCell {
  double mean_rssi = 0.0;
  std::size_t sample_count = 0;
};

struct HeatmapGrid {
  double cell_size = kDefaultHeatmapCellM;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::map<std::pair<long, long>, HeatmapCell> cells;  // (col, row)

  std::pair<double, double> center(long col, long row) const {
    return {origin_x + (static_cast<double>(col) + 0.5) * cell_size,
            origin_y + (static_cast<double>(row) + 0.5) * cell_size};
  }
};

/// Mean RSSI of `ap` per half-open square cell. Cells without samples are omitted.
HeatmapGrid heatmap(const FingerprintDataset& ds, const ApId& ap, double cell_size = kDefaultHeatmapCellM,
                    double origin_x = 0.0, double origin_y = 0.0);

}  // namespace wifiloc
