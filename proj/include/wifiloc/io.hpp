#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wifiloc/core.hpp"
#include "wifiloc/dataset.hpp"
#include "wifiloc/simulator.hpp"

namespace wifiloc::io {

/// Shortest fixed-notation text that parses back to `value`, padded with
/// trailing zeros to at least `min_decimals` fractional digits.
std::string format_double(double value, int min_decimals);
/// Strict full-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);

// Fingerprint CSV: `timestamp,x_pos,y_pos,<mac...>`, `NaN` for missing RSSI.
void write_fingerprint_csv(const FingerprintDataset& ds, std::ostream& out);
FingerprintDataset read_fingerprint_csv(std::istream& in);

// Scan log: one `{"t": s, "rssi": {"<mac>": dBm, ...}}` per line.
void write_scan_log(const std::vector<WifiScan>& scans, std::ostream& out);
std::vector<WifiScan> read_scan_log(std::istream& in);

// Odometry CSV: `t,x,y,theta`.
void write_odometry_csv(const std::vector<OdometrySample>& samples, std::ostream& out);
std::vector<OdometrySample> read_odometry_csv(std::istream& in);

// Grid ground truth: JSON array of `{"x": m, "y": m, "scan": {"t": s, "rssi": {...}}}`.
void write_grid_truth(const std::vector<sim::GridObservation>& obs, std::ostream& out);
std::vector<sim::GridObservation> read_grid_truth(std::istream& in);

// Heatmap CSV: `col,row,center_x,center_y,mean_rssi,count`.
void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out);

/// Opens `path` for reading/writing; DataError on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace wifiloc::io
