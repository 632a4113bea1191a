#include "wifiloc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace wifiloc {

namespace {

std::vector<ApId> union_columns(std::span<const WifiScan> scans) {
  std::set<ApId> ids;
  for (const auto& s : scans) {
    for (const auto& [ap, _] : s.readings) ids.insert(ap);
  }
  if (ids.empty()) return {};
  return canonical_ap_order(ids);
}

std::vector<std::optional<double>> slots_for(const WifiScan& scan, const std::vector<ApId>& columns) {
  std::vector<std::optional<double>> out(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (auto it = scan.readings.find(columns[c]); it != scan.readings.end()) out[c] = it->second;
  }
  return out;
}

}  // namespace

FingerprintDataset build_dataset(const align::AlignmentResult& alignment, std::span<const WifiScan> scans,
                                 std::span<const OdometrySample> odometry) {
  if (alignment.matches.size() != scans.size()) throw DataError("corrupt alignment");
  FingerprintDataset ds;
  ds.ap_columns = union_columns(scans);
  ds.rows.reserve(scans.size());
  for (const auto& match : alignment.matches) {
    if (match.scan_index >= scans.size() || match.odometry_index >= odometry.size())
      throw DataError("corrupt alignment");
    const auto& scan = scans[match.scan_index];
    const auto& pose = odometry[match.odometry_index].pose;
    ds.rows.push_back({scan.t, pose.x, pose.y, slots_for(scan, ds.ap_columns)});
  }
  ds.validate();
  return ds;
}

FingerprintDataset dataset_from_observations(std::span<const sim::GridObservation> observations) {
  std::vector<WifiScan> scans;
  scans.reserve(observations.size());
  for (const auto& o : observations) scans.push_back(o.scan);
  FingerprintDataset ds;
  ds.ap_columns = union_columns(scans);

  std::vector<std::size_t> order(observations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return observations[a].scan.t < observations[b].scan.t; });
  for (const auto i : order) {
    const auto& o = observations[i];
    ds.rows.push_back({o.scan.t, o.x, o.y, slots_for(o.scan, ds.ap_columns)});
  }
  ds.validate();
  return ds;
}

std::vector<sim::GridObservation> observations_from_dataset(const FingerprintDataset& ds) {
  std::vector<sim::GridObservation> out;
  out.reserve(ds.rows.size());
  for (const auto& row : ds.rows) {
    sim::GridObservation o{row.x, row.y, {row.t, {}}};
    for (std::size_t c = 0; c < ds.ap_columns.size(); ++c) {
      if (row.rssi[c]) o.scan.readings.emplace(ds.ap_columns[c], *row.rssi[c]);
    }
    out.push_back(std::move(o));
  }
  return out;
}

DenseData impute(const FingerprintDataset& ds, double fill_dbm) {
  const auto n = static_cast<Eigen::Index>(ds.rows.size());
  const auto p = static_cast<Eigen::Index>(ds.ap_columns.size());
  DenseData out{Eigen::MatrixXd(n, p), Eigen::MatrixXd(n, 2)};
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = ds.rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.rssi.size()) != p) throw DataError("row width does not match AP columns");
    for (Eigen::Index c = 0; c < p; ++c) out.features(r, c) = row.rssi[static_cast<std::size_t>(c)].value_or(fill_dbm);
    out.targets(r, 0) = row.x;
    out.targets(r, 1) = row.y;
  }
  return out;
}

FingerprintDataset select_rows(const FingerprintDataset& ds, std::span<const std::size_t> indices) {
  FingerprintDataset out;
  out.ap_columns = ds.ap_columns;
  out.rows.reserve(indices.size());
  for (const auto i : indices) {
    if (i >= ds.rows.size()) throw DataError("row index out of range");
    out.rows.push_back(ds.rows[i]);
  }
  return out;
}

HeatmapGrid heatmap(const FingerprintDataset& ds, const ApId& ap, double cell_size, double origin_x,
                    double origin_y) {
  if (!(cell_size > 0.0)) throw DataError("cell size must be positive");
  const auto col = ds.column_of(ap);
  if (!col) throw DataError("AP not in dataset");
  HeatmapGrid grid;
  grid.cell_size = cell_size;
  grid.origin_x = origin_x;
  grid.origin_y = origin_y;
  std::map<std::pair<long, long>, double> sums;
  for (const auto& row : ds.rows) {
    const auto& v = row.rssi[*col];
    if (!v) continue;
    const auto key = std::make_pair(static_cast<long>(std::floor((row.x - origin_x) / cell_size)),
                                    static_cast<long>(std::floor((row.y - origin_y) / cell_size)));
    sums[key] += *v;
    ++grid.cells[key].sample_count;
  }
  for (auto& [key, cell] : grid.cells) cell.mean_rssi = sums[key] / static_cast<double>(cell.sample_count);
  return grid;
}

}  // namespace wifiloc
