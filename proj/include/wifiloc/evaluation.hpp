#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wifiloc/core.hpp"
#include "wifiloc/localizer.hpp"

namespace wifiloc::eval {

using nn::Position;

/// Localization error summary. The per-sample error is the Euclidean distance
/// between predicted and true position; MAE and RMSE aggregate that distance.
struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n_test = 0;
  std::size_t rp_count = 0;
  double rp_per_m2 = 0.0;
  std::vector<double> per_sample_errors;
};

EvalReport metrics(std::span<const Position> predictions, std::span<const Position> truths);

/// Fixed held-out split: (train, test). `test_fraction` of the rows (rounded,
/// at least one) go to test, chosen by a seeded shuffle.
std::pair<FingerprintDataset, FingerprintDataset> holdout_split(const FingerprintDataset& ds,
                                                                double test_fraction, std::uint64_t seed);

inline constexpr double kStratumCellM = 0.66;

/// Spatially stratified subsample: rows are binned into square cells and each
/// cell keeps floor or ceil of fraction * its count, totalling round(fraction * N).
FingerprintDataset stratified_subsample(const FingerprintDataset& ds, double fraction, std::uint64_t seed,
                                        double cell_size = kStratumCellM);

struct AblationRow {
  double fraction = 1.0;
  std::size_t rp_count = 0;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;
  std::vector<double> mae_per_seed;
};

struct AblationConfig {
  std::vector<double> fractions{1.0, 0.5, 0.25};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
};

/// Trains on stratified subsamples of a fixed training split and scores each
/// model on the same held-out test rows.
std::vector<AblationRow> ablate(const FingerprintDataset& ds, const AblationConfig& acfg,
                                const nn::TrainConfig& tcfg);

/// Mean |RSSI difference| between each grid RP and its nearest robot-survey
/// row, over APs present in both rows.
double ground_truth_consistency(const FingerprintDataset& robot_ds, const FingerprintDataset& grid_ds);

struct DensityReport {
  double rp_per_m2 = 0.0;
  double rp_per_s = 0.0;
};

DensityReport density_report(std::size_t rows, double area_m2, double duration_s);
inline DensityReport density_report(const FingerprintDataset& ds, double area_m2, double duration_s) {
  return density_report(ds.rows.size(), area_m2, duration_s);
}

// Report export.
std::string report_json(const EvalReport& r);
std::string report_text(const EvalReport& r);
std::string ablation_text(const std::vector<AblationRow>& rows);
std::string ablation_json(const std::vector<AblationRow>& rows);

}  // namespace wifiloc::eval
