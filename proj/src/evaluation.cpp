#include "wifiloc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "wifiloc/dataset.hpp"

namespace wifiloc::eval {

namespace {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<Position> row_positions(const FingerprintDataset& ds) {
  std::vector<Position> out;
  out.reserve(ds.rows.size());
  for (const auto& r : ds.rows) out.push_back({r.x, r.y});
  return out;
}

}  // namespace

EvalReport metrics(std::span<const Position> predictions, std::span<const Position> truths) {
  if (predictions.empty()) throw DataError("no predictions to evaluate");
  if (predictions.size() != truths.size())
    throw DataError("prediction/truth length mismatch: " + std::to_string(predictions.size()) + " vs " +
                    std::to_string(truths.size()));
  EvalReport r;
  r.n_test = predictions.size();
  r.per_sample_errors.reserve(r.n_test);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < r.n_test; ++i) {
    const double e = std::hypot(predictions[i].x - truths[i].x, predictions[i].y - truths[i].y);
    r.per_sample_errors.push_back(e);
    sum += e;
    sum_sq += e * e;
  }
  const auto n = static_cast<double>(r.n_test);
  r.mae = sum / n;
  r.rmse = std::sqrt(sum_sq / n);
  return r;
}

std::pair<FingerprintDataset, FingerprintDataset> holdout_split(const FingerprintDataset& ds,
                                                                double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DataError("test_fraction must lie in (0, 1)");
  if (ds.rows.size() < 2) throw DataError("need at least two rows to split");
  std::vector<std::size_t> idx(ds.rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_stream(seed, 31);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * test_fraction)), 1, idx.size() - 1);
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {select_rows(ds, train), select_rows(ds, test)};
}

FingerprintDataset stratified_subsample(const FingerprintDataset& ds, double fraction, std::uint64_t seed,
                                        double cell_size) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("fraction must lie in (0, 1]");
  if (!(cell_size > 0.0)) throw DataError("cell size must be positive");
  std::map<std::pair<long, long>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& r = ds.rows[i];
    cells[{static_cast<long>(std::floor(r.x / cell_size)), static_cast<long>(std::floor(r.y / cell_size))}].push_back(i);
  }

  struct Quota {
    std::vector<std::size_t>* members;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (auto& [_, members] : cells) {
    const double exact = fraction * static_cast<double>(members.size());
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({&members, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.rows.size())));
  // Largest remainder; stable sort keeps cell-key order on ties.
  std::vector<std::size_t> by_remainder(quotas.size());
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
  for (std::size_t k = 0; k < by_remainder.size() && assigned < target; ++k) {
    auto& q = quotas[by_remainder[k]];
    if (q.remainder <= 0.0) break;
    ++q.take;
    ++assigned;
  }

  auto rng = make_stream(seed, 41);
  std::vector<std::size_t> keep;
  keep.reserve(assigned);
  for (auto& q : quotas) {
    std::vector<std::size_t> members = *q.members;
    std::shuffle(members.begin(), members.end(), rng);
    keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q.take));
  }
  std::sort(keep.begin(), keep.end());
  return select_rows(ds, keep);
}

std::vector<AblationRow> ablate(const FingerprintDataset& ds, const AblationConfig& acfg,
                                const nn::TrainConfig& tcfg) {
  if (acfg.fractions.empty() || acfg.seeds.empty()) throw DataError("ablation needs fractions and seeds");
  for (const double f : acfg.fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw DataError("fraction must lie in (0, 1]");
  }
  // The test split is fixed once, before any subsampling.
  const auto [train_full, test] = holdout_split(ds, acfg.test_fraction, acfg.split_seed);
  const auto truths = row_positions(test);

  std::vector<AblationRow> table;
  for (const double fraction : acfg.fractions) {
    AblationRow row;
    row.fraction = fraction;
    double rmse_sum = 0.0;
    for (const auto seed : acfg.seeds) {
      const auto subset = stratified_subsample(train_full, fraction, seed);
      if (subset.rows.size() < static_cast<std::size_t>(tcfg.batch_size))
        throw DataError("fraction " + std::to_string(fraction) + " leaves " + std::to_string(subset.rows.size()) +
                        " rows, fewer than the batch size");
      row.rp_count = subset.rows.size();
      auto cfg = tcfg;
      cfg.rng_seed = seed;
      const auto trained = nn::train(subset, cfg);
      const auto report = metrics(nn::predict_rows(trained.model, test), truths);
      row.mae_per_seed.push_back(report.mae);
      rmse_sum += report.rmse;
    }
    row.mean_mae = std::accumulate(row.mae_per_seed.begin(), row.mae_per_seed.end(), 0.0) /
                   static_cast<double>(row.mae_per_seed.size());
    row.mean_rmse = rmse_sum / static_cast<double>(acfg.seeds.size());
    table.push_back(std::move(row));
  }
  return table;
}

double ground_truth_consistency(const FingerprintDataset& robot_ds, const FingerprintDataset& grid_ds) {
  if (robot_ds.rows.empty() || grid_ds.rows.empty()) throw DataError("datasets must be non-empty");
  std::vector<std::pair<std::size_t, std::size_t>> shared;  // (grid column, robot column)
  for (std::size_t g = 0; g < grid_ds.ap_columns.size(); ++g) {
    if (auto r = robot_ds.column_of(grid_ds.ap_columns[g])) shared.emplace_back(g, *r);
  }
  if (shared.empty()) throw DataError("no shared APs");

  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& grow : grid_ds.rows) {
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < robot_ds.rows.size(); ++i) {
      const double d2 = std::pow(robot_ds.rows[i].x - grow.x, 2) + std::pow(robot_ds.rows[i].y - grow.y, 2);
      if (d2 < best) {
        best = d2;
        nearest = i;
      }
    }
    const auto& rrow = robot_ds.rows[nearest];
    double diff = 0.0;
    std::size_t n = 0;
    for (const auto& [g, r] : shared) {
      if (grow.rssi[g] && rrow.rssi[r]) {
        diff += std::abs(*grow.rssi[g] - *rrow.rssi[r]);
        ++n;
      }
    }
    // An RP with no AP heard in both rows contributes nothing.
    if (n == 0) continue;
    total += diff / static_cast<double>(n);
    ++counted;
  }
  if (counted == 0) throw DataError("no shared APs");
  return total / static_cast<double>(counted);
}

DensityReport density_report(std::size_t rows, double area_m2, double duration_s) {
  if (!(area_m2 > 0.0) || !(duration_s > 0.0)) throw DataError("area and duration must be positive");
  const auto n = static_cast<double>(rows);
  return {n / area_m2, n / duration_s};
}

std::string report_json(const EvalReport& r) {
  nlohmann::json j{{"rmse", r.rmse},
                   {"mae", r.mae},
                   {"n_test", r.n_test},
                   {"rp_count", r.rp_count},
                   {"rp_per_m2", r.rp_per_m2},
                   {"error_definition", "euclidean distance per sample, then mean (MAE) / root mean square (RMSE)"},
                   {"per_sample_errors", r.per_sample_errors}};
  return j.dump(2);
}

std::string report_text(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "per-sample error = euclidean distance (m)\n";
  os << std::left << std::setw(12) << "n_test" << r.n_test << '\n';
  os << std::setw(12) << "rmse_m" << r.rmse << '\n';
  os << std::setw(12) << "mae_m" << r.mae << '\n';
  os << std::setw(12) << "rp_count" << r.rp_count << '\n';
  os << std::setw(12) << "rp_per_m2" << r.rp_per_m2 << '\n';
  return os.str();
}

std::string ablation_text(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::right << std::setw(10) << "fraction" << std::setw(10) << "rp_count" << std::setw(12) << "mean_mae"
     << std::setw(12) << "mean_rmse" << std::setw(12) << "vs_first" << '\n';
  const double base = rows.empty() ? 0.0 : rows.front().mean_mae;
  for (const auto& r : rows) {
    os << std::setw(10) << r.fraction << std::setw(10) << r.rp_count << std::setw(12) << r.mean_mae << std::setw(12)
       << r.mean_rmse;
    if (base > 0.0) {
      os << std::setw(11) << std::showpos << 100.0 * (r.mean_mae / base - 1.0) << std::noshowpos << '%';
    }
    os << '\n';
  }
  return os.str();
}

std::string ablation_json(const std::vector<AblationRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"fraction", r.fraction},
                   {"rp_count", r.rp_count},
                   {"mean_mae", r.mean_mae},
                   {"mean_rmse", r.mean_rmse},
                   {"mae_per_seed", r.mae_per_seed}});
  }
  return arr.dump(2);
}

}  // namespace wifiloc::eval
