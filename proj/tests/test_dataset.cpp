#include <doctest.h>

#include <cmath>
#include <random>

#include "wifiloc/dataset.hpp"
#include "wifiloc/scenario.hpp"

using namespace wifiloc;

namespace {

const ApId kA = ApId::parse("02:00:00:00:00:0a");
const ApId kB = ApId::parse("02:00:00:00:00:0b");

FingerprintDataset random_dataset(std::mt19937_64& rng, std::size_t rows, std::size_t aps) {
  std::uniform_real_distribution<double> pos(0.0, 10.0);
  std::uniform_real_distribution<double> rssi(-95.0, -30.0);
  std::bernoulli_distribution present(0.7);
  FingerprintDataset ds;
  for (std::size_t c = 0; c < aps; ++c) ds.ap_columns.push_back(ApId::from_u64(0x020000000000ULL + c));
  double t = 1.7e9;
  for (std::size_t r = 0; r < rows; ++r) {
    t += 1.0;
    FingerprintRow row{t, pos(rng), pos(rng), {}};
    for (std::size_t c = 0; c < aps; ++c) row.rssi.push_back(present(rng) ? std::optional<double>(rssi(rng)) : std::nullopt);
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

}  // namespace

TEST_CASE("build_dataset takes the union of APs and leaves gaps absent") {
  const std::vector<WifiScan> scans{{0.5, {{kA, -50.0}}}, {1.5, {{kB, -70.0}}}};
  const std::vector<OdometrySample> odom{{0.0, {0.0, 0.0, 0.0}}, {0.5, {1.0, 2.0, 0.0}}, {1.5, {3.0, 4.0, 0.0}}};
  const auto al = align::match_scans(scans, odom);
  const auto ds = build_dataset(al, scans, odom);
  REQUIRE(ds.ap_columns == std::vector<ApId>{kA, kB});
  REQUIRE(ds.rows.size() == 2);
  CHECK(ds.rows[0].t == 0.5);
  CHECK(ds.rows[0].x == 1.0);
  CHECK(ds.rows[0].y == 2.0);
  CHECK(ds.rows[0].rssi == std::vector<std::optional<double>>{-50.0, std::nullopt});
  CHECK(ds.rows[1].rssi == std::vector<std::optional<double>>{std::nullopt, -70.0});
}

TEST_CASE("build_dataset rejects corrupt alignments") {
  const std::vector<WifiScan> scans{{0.5, {{kA, -50.0}}}};
  const std::vector<OdometrySample> odom{{0.0, {0.0, 0.0, 0.0}}};
  align::AlignmentResult bad;
  bad.matches = {{0, 5, false}};
  CHECK_THROWS_WITH_AS(build_dataset(bad, scans, odom), "corrupt alignment", DataError);
  bad.matches = {};
  CHECK_THROWS_WITH_AS(build_dataset(bad, scans, odom), "corrupt alignment", DataError);
}

TEST_CASE("reference survey yields one row per scan") {
  const auto sc = reference_scenario();
  const auto rec = simulate_continuous(sc);
  CHECK(rec.scans.size() == 320);
  const auto built = align_and_build(rec.scans, rec.odometry);
  CHECK(built.dataset.rows.size() == 320);
  CHECK(built.dataset.ap_columns.size() == 8);
}

TEST_CASE("impute") {
  FingerprintDataset ds;
  ds.ap_columns = {kA, kB};
  ds.rows = {{0.0, 1.0, 2.0, {std::nullopt, std::nullopt}},
             {1.0, 3.0, 4.0, {-55.0, -65.0}},
             {2.0, 5.0, 6.0, {-60.0, std::nullopt}}};
  const auto dense = impute(ds);
  CHECK(dense.features.rows() == 3);
  CHECK(dense.features.cols() == 2);
  CHECK(dense.features(0, 0) == -100.0);
  CHECK(dense.features(0, 1) == -100.0);
  CHECK(dense.features(1, 0) == -55.0);
  CHECK(dense.features(1, 1) == -65.0);
  CHECK(dense.features(2, 0) == -60.0);
  CHECK(dense.features(2, 1) == -100.0);
  CHECK(dense.targets(2, 0) == 5.0);
  CHECK(dense.targets(2, 1) == 6.0);
  CHECK(impute(ds, -90.0).features(0, 0) == -90.0);
}

TEST_CASE("impute never alters present values") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ds = random_dataset(rng, 40, 6);
    const auto dense = impute(ds);
    REQUIRE(dense.features.rows() == 40);
    REQUIRE(dense.features.cols() == 6);
    for (std::size_t r = 0; r < ds.rows.size(); ++r)
      for (std::size_t c = 0; c < ds.ap_columns.size(); ++c) {
        const double v = dense.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        CHECK(v == ds.rows[r].rssi[c].value_or(-100.0));
      }
  }
}

TEST_CASE("heatmap averages per half-open cell") {
  FingerprintDataset ds;
  ds.ap_columns = {kA, kB};
  ds.rows = {{0.0, 0.10, 0.10, {-50.0, std::nullopt}},
             {1.0, 0.20, 0.20, {-70.0, std::nullopt}},
             {2.0, 0.33, 0.10, {-40.0, -10.0}},
             {3.0, 0.50, 0.50, {std::nullopt, -20.0}}};
  const auto grid = heatmap(ds, kA, 0.33);
  REQUIRE(grid.cells.size() == 2);
  CHECK(grid.cells.at({0, 0}).mean_rssi == -60.0);
  CHECK(grid.cells.at({0, 0}).sample_count == 2);
  // x = 0.33 sits on the boundary and belongs to the higher cell.
  CHECK(grid.cells.at({1, 0}).sample_count == 1);
  CHECK(grid.center(1, 0).first == doctest::Approx(0.495));
  CHECK_THROWS_WITH_AS(heatmap(ds, ApId::parse("02:00:00:00:00:ff")), "AP not in dataset", DataError);
  CHECK_THROWS_AS(heatmap(ds, kA, 0.0), DataError);
}

TEST_CASE("heatmap count conservation") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ds = random_dataset(rng, 100, 3);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto grid = heatmap(ds, ds.ap_columns[c], 0.33 + 0.1 * trial);
      std::size_t cells_total = 0;
      for (const auto& [_, cell] : grid.cells) {
        CHECK(cell.sample_count >= 1);
        cells_total += cell.sample_count;
      }
      std::size_t present = 0;
      for (const auto& r : ds.rows) present += r.rssi[c].has_value() ? 1 : 0;
      CHECK(cells_total == present);
    }
  }
}

TEST_CASE("heatmap of a constant-RSSI ring is constant") {
  // sigma = 0 and every grid point at the same distance from the AP.
  sim::AccessPointSpec ap{kA, {5.0, 5.0, 0.0}};
  std::mt19937_64 rng(0);
  std::vector<sim::GridObservation> obs;
  for (int k = 0; k < 72; ++k) {
    const double th = k * 5.0 * M_PI / 180.0;
    const Pose2D p{5.0 + 3.0 * std::cos(th), 5.0 + 3.0 * std::sin(th), 0.0};
    obs.push_back({p.x, p.y, sim::scan_at({ap}, p, k, 0.0, rng)});
  }
  const auto ds = dataset_from_observations(obs);
  const auto grid = heatmap(ds, kA, 0.33);
  const double expected = -40.0 - 25.0 * std::log10(3.0);
  for (const auto& [_, cell] : grid.cells) CHECK(cell.mean_rssi == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("observations round-trip through a dataset") {
  const std::vector<sim::GridObservation> obs{{1.0, 2.0, {0.0, {{kA, -50.0}}}}, {3.0, 4.0, {1.0, {{kB, -60.0}}}}};
  CHECK(observations_from_dataset(dataset_from_observations(obs)) == obs);
}
