// wifiloc: command-line driver for the survey -> align -> train -> evaluate pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wifiloc/alignment.hpp"
#include "wifiloc/dataset.hpp"
#include "wifiloc/evaluation.hpp"
#include "wifiloc/io.hpp"
#include "wifiloc/localizer.hpp"
#include "wifiloc/scenario.hpp"

namespace fs = std::filesystem;
using namespace wifiloc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

FingerprintDataset load_dataset(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  try {
    return io::read_fingerprint_csv(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Fingerprint CSV, or grid-truth JSON when the file ends in .json.
FingerprintDataset load_any_dataset(const fs::path& path) {
  if (path.extension() == ".json") {
    std::istringstream in(io::read_file(path));
    return dataset_from_observations(io::read_grid_truth(in));
  }
  return load_dataset(path);
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  io::write_file(path, os.str());
}

ScenarioConfig scenario_from_arg(const std::string& arg) {
  if (arg == "reference") return reference_scenario();
  return load_scenario(arg);
}

double timestamp_span(const FingerprintDataset& ds) {
  if (ds.rows.size() < 2) return 0.0;
  return ds.rows.back().t - ds.rows.front().t;
}

// -- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string mode = "continuous";
  std::string out_dir;
  double spacing = 0.0;
  long long seed = -1;
};

int run_simulate(const SimulateArgs& a) {
  auto sc = scenario_from_arg(a.scenario);
  if (a.seed >= 0) sc.survey.rng_seed = static_cast<std::uint64_t>(a.seed);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  if (a.mode == "continuous") {
    const auto rec = simulate_continuous(sc);
    write_with(dir / sc.odometry_file, [&](std::ostream& os) { io::write_odometry_csv(rec.odometry, os); });
    write_with(dir / sc.true_pose_file, [&](std::ostream& os) { io::write_odometry_csv(rec.true_poses, os); });
    write_with(dir / sc.scan_file, [&](std::ostream& os) { io::write_scan_log(rec.scans, os); });
    const auto tests = simulate_test_scans(sc);
    write_with(dir / sc.test_file,
               [&](std::ostream& os) { io::write_fingerprint_csv(dataset_from_observations(tests), os); });
    const double duration = rec.true_poses.back().t - rec.true_poses.front().t;
    std::cout << "mode            continuous\n"
              << "duration_s      " << duration << '\n'
              << "odometry        " << rec.odometry.size() << '\n'
              << "scans           " << rec.scans.size() << '\n'
              << "test_scans      " << tests.size() << '\n';
    return 0;
  }
  const double spacing = a.spacing > 0.0 ? a.spacing : sc.grid_spacings.at(0);
  const auto obs = simulate_grid(sc, spacing);
  write_with(dir / sc.grid_truth_file, [&](std::ostream& os) { io::write_grid_truth(obs, os); });
  const auto points = sim::grid_points(sc.floorplan, spacing).size();
  std::cout << "mode            grid\n"
            << "spacing_m       " << spacing << '\n'
            << "grid_points     " << points << '\n'
            << "scans           " << obs.size() << '\n';
  return 0;
}

// -- align --------------------------------------------------------------------

int run_align(const std::string& odom_path, const std::string& scans_path, const std::string& out_path) {
  std::istringstream odom_in(io::read_file(odom_path));
  std::istringstream scan_in(io::read_file(scans_path));
  const auto odometry = io::read_odometry_csv(odom_in);
  const auto scans = io::read_scan_log(scan_in);
  const auto aligned = align_and_build(scans, odometry);
  write_with(out_path, [&](std::ostream& os) { io::write_fingerprint_csv(aligned.dataset, os); });

  double sum_gap = 0.0;
  double max_gap = 0.0;
  std::size_t outside = 0;
  for (const auto& m : aligned.alignment.matches) {
    const double gap = std::abs(scans[m.scan_index].t - odometry[m.odometry_index].t);
    sum_gap += gap;
    max_gap = std::max(max_gap, gap);
    outside += m.outside_span ? 1 : 0;
  }
  const auto n = aligned.alignment.matches.size();
  std::cout << std::setprecision(10) << "dtw_total_cost  " << aligned.alignment.total_cost << '\n'
            << "path_length     " << aligned.alignment.path.size() << '\n'
            << "matches         " << n << '\n'
            << "mean_dt_s       " << (n ? sum_gap / static_cast<double>(n) : 0.0) << '\n'
            << "max_dt_s        " << max_gap << '\n'
            << "outside_span    " << outside << '\n'
            << "ap_columns      " << aligned.dataset.ap_columns.size() << '\n';
  return 0;
}

// -- train --------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string model_out;
  std::string loss_out;
  long long seed = -1;
  int epochs = 0;
  int batch_size = 0;
  int patience = 0;
  double lr = 0.0;
  double val_fraction = 0.0;
};

int run_train(const TrainArgs& a) {
  const auto ds = load_dataset(a.dataset);
  nn::TrainConfig cfg;
  if (a.seed >= 0) cfg.rng_seed = static_cast<std::uint64_t>(a.seed);
  if (a.epochs > 0) cfg.epochs_max = a.epochs;
  if (a.batch_size > 0) cfg.batch_size = a.batch_size;
  if (a.patience > 0) cfg.patience = a.patience;
  if (a.lr > 0.0) cfg.adam.learning_rate = a.lr;
  if (a.val_fraction > 0.0) cfg.val_fraction = a.val_fraction;
  const auto result = nn::train(ds, cfg);
  write_with(a.model_out, [&](std::ostream& os) { nn::save_model(result.model, os); });
  const std::string loss_path = a.loss_out.empty() ? a.model_out + ".loss.csv" : a.loss_out;
  write_with(loss_path, [&](std::ostream& os) {
    os << "epoch,train_loss,val_loss\n";
    for (const auto& e : result.report.epochs)
      os << e.epoch << ',' << io::format_double(e.train_loss, 1) << ',' << io::format_double(e.val_loss, 1) << '\n';
  });
  std::cout << std::setprecision(6) << "rows            " << ds.rows.size() << '\n'
            << "train_rows      " << result.report.train_rows << '\n'
            << "val_rows        " << result.report.val_rows << '\n'
            << "epochs_run      " << result.report.epochs.size() << '\n'
            << "best_epoch      " << result.report.best_epoch << '\n'
            << "best_val_mse    " << result.report.best_val_loss << '\n'
            << "stopped_early   " << (result.report.stopped_early ? "yes" : "no") << '\n';
  return 0;
}

// -- eval ---------------------------------------------------------------------

int run_eval(const std::string& dataset_path, const std::string& model_path, double area, bool as_json) {
  const auto ds = load_dataset(dataset_path);
  std::istringstream min(io::read_file(model_path));
  const auto model = nn::load_model(min);
  std::vector<nn::Position> truths;
  for (const auto& r : ds.rows) truths.push_back({r.x, r.y});
  auto report = eval::metrics(nn::predict_rows(model, ds), truths);
  report.rp_count = ds.rows.size();
  if (area > 0.0) report.rp_per_m2 = static_cast<double>(ds.rows.size()) / area;
  if (!std::isfinite(report.mae) || !std::isfinite(report.rmse)) throw NumericError("non-finite evaluation metric");
  std::cout << (as_json ? eval::report_json(report) + "\n" : eval::report_text(report));
  return 0;
}

// -- ablate -------------------------------------------------------------------

int run_ablate(const std::string& dataset_path, const std::vector<double>& fractions, int seeds, int epochs,
               bool as_json) {
  const auto ds = load_dataset(dataset_path);
  eval::AblationConfig acfg;
  acfg.fractions = fractions;
  acfg.seeds.clear();
  for (int s = 1; s <= seeds; ++s) acfg.seeds.push_back(static_cast<std::uint64_t>(s));
  nn::TrainConfig tcfg;
  if (epochs > 0) tcfg.epochs_max = epochs;
  const auto table = eval::ablate(ds, acfg, tcfg);
  std::cout << (as_json ? eval::ablation_json(table) + "\n" : eval::ablation_text(table));
  return 0;
}

// -- heatmap ------------------------------------------------------------------

int run_heatmap(const std::string& dataset_path, const std::string& ap, double cell, const std::string& out) {
  const auto ds = load_dataset(dataset_path);
  const auto grid = heatmap(ds, ApId::parse(ap), cell);
  write_with(out, [&](std::ostream& os) { io::write_heatmap_csv(grid, os); });
  std::size_t samples = 0;
  for (const auto& [_, c] : grid.cells) samples += c.sample_count;
  std::cout << "cells           " << grid.cells.size() << '\n' << "samples         " << samples << '\n';
  return 0;
}

// -- compare-truth -------------------------------------------------------------

int run_compare(const std::string& robot_path, const std::string& grid_path, double area, double robot_duration,
                double grid_duration) {
  const auto robot = load_any_dataset(robot_path);
  const auto grid = load_any_dataset(grid_path);
  const double diff = eval::ground_truth_consistency(robot, grid);
  // One scan period per RP when no duration is supplied.
  if (robot_duration <= 0.0) robot_duration = timestamp_span(robot) + 1.0;
  if (grid_duration <= 0.0) grid_duration = timestamp_span(grid) + 1.0;
  const auto rd = eval::density_report(robot, area, robot_duration);
  const auto gd = eval::density_report(grid, area, grid_duration);
  std::cout << std::fixed << std::setprecision(4) << "mean_abs_rssi_diff_db  " << diff << '\n'
            << "below_3db              " << (diff < 3.0 ? "yes" : "no") << '\n'
            << std::setw(10) << "dataset" << std::setw(10) << "rp" << std::setw(12) << "time_s" << std::setw(12)
            << "rp_per_m2" << std::setw(12) << "rp_per_s" << '\n'
            << std::setw(10) << "robot" << std::setw(10) << robot.rows.size() << std::setw(12) << robot_duration
            << std::setw(12) << rd.rp_per_m2 << std::setw(12) << rd.rp_per_s << '\n'
            << std::setw(10) << "grid" << std::setw(10) << grid.rows.size() << std::setw(12) << grid_duration
            << std::setw(12) << gd.rp_per_m2 << std::setw(12) << gd.rp_per_s << '\n';
  if (gd.rp_per_m2 > 0.0 && gd.rp_per_s > 0.0)
    std::cout << "density_ratio          " << rd.rp_per_m2 / gd.rp_per_m2 << '\n'
              << "time_efficiency_ratio  " << rd.rp_per_s / gd.rp_per_s << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiFi fingerprint survey simulation, alignment, training and evaluation"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Simulate a continuous drive or a grid survey");
  simulate->add_option("--scenario", sim_args.scenario, "Scenario JSON path, or 'reference'")->required();
  simulate->add_option("--mode", sim_args.mode)->check(CLI::IsMember({"continuous", "grid"}));
  simulate->add_option("--out-dir", sim_args.out_dir)->required();
  simulate->add_option("--spacing", sim_args.spacing, "Grid spacing (grid mode; default: first scenario spacing)");
  simulate->add_option("--seed", sim_args.seed, "Override the survey seed");

  std::string odom_path, scans_path, align_out;
  auto* align = app.add_subcommand("align", "DTW-align scans to odometry and write a fingerprint CSV");
  align->add_option("--odometry", odom_path)->required();
  align->add_option("--scans", scans_path)->required();
  align->add_option("--out", align_out)->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the MLP localizer");
  train->add_option("--dataset", train_args.dataset)->required();
  train->add_option("--model-out", train_args.model_out)->required();
  train->add_option("--loss-out", train_args.loss_out, "Per-epoch loss CSV (default: <model-out>.loss.csv)");
  train->add_option("--seed", train_args.seed);
  train->add_option("--epochs", train_args.epochs);
  train->add_option("--batch-size", train_args.batch_size);
  train->add_option("--patience", train_args.patience);
  train->add_option("--lr", train_args.lr);
  train->add_option("--val-fraction", train_args.val_fraction);

  std::string eval_dataset, eval_model;
  double eval_area = 0.0;
  bool eval_json = false;
  auto* evaluate = app.add_subcommand("eval", "Evaluate a model on a labelled fingerprint CSV");
  evaluate->add_option("--dataset", eval_dataset)->required();
  evaluate->add_option("--model", eval_model)->required();
  evaluate->add_option("--area", eval_area, "Surveyed area in m^2 for RP density");
  evaluate->add_flag("--json", eval_json);

  std::string ablate_dataset;
  std::vector<double> fractions{1.0, 0.5, 0.25};
  int ablate_seeds = 3;
  int ablate_epochs = 0;
  bool ablate_json = false;
  auto* ablate = app.add_subcommand("ablate", "Reference-point density ablation");
  ablate->add_option("--dataset", ablate_dataset)->required();
  ablate->add_option("--fractions", fractions)->delimiter(',');
  ablate->add_option("--seeds", ablate_seeds)->check(CLI::PositiveNumber);
  ablate->add_option("--epochs", ablate_epochs);
  ablate->add_flag("--json", ablate_json);

  std::string heat_dataset, heat_ap, heat_out;
  double heat_cell = kDefaultHeatmapCellM;
  auto* heat = app.add_subcommand("heatmap", "Per-cell mean RSSI for one AP");
  heat->add_option("--dataset", heat_dataset)->required();
  heat->add_option("--ap", heat_ap)->required();
  heat->add_option("--cell", heat_cell);
  heat->add_option("--out", heat_out)->required();

  std::string robot_path, grid_path;
  double area = 40.0;
  double robot_duration = 0.0;
  double grid_duration = 0.0;
  auto* compare = app.add_subcommand("compare-truth", "Robot survey vs grid ground truth");
  compare->add_option("--robot", robot_path)->required();
  compare->add_option("--grid", grid_path, "Fingerprint CSV or grid-truth JSON")->required();
  compare->add_option("--area", area, "Surveyed area in m^2");
  compare->add_option("--robot-duration", robot_duration, "Robot survey time in s");
  compare->add_option("--grid-duration", grid_duration, "Grid survey time in s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim_args);
    if (*align) return run_align(odom_path, scans_path, align_out);
    if (*train) return run_train(train_args);
    if (*evaluate) return run_eval(eval_dataset, eval_model, eval_area, eval_json);
    if (*ablate) return run_ablate(ablate_dataset, fractions, ablate_seeds, ablate_epochs, ablate_json);
    if (*heat) return run_heatmap(heat_dataset, heat_ap, heat_cell, heat_out);
    if (*compare) return run_compare(robot_path, grid_path, area, robot_duration, grid_duration);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
