#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "wifiloc/evaluation.hpp"
#include "wifiloc/localizer.hpp"

using namespace wifiloc;
using namespace wifiloc::nn;

namespace {

MlpModel random_model(std::vector<int> dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.7);
  MlpModel m;
  for (std::size_t k = 1; k < dims.size(); ++k) {
    DenseLayer l;
    l.weights = Eigen::MatrixXd::NullaryExpr(dims[k], dims[k - 1], [&] { return g(rng); });
    l.bias = Eigen::VectorXd::NullaryExpr(dims[k], [&] { return g(rng); });
    l.activation = k + 1 == dims.size() ? Activation::kLinear : Activation::kRelu;
    m.layers.push_back(std::move(l));
  }
  return m;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return g(rng); });
}

// RSSI is an affine function of position for two APs plus a nonlinear third.
FingerprintDataset toy_dataset(std::size_t side, double t0 = 0.0, bool same_time = false) {
  FingerprintDataset ds;
  ds.ap_columns = {ApId::parse("02:00:00:00:00:01"), ApId::parse("02:00:00:00:00:02"),
                   ApId::parse("02:00:00:00:00:03")};
  double t = t0;
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      const double x = 0.4 * static_cast<double>(i);
      const double y = 0.4 * static_cast<double>(j);
      ds.rows.push_back({t, x, y, {-40.0 - 6.0 * x, -40.0 - 6.0 * y, -50.0 - 2.0 * std::hypot(x - 2.0, y - 2.0)}});
      if (!same_time) t += 1.0;
    }
  return ds;
}

}  // namespace

TEST_CASE("activation names") {
  CHECK(to_string(Activation::kRelu) == "relu");
  CHECK(activation_from_string(to_string(Activation::kLinear)) == Activation::kLinear);
  CHECK_THROWS_AS(activation_from_string("tanh"), DataError);
}

TEST_CASE("init shapes, zero biases and determinism") {
  const auto m = init(38, 5);
  CHECK(m.layer_dims() == std::vector<int>{38, 256, 128, 32, 2});
  CHECK(m.layers[0].weights.rows() == 256);
  CHECK(m.layers[0].weights.cols() == 38);
  for (const auto& l : m.layers) CHECK(l.bias.isZero());
  CHECK(m.layers.back().activation == Activation::kLinear);
  for (std::size_t k = 0; k + 1 < m.layers.size(); ++k) CHECK(m.layers[k].activation == Activation::kRelu);
  CHECK(m.parameter_count() == 38u * 256 + 256 + 256u * 128 + 128 + 128u * 32 + 32 + 32u * 2 + 2);
  CHECK(init(38, 5) == m);
  CHECK_FALSE(init(38, 6) == m);
  CHECK_THROWS_AS(init(0, 1), DataError);
}

TEST_CASE("init weight scale follows fan-in") {
  const auto m = init(200, 3, {400});
  const auto& w = m.layers[0].weights;
  const double var = w.array().square().mean() - std::pow(w.mean(), 2);
  CHECK(var == doctest::Approx(2.0 / 200.0).epsilon(0.05));
}

TEST_CASE("forward on hand-computed networks") {
  MlpModel m;
  DenseLayer l;
  l.weights = Eigen::MatrixXd::Zero(2, 3);
  l.bias = Eigen::Vector2d(1.5, -2.0);
  l.activation = Activation::kLinear;
  m.layers = {l};
  const Eigen::MatrixXd out = forward(m, Eigen::MatrixXd::Constant(4, 3, 7.0));
  for (Eigen::Index r = 0; r < 4; ++r) {
    CHECK(out(r, 0) == 1.5);
    CHECK(out(r, 1) == -2.0);
  }

  // Identity hidden layer with ReLU clips negatives.
  MlpModel relu;
  DenseLayer h;
  h.weights = Eigen::MatrixXd::Identity(2, 2);
  h.bias = Eigen::Vector2d::Zero();
  DenseLayer o = h;
  o.activation = Activation::kLinear;
  relu.layers = {h, o};
  Eigen::MatrixXd x(1, 2);
  x << -3.0, 4.0;
  const Eigen::MatrixXd y = forward(relu, x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 4.0);
  CHECK_THROWS_AS(forward(relu, Eigen::MatrixXd::Zero(1, 3)), DataError);
}

TEST_CASE("forward agrees with a nested-loop evaluation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = random_model({3, 4, 2}, seed);
    std::vector<std::vector<std::vector<double>>> w;
    std::vector<std::vector<double>> b;
    for (const auto& l : m.layers) {
      std::vector<std::vector<double>> rows;
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) row.push_back(l.weights(r, c));
        rows.push_back(row);
      }
      w.push_back(rows);
      b.emplace_back(l.bias.data(), l.bias.data() + l.bias.size());
    }
    const auto x = random_matrix(5, 3, seed + 100);
    const Eigen::MatrixXd out = forward(m, x);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const auto expected = oracle::mlp_forward(w, b, {x(r, 0), x(r, 1), x(r, 2)});
      CHECK(out(r, 0) == doctest::Approx(expected[0]).epsilon(1e-12));
      CHECK(out(r, 1) == doctest::Approx(expected[1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("loss is zero when predictions equal targets") {
  const auto m = random_model({3, 5, 2}, 4);
  const auto x = random_matrix(7, 3, 9);
  const Eigen::MatrixXd y = forward(m, x);
  const auto lg = loss_and_grads(m, x, y);
  CHECK(lg.loss == 0.0);
  for (const auto& g : lg.grads.weights) CHECK(g.isZero());
  CHECK(mse_loss(m, x, y) == 0.0);
}

TEST_CASE("single linear layer gradient in closed form") {
  const auto m = random_model({4, 2}, 12);
  const auto x = random_matrix(6, 4, 13);
  const auto y = random_matrix(6, 2, 14);
  const auto lg = loss_and_grads(m, x, y);
  const auto& W = m.layers[0].weights;
  const auto& b = m.layers[0].bias;
  double loss = 0.0;
  double gw[2][4] = {};
  double gb[2] = {};
  for (int r = 0; r < 6; ++r)
    for (int o = 0; o < 2; ++o) {
      double p = b(o);
      for (int i = 0; i < 4; ++i) p += W(o, i) * x(r, i);
      const double d = p - y(r, o);
      loss += d * d / 12.0;
      gb[o] += 2.0 * d / 12.0;
      for (int i = 0; i < 4; ++i) gw[o][i] += 2.0 * d * x(r, i) / 12.0;
    }
  CHECK(lg.loss == doctest::Approx(loss).epsilon(1e-12));
  for (int o = 0; o < 2; ++o) {
    CHECK(lg.grads.bias[0](o) == doctest::Approx(gb[o]).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(lg.grads.weights[0](o, i) == doctest::Approx(gw[o][i]).epsilon(1e-12));
  }
}

TEST_CASE("backprop matches central differences") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = random_model({3, 5, 4, 2}, seed);
    const auto x = random_matrix(8, 3, seed + 1000);
    const auto y = random_matrix(8, 2, seed + 2000);
    const auto lg = loss_and_grads(m, x, y);
    auto loss = [&] { return mse_loss(m, x, y); };
    auto compare = [&](double analytic, double& param) {
      const double numeric = oracle::central_difference(loss, param, 1e-5);
      const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
      CHECK(std::abs(analytic - numeric) / denom < 1e-4);
      ++checked;
    };
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
      auto& l = m.layers[k];
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) compare(lg.grads.weights[k](r, c), l.weights(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) compare(lg.grads.bias[k](r), l.bias(r));
    }
  }
  CHECK(checked == 20 * (3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2));
}

TEST_CASE("Adam first step moves each parameter by the learning rate") {
  auto m = random_model({3, 2}, 1);
  const auto before = m;
  const auto lg = loss_and_grads(m, random_matrix(4, 3, 2), random_matrix(4, 2, 3));
  Adam opt(m, {0.01, 0.9, 0.999, 1e-8});
  opt.step(m, lg.grads);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double g = lg.grads.weights[0](r, c);
      const double expected = before.layers[0].weights(r, c) - 0.01 * g / (std::abs(g) + 1e-8);
      CHECK(m.layers[0].weights(r, c) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("EarlyStopping") {
  SUBCASE("plateau stops after patience epochs") {
    EarlyStopping s(5);
    CHECK_FALSE(s.update(1.0));
    CHECK(s.improved_last());
    for (int k = 0; k < 4; ++k) CHECK_FALSE(s.update(1.0));
    CHECK(s.update(1.0));
    CHECK(s.best_epoch() == 0);
    CHECK(s.best_value() == 1.0);
  }
  SUBCASE("improvements smaller than min_delta do not count") {
    EarlyStopping s(2, 1e-6);
    s.update(1.0);
    CHECK_FALSE(s.update(1.0 - 5e-7));
    CHECK_FALSE(s.improved_last());
    CHECK(s.update(1.0 - 9e-7));
  }
  SUBCASE("improvement resets the counter") {
    EarlyStopping s(2);
    s.update(3.0);
    CHECK_FALSE(s.update(3.0));
    CHECK_FALSE(s.update(2.0));
    CHECK_FALSE(s.update(2.5));
    CHECK(s.update(2.5));
    CHECK(s.best_epoch() == 2);
  }
  CHECK_THROWS_AS(EarlyStopping(0), DataError);
}

TEST_CASE("train rejects bad input") {
  TrainConfig cfg;
  auto small = toy_dataset(3);
  CHECK_THROWS_WITH_AS(train(small, cfg), doctest::Contains("insufficient data"), DataError);
  cfg.batch_size = 64;
  CHECK_THROWS_WITH_AS(train(toy_dataset(8), cfg), doctest::Contains("insufficient data"), DataError);
  cfg = {};
  cfg.val_fraction = 1.0;
  CHECK_THROWS_AS(train(toy_dataset(8), cfg), DataError);
}

TEST_CASE("train is deterministic for a seed") {
  TrainConfig cfg;
  cfg.epochs_max = 8;
  cfg.rng_seed = 3;
  cfg.hidden_layers = {16, 8};
  const auto ds = toy_dataset(8);
  const auto a = train(ds, cfg);
  const auto b = train(ds, cfg);
  CHECK(a.model == b.model);
  CHECK(a.report == b.report);
  cfg.rng_seed = 4;
  CHECK_FALSE(train(ds, cfg).model == a.model);
}

TEST_CASE("train does not depend on row order") {
  TrainConfig cfg;
  cfg.epochs_max = 5;
  cfg.hidden_layers = {16};
  auto ds = toy_dataset(8, 0.0, true);
  const auto a = train(ds, cfg);
  std::mt19937_64 rng(1);
  std::shuffle(ds.rows.begin(), ds.rows.end(), rng);
  const auto b = train(ds, cfg);
  CHECK(a.model == b.model);
}

TEST_CASE("train fits a learnable toy mapping") {
  TrainConfig cfg;
  cfg.epochs_max = 300;
  cfg.patience = 30;
  cfg.batch_size = 16;
  cfg.hidden_layers = {32, 32};
  const auto ds = toy_dataset(10);
  const auto trained = train(ds, cfg);
  std::vector<Position> truths;
  for (const auto& r : ds.rows) truths.push_back({r.x, r.y});
  const auto report = eval::metrics(predict_rows(trained.model, ds), truths);
  CHECK(report.mae < 0.1);
}

TEST_CASE("full-batch loss of a linear model never increases at a small step") {
  TrainConfig cfg;
  cfg.hidden_layers = {};
  cfg.adam.learning_rate = 1e-4;
  cfg.epochs_max = 30;
  cfg.patience = 30;
  const auto ds = toy_dataset(8);
  cfg.batch_size = static_cast<int>(ds.rows.size() - std::llround(ds.rows.size() * cfg.val_fraction));
  const auto trained = train(ds, cfg);
  REQUIRE(trained.report.epochs.size() == 30);
  for (std::size_t k = 1; k < trained.report.epochs.size(); ++k)
    CHECK(trained.report.epochs[k].train_loss <= trained.report.epochs[k - 1].train_loss);
}

TEST_CASE("returned model is the best-validation epoch") {
  TrainConfig cfg;
  cfg.epochs_max = 40;
  cfg.patience = 3;
  cfg.hidden_layers = {32};
  const auto trained = train(toy_dataset(9), cfg);
  const auto& r = trained.report;
  REQUIRE_FALSE(r.epochs.empty());
  double best = r.epochs.front().val_loss;
  for (const auto& e : r.epochs) best = std::min(best, e.val_loss);
  CHECK(r.best_val_loss <= best + 1e-6);
  CHECK(r.epochs[static_cast<std::size_t>(r.best_epoch)].val_loss == r.best_val_loss);
  if (r.stopped_early) CHECK(r.epochs.size() == static_cast<std::size_t>(r.best_epoch + 1 + cfg.patience));
  CHECK(r.train_rows + r.val_rows == 81);
  CHECK(r.val_rows == 16);
}

TEST_CASE("predict maps scans by AP id") {
  TrainConfig cfg;
  cfg.epochs_max = 3;
  cfg.hidden_layers = {8};
  const auto ds = toy_dataset(8);
  const auto model = train(ds, cfg).model;
  const auto& row = ds.rows[10];
  WifiScan scan{0.0, {}};
  for (std::size_t c = 0; c < ds.ap_columns.size(); ++c) scan.readings[ds.ap_columns[c]] = *row.rssi[c];
  scan.readings[ApId::parse("ff:ff:ff:ff:ff:ff")] = -30.0;  // unknown APs are ignored
  const auto p = predict(model, scan);
  const auto rows = predict_rows(model, ds);
  CHECK(p.x == doctest::Approx(rows[10].x).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(rows[10].y).epsilon(1e-12));

  // A dataset with the same columns in another order gives the same predictions.
  FingerprintDataset swapped;
  swapped.ap_columns = {ds.ap_columns[2], ds.ap_columns[0], ds.ap_columns[1]};
  for (const auto& r : ds.rows) swapped.rows.push_back({r.t, r.x, r.y, {r.rssi[2], r.rssi[0], r.rssi[1]}});
  const auto again = predict_rows(model, swapped);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(again[k].x == rows[k].x);
    CHECK(again[k].y == rows[k].y);
  }

  const auto silent = predict(model, WifiScan{});
  CHECK(std::isfinite(silent.x));
  CHECK(std::isfinite(silent.y));
  CHECK(scan_features(model, WifiScan{}).isConstant(-100.0));
}

TEST_CASE("model save/load round-trip is exact") {
  TrainConfig cfg;
  cfg.epochs_max = 3;
  cfg.hidden_layers = {8, 4};
  const auto ds = toy_dataset(8);
  const auto model = train(ds, cfg).model;
  std::stringstream buf;
  save_model(model, buf);
  const auto loaded = load_model(buf);
  CHECK(loaded == model);
  const auto a = predict_rows(model, ds);
  const auto b = predict_rows(loaded, ds);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].x == b[k].x);
    CHECK(a[k].y == b[k].y);
  }
}

TEST_CASE("load_model rejects malformed files") {
  const auto model = init(3, 1, {4});
  std::stringstream buf;
  save_model(model, buf);
  const std::string text = buf.str();

  std::istringstream garbage("{not json");
  CHECK_THROWS_AS(load_model(garbage), DataError);

  auto doc_with = [&](const std::string& from, const std::string& to) {
    std::string t = text;
    const auto pos = t.find(from);
    REQUIRE(pos != std::string::npos);
    t.replace(pos, from.size(), to);
    return t;
  };
  std::istringstream dims(doc_with("\"layer_dims\": [\n  3,", "\"layer_dims\": [\n  5,"));
  CHECK_THROWS_WITH_AS(load_model(dims), doctest::Contains("shape mismatch"), DataError);
  std::istringstream missing(doc_with("\"biases\"", "\"biasez\""));
  CHECK_THROWS_WITH_AS(load_model(missing), doctest::Contains("missing"), DataError);
  std::istringstream act(doc_with("\"relu\"", "\"tanh\""));
  CHECK_THROWS_AS(load_model(act), DataError);
}
