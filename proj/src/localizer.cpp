#include "wifiloc/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

#include "wifiloc/dataset.hpp"

namespace wifiloc::nn {

using nlohmann::json;

namespace {

Eigen::MatrixXd apply_activation(Activation a, Eigen::MatrixXd z) {
  if (a == Activation::kRelu) z = z.cwiseMax(0.0);
  return z;
}

struct ForwardTrace {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  Eigen::MatrixXd output;
};

ForwardTrace forward_trace(const MlpModel& m, const Eigen::MatrixXd& x) {
  ForwardTrace tr;
  Eigen::MatrixXd a = x;
  for (const auto& layer : m.layers) {
    Eigen::MatrixXd z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    tr.inputs.push_back(std::move(a));
    a = apply_activation(layer.activation, z);
    tr.pre.push_back(std::move(z));
  }
  tr.output = std::move(a);
  return tr;
}

void check_batch(const MlpModel& m, const Eigen::MatrixXd& features) {
  if (m.layers.empty()) throw DataError("model has no layers");
  if (features.cols() != m.layers.front().in_dim()) throw DataError("feature dimension mismatch");
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Gradients zeros_like(const MlpModel& m) {
  Gradients g;
  for (const auto& l : m.layers) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& src, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

bool row_less(const FingerprintRow& a, const FingerprintRow& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.rssi < b.rssi;
}

json matrix_to_json(const Eigen::MatrixXd& w) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError("model file: " + what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError("model file: " + what + " has a non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "linear"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  throw DataError("unknown activation '" + s + "'");
}

std::vector<int> MlpModel::layer_dims() const {
  std::vector<int> dims;
  if (layers.empty()) return dims;
  dims.push_back(static_cast<int>(layers.front().in_dim()));
  for (const auto& l : layers) dims.push_back(static_cast<int>(l.out_dim()));
  return dims;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void MlpModel::validate() const {
  if (layers.empty()) throw DataError("model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.out_dim()) throw DataError("shape mismatch: layer " + std::to_string(i) + " bias");
    if (i > 0 && l.in_dim() != layers[i - 1].out_dim())
      throw DataError("shape mismatch: layer " + std::to_string(i) + " input does not chain");
    if (!l.weights.allFinite() || !l.bias.allFinite())
      throw DataError("layer " + std::to_string(i) + " has non-finite parameters");
  }
  if (layers.back().out_dim() != 2) throw DataError("shape mismatch: output dimension must be 2");
  if (layers.back().activation != Activation::kLinear) throw DataError("output layer must be linear");
  if (!ap_columns.empty() && ap_columns.size() != input_dim())
    throw DataError("shape mismatch: input dimension differs from AP column count");
  const auto in = static_cast<Eigen::Index>(input_dim());
  if (feature_mean.size() != feature_std.size() || (feature_mean.size() != 0 && feature_mean.size() != in))
    throw DataError("shape mismatch: standardization vectors");
  if (feature_std.size() != 0 && (feature_std.array() <= 0.0).any())
    throw DataError("standardization scale must be positive");
}

MlpModel init(std::size_t input_dim, std::uint64_t seed, const std::vector<int>& hidden) {
  if (input_dim == 0) throw DataError("input dimension must be at least 1");
  auto rng = make_stream(seed, 11);
  std::normal_distribution<double> unit(0.0, 1.0);
  MlpModel m;
  std::vector<int> dims{static_cast<int>(input_dim)};
  for (const int h : hidden) {
    if (h < 1) throw DataError("hidden layer sizes must be positive");
    dims.push_back(h);
  }
  dims.push_back(2);
  for (std::size_t i = 1; i < dims.size(); ++i) {
    DenseLayer l;
    const double scale = std::sqrt(2.0 / dims[i - 1]);
    l.weights.resize(dims[i], dims[i - 1]);
    // Fill row-major so the draw order matches the serialized order.
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = scale * unit(rng);
    l.bias = Eigen::VectorXd::Zero(dims[i]);
    l.activation = i + 1 == dims.size() ? Activation::kLinear : Activation::kRelu;
    m.layers.push_back(std::move(l));
  }
  return m;
}

Eigen::MatrixXd forward(const MlpModel& m, const Eigen::MatrixXd& features) {
  check_batch(m, features);
  Eigen::MatrixXd a = features;
  for (const auto& layer : m.layers) {
    Eigen::MatrixXd z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    a = apply_activation(layer.activation, std::move(z));
  }
  return a;
}

double mse_loss(const MlpModel& m, const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets) {
  if (features.rows() == 0) throw DataError("empty batch");
  if (targets.rows() != features.rows() || targets.cols() != 2) throw DataError("target shape mismatch");
  return (forward(m, features) - targets).squaredNorm() / static_cast<double>(targets.size());
}

LossAndGrads loss_and_grads(const MlpModel& m, const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets) {
  check_batch(m, features);
  if (features.rows() == 0) throw DataError("empty batch");
  if (targets.rows() != features.rows() || targets.cols() != 2) throw DataError("target shape mismatch");

  auto tr = forward_trace(m, features);
  const Eigen::MatrixXd diff = tr.output - targets;
  const auto count = static_cast<double>(targets.size());
  LossAndGrads out;
  out.loss = diff.squaredNorm() / count;
  out.grads = zeros_like(m);

  Eigen::MatrixXd delta = (2.0 / count) * diff;  // dL/d(output)
  for (std::size_t k = m.layers.size(); k-- > 0;) {
    const auto& layer = m.layers[k];
    if (layer.activation == Activation::kRelu) delta = delta.cwiseProduct((tr.pre[k].array() > 0.0).cast<double>().matrix());
    out.grads.weights[k] = delta.transpose() * tr.inputs[k];
    out.grads.bias[k] = delta.colwise().sum().transpose();
    if (k > 0) delta = delta * layer.weights;
  }
  return out;
}

Adam::Adam(const MlpModel& m, AdamConfig cfg) : cfg_(cfg), m1_(zeros_like(m)), m2_(zeros_like(m)) {}

void Adam::step(MlpModel& m, const Gradients& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& grad, auto& mom1, auto& mom2) {
    mom1 = cfg_.beta1 * mom1 + (1.0 - cfg_.beta1) * grad;
    mom2 = cfg_.beta2 * mom2 + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg_.learning_rate * (mom1.array() / c1) / ((mom2.array() / c2).sqrt() + cfg_.eps);
  };
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    update(m.layers[k].weights, g.weights[k], m1_.weights[k], m2_.weights[k]);
    update(m.layers[k].bias, g.bias[k], m1_.bias[k], m2_.bias[k]);
  }
}

EarlyStopping::EarlyStopping(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw DataError("patience must be at least 1");
}

bool EarlyStopping::update(double value) {
  ++epoch_;
  improved_last_ = value < best_ - min_delta_;
  if (improved_last_) {
    best_ = value;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return false;
  }
  return ++since_best_ >= patience_;
}

void TrainConfig::validate() const {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw DataError("val_fraction must lie in (0, 1)");
  if (patience < 1) throw DataError("patience must be at least 1");
  if (batch_size < 1) throw DataError("batch_size must be at least 1");
  if (epochs_max < 1) throw DataError("epochs_max must be at least 1");
  if (!(adam.learning_rate > 0.0)) throw DataError("learning rate must be positive");
}

TrainResult train(const FingerprintDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.rows.size() < 10) throw DataError("insufficient data: need at least 10 rows");
  if (ds.ap_columns.empty()) throw DataError("insufficient data: dataset has no AP columns");

  // Sort into a canonical order first so the result does not depend on how
  // the caller ordered the rows.
  std::vector<std::size_t> order(ds.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row_less(ds.rows[a], ds.rows[b]); });
  auto rng = make_stream(cfg.rng_seed, 21);
  std::shuffle(order.begin(), order.end(), rng);

  const DenseData dense = impute(select_rows(ds, order));
  const auto n = static_cast<std::size_t>(dense.features.rows());
  const auto n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(n * cfg.val_fraction)), 1, n - 1);
  const auto n_train = n - n_val;
  if (n_train < static_cast<std::size_t>(cfg.batch_size))
    throw DataError("insufficient data: " + std::to_string(n_train) + " training rows for batch size " +
                    std::to_string(cfg.batch_size));

  Eigen::MatrixXd x_train = dense.features.topRows(static_cast<Eigen::Index>(n_train));
  Eigen::MatrixXd y_train = dense.targets.topRows(static_cast<Eigen::Index>(n_train));
  Eigen::MatrixXd x_val = dense.features.bottomRows(static_cast<Eigen::Index>(n_val));
  Eigen::MatrixXd y_val = dense.targets.bottomRows(static_cast<Eigen::Index>(n_val));

  MlpModel model = init(ds.ap_columns.size(), cfg.rng_seed, cfg.hidden_layers);
  model.ap_columns = ds.ap_columns;
  if (cfg.standardize) {
    model.feature_mean = x_train.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x_train.rowwise() - model.feature_mean.transpose();
    model.feature_std = (centered.colwise().squaredNorm() / static_cast<double>(n_train)).cwiseSqrt().transpose();
    for (Eigen::Index c = 0; c < model.feature_std.size(); ++c) {
      if (model.feature_std(c) < 1e-9) model.feature_std(c) = 1.0;
    }
    x_train = standardize(model, x_train);
    x_val = standardize(model, x_val);
  }

  // The linear output starts at the mean training position.
  model.layers.back().bias = y_train.colwise().mean().transpose();
  Adam opt(model, cfg.adam);
  EarlyStopping stopper(cfg.patience);
  TrainResult result;
  result.report.train_rows = n_train;
  result.report.val_rows = n_val;
  MlpModel best = model;
  std::vector<std::size_t> batch_order(n_train);
  std::iota(batch_order.begin(), batch_order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::span<const std::size_t> idx(batch_order.data() + start, std::min(batch, n_train - start));
      const auto lg = loss_and_grads(model, take_rows(x_train, idx), take_rows(y_train, idx));
      if (!std::isfinite(lg.loss)) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      opt.step(model, lg.grads);
    }
    const double train_loss = mse_loss(model, x_train, y_train);
    const double val_loss = mse_loss(model, x_val, y_val);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    result.report.epochs.push_back({epoch, train_loss, val_loss});
    const bool stop = stopper.update(val_loss);
    if (stopper.improved_last()) best = model;
    if (stop) {
      result.report.stopped_early = epoch + 1 < cfg.epochs_max;
      break;
    }
  }
  result.report.best_epoch = stopper.best_epoch();
  result.report.best_val_loss = stopper.best_value();
  result.model = std::move(best);
  return result;
}

Eigen::MatrixXd standardize(const MlpModel& m, const Eigen::MatrixXd& raw) {
  if (m.feature_mean.size() == 0) return raw;
  if (raw.cols() != m.feature_mean.size()) throw DataError("feature dimension mismatch");
  Eigen::MatrixXd out = raw.rowwise() - m.feature_mean.transpose();
  out.array().rowwise() /= m.feature_std.transpose().array();
  return out;
}

Eigen::RowVectorXd scan_features(const MlpModel& m, const WifiScan& scan) {
  Eigen::RowVectorXd f(static_cast<Eigen::Index>(m.ap_columns.size()));
  for (std::size_t c = 0; c < m.ap_columns.size(); ++c) {
    const auto it = scan.readings.find(m.ap_columns[c]);
    f(static_cast<Eigen::Index>(c)) = it == scan.readings.end() ? kMissingRssiFillDbm : it->second;
  }
  return f;
}

Position predict(const MlpModel& m, const WifiScan& scan) {
  const Eigen::MatrixXd out = forward(m, standardize(m, scan_features(m, scan)));
  return {out(0, 0), out(0, 1)};
}

std::vector<Position> predict_rows(const MlpModel& m, const FingerprintDataset& ds) {
  std::vector<std::optional<std::size_t>> source(m.ap_columns.size());
  for (std::size_t c = 0; c < m.ap_columns.size(); ++c) source[c] = ds.column_of(m.ap_columns[c]);
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(ds.rows.size()), static_cast<Eigen::Index>(m.ap_columns.size()));
  for (std::size_t r = 0; r < ds.rows.size(); ++r) {
    for (std::size_t c = 0; c < source.size(); ++c) {
      const auto& slot = source[c] ? ds.rows[r].rssi[*source[c]] : std::optional<double>{};
      raw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = slot.value_or(kMissingRssiFillDbm);
    }
  }
  std::vector<Position> out;
  if (ds.rows.empty()) return out;
  const Eigen::MatrixXd pred = forward(m, standardize(m, raw));
  out.reserve(ds.rows.size());
  for (Eigen::Index r = 0; r < pred.rows(); ++r) out.push_back({pred(r, 0), pred(r, 1)});
  return out;
}

void save_model(const MlpModel& m, std::ostream& out) {
  m.validate();
  json doc;
  doc["layer_dims"] = m.layer_dims();
  json acts = json::array();
  json weights = json::array();
  json biases = json::array();
  for (const auto& l : m.layers) {
    acts.push_back(to_string(l.activation));
    weights.push_back(matrix_to_json(l.weights));
    biases.push_back(vector_to_json(l.bias));
  }
  doc["activations"] = std::move(acts);
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  doc["feature_mean"] = vector_to_json(m.feature_mean);
  doc["feature_std"] = vector_to_json(m.feature_std);
  json cols = json::array();
  for (const auto& ap : m.ap_columns) cols.push_back(ap.str());
  doc["ap_columns"] = std::move(cols);
  out << doc.dump(1) << '\n';
}

namespace {

MlpModel model_from_json(const json& doc) {
  for (const char* key : {"layer_dims", "activations", "weights", "biases", "feature_mean", "feature_std", "ap_columns"}) {
    if (!doc.contains(key)) throw DataError(std::string("model file: missing \"") + key + "\"");
  }
  const auto dims = doc["layer_dims"].get<std::vector<int>>();
  const auto& acts = doc["activations"];
  const auto& weights = doc["weights"];
  const auto& biases = doc["biases"];
  if (dims.size() < 2) throw DataError("model file: layer_dims needs at least two entries");
  const std::size_t n_layers = dims.size() - 1;
  if (acts.size() != n_layers || weights.size() != n_layers || biases.size() != n_layers)
    throw DataError("shape mismatch: layer count disagrees with layer_dims");

  MlpModel m;
  for (std::size_t k = 0; k < n_layers; ++k) {
    DenseLayer l;
    l.activation = activation_from_string(acts[k].get<std::string>());
    const auto& w = weights[k];
    if (!w.is_array() || static_cast<int>(w.size()) != dims[k + 1])
      throw DataError("shape mismatch: layer " + std::to_string(k) + " weight rows");
    l.weights.resize(dims[k + 1], dims[k]);
    for (int r = 0; r < dims[k + 1]; ++r) {
      const auto row = vector_from_json(w[static_cast<std::size_t>(r)], "weights");
      if (row.size() != dims[k]) throw DataError("shape mismatch: layer " + std::to_string(k) + " weight columns");
      l.weights.row(r) = row.transpose();
    }
    l.bias = vector_from_json(biases[k], "biases");
    if (l.bias.size() != dims[k + 1]) throw DataError("shape mismatch: layer " + std::to_string(k) + " bias");
    m.layers.push_back(std::move(l));
  }
  m.feature_mean = vector_from_json(doc["feature_mean"], "feature_mean");
  m.feature_std = vector_from_json(doc["feature_std"], "feature_std");
  for (const auto& c : doc["ap_columns"]) m.ap_columns.push_back(ApId::parse(c.get<std::string>()));
  m.validate();
  return m;
}

}  // namespace

MlpModel load_model(std::istream& in) {
  try {
    return model_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

}  // namespace wifiloc::nn
