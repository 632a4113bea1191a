#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wifiloc/core.hpp"

namespace wifiloc::nn {

enum class Activation { kRelu, kLinear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected layer: y = act(x W^T + b), W is out x in.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  Activation activation = Activation::kRelu;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.activation == b.activation && a.weights.rows() == b.weights.rows() &&
           a.weights.cols() == b.weights.cols() && a.weights == b.weights && a.bias.size() == b.bias.size() &&
           a.bias == b.bias;
  }
};

inline const std::vector<int> kDefaultHiddenLayers = {256, 128, 32};

/// Position regressor over RSSI features: ReLU hidden layers, linear 2-d output.
/// Carries the AP column binding and the input standardization so that a
/// loaded model can localize raw scans on its own.
struct MlpModel {
  std::vector<DenseLayer> layers;
  std::vector<ApId> ap_columns;
  Eigen::VectorXd feature_mean;  // empty = identity
  Eigen::VectorXd feature_std;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().in_dim()); }
  /// [input, hidden..., output]
  std::vector<int> layer_dims() const;
  /// Throws DataError on shape inconsistencies or non-finite parameters.
  void validate() const;
  std::size_t parameter_count() const;

  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.layers == b.layers && a.ap_columns == b.ap_columns && a.feature_mean.size() == b.feature_mean.size() &&
           a.feature_mean == b.feature_mean && a.feature_std.size() == b.feature_std.size() &&
           a.feature_std == b.feature_std;
  }
};

/// He-normal weights (variance 2/fan_in), zero biases.
MlpModel init(std::size_t input_dim, std::uint64_t seed, const std::vector<int>& hidden = kDefaultHiddenLayers);

/// Raw forward pass; `features` must already be standardized.
Eigen::MatrixXd forward(const MlpModel& m, const Eigen::MatrixXd& features);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

/// Mean squared error over rows and both outputs, with backprop gradients.
LossAndGrads loss_and_grads(const MlpModel& m, const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets);
double mse_loss(const MlpModel& m, const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const MlpModel& m, AdamConfig cfg);
  void step(MlpModel& m, const Gradients& g);

 private:
  AdamConfig cfg_;
  long t_ = 0;
  Gradients m1_;
  Gradients m2_;
};

/// Patience-based stopping on a monitored loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience, double min_delta = 1e-6);

  /// Records one epoch's value; returns true when training should stop.
  bool update(double value);
  bool improved_last() const { return improved_last_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  int patience_;
  double min_delta_;
  int epoch_ = -1;
  int best_epoch_ = -1;
  int since_best_ = 0;
  bool improved_last_ = false;
  double best_;
};

struct TrainConfig {
  int epochs_max = 100;
  int batch_size = 32;
  int patience = 5;
  AdamConfig adam;
  double val_fraction = 0.2;
  std::uint64_t rng_seed = 0;
  std::vector<int> hidden_layers = kDefaultHiddenLayers;
  bool standardize = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;

  friend bool operator==(const TrainingReport&, const TrainingReport&) = default;
};

struct TrainResult {
  MlpModel model;
  TrainingReport report;
};

/// Impute, shuffle, split, standardize, then mini-batch Adam with early
/// stopping on validation MSE. Returns the best-validation parameters.
TrainResult train(const FingerprintDataset& ds, const TrainConfig& cfg);

/// Feature vector for a scan in the model's AP order; unknown APs ignored,
/// unheard model APs filled with the missing-RSSI value.
Eigen::RowVectorXd scan_features(const MlpModel& m, const WifiScan& scan);
/// Applies the model's stored standardization to raw dBm features.
Eigen::MatrixXd standardize(const MlpModel& m, const Eigen::MatrixXd& raw);

struct Position {
  double x = 0.0;
  double y = 0.0;
};

Position predict(const MlpModel& m, const WifiScan& scan);
/// Predictions for dataset rows; columns are matched to the model by AP id.
std::vector<Position> predict_rows(const MlpModel& m, const FingerprintDataset& ds);

void save_model(const MlpModel& m, std::ostream& out);
MlpModel load_model(std::istream& in);

}  // namespace wifiloc::nn
