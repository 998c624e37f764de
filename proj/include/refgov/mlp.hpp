#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace refgov {

/// Per-column affine map z = (x - offset) * scale.
struct Normalizer {
  std::vector<double> offset;
  std::vector<double> scale;

  /// Maps each column's [min, max] onto [-1, 1]; constant columns get scale 1.
  static Normalizer fit_minmax(const Eigen::MatrixXd& data);
  static Normalizer identity(int width);

  int width() const { return static_cast<int>(offset.size()); }
  double normalize(int c, double x) const { return (x - offset[c]) * scale[c]; }
  double denormalize(int c, double z) const { return z / scale[c] + offset[c]; }
};

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
};

/// Feedforward net: tanh hidden layers, identity scalar output.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  /// Xavier-uniform weights, zero biases, identity normalization.
  static MlpNetwork create(int input_width, const std::vector<int>& hidden, std::uint64_t seed);

  int input_width() const { return static_cast<int>(layers_.front().W.cols()); }
  std::vector<int> widths() const;

  /// Denormalized prediction for raw features.
  double forward(std::span<const double> features) const;
  /// Network output in normalized target units for normalized features.
  double forward_normalized(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// Row-wise forward on a normalized batch.
  Eigen::VectorXd forward_batch(const Eigen::MatrixXd& Z) const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  Normalizer& feature_norm() { return feature_norm_; }
  const Normalizer& feature_norm() const { return feature_norm_; }
  Normalizer& target_norm() { return target_norm_; }
  const Normalizer& target_norm() const { return target_norm_; }

  /// Parameters flattened layer by layer (W row-major, then b).
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);
  int parameter_count() const;

 private:
  std::vector<Layer> layers_;
  Normalizer feature_norm_;
  Normalizer target_norm_;
};

/// Mean squared error on normalized data and its gradient with respect to
/// parameters() ordering.
double mse_and_gradient(const MlpNetwork& net, const Eigen::MatrixXd& Z, const Eigen::VectorXd& t,
                        Eigen::VectorXd& grad);

inline constexpr int kWeightFileVersion = 1;

std::string network_to_json(const MlpNetwork& net);
MlpNetwork network_from_json(const std::string& text);
void save_network(const MlpNetwork& net, const std::filesystem::path& path);
MlpNetwork load_network(const std::filesystem::path& path);

/// Training rows: features [x..., v_prev, r], target v.
struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  int rows() const { return static_cast<int>(X.rows()); }
};

void write_dataset_csv(std::ostream& os, const Dataset& d);
Dataset read_dataset_csv(const std::filesystem::path& path);

struct TrainParams {
  double learning_rate = 1e-2;
  int max_epochs = 5000;
  int patience = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
};

struct SplitIndices {
  std::vector<int> train, val, test;
};

struct TrainMetrics {
  double rmse_train = 0.0;
  double rmse_val = 0.0;
  double rmse_test = 0.0;
  double rmse_pooled = 0.0;
  int epochs = 0;
  int best_epoch = 0;
};

struct TrainResult {
  MlpNetwork net;
  TrainMetrics metrics;
  SplitIndices split;
};

SplitIndices split_rows(int n, std::uint64_t seed, const TrainParams& params);

/// Full-batch Adam on MSE with early stopping on validation RMSE; returns the
/// best-validation weights.  Metrics are RMSE in target units.
TrainResult train(const Dataset& data, const std::vector<int>& hidden, std::uint64_t seed,
                  const TrainParams& params = {});

/// RMSE in target units over the given rows.
double rmse(const MlpNetwork& net, const Dataset& data, const std::vector<int>& rows);

}  // namespace refgov
