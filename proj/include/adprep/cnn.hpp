#ifndef ADPREP_CNN_HPP
#define ADPREP_CNN_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "adprep/image.hpp"
#include "adprep/train_config.hpp"

namespace adprep {

/// Feature maps: one row per channel, spatial positions row-major along
/// the columns (row * width + col).
using FeatureMaps = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// conv(k1) -> relu -> maxpool -> conv(k2) -> relu -> maxpool -> dense -> softmax.
/// Convolutions use valid padding and stride 1; pooling is non-overlapping
/// with floor on odd sizes.
struct CnnShape {
  int input_height = 32;
  int input_width = 32;
  int conv1_filters = 8;
  int conv1_kernel = 3;
  int conv2_filters = 16;
  int conv2_kernel = 3;
  int pool = 2;
  int classes = 2;

  int conv1_height() const { return input_height - conv1_kernel + 1; }
  int conv1_width() const { return input_width - conv1_kernel + 1; }
  int pool1_height() const { return conv1_height() / pool; }
  int pool1_width() const { return conv1_width() / pool; }
  int conv2_height() const { return pool1_height() - conv2_kernel + 1; }
  int conv2_width() const { return pool1_width() - conv2_kernel + 1; }
  int pool2_height() const { return conv2_height() / pool; }
  int pool2_width() const { return conv2_width() / pool; }
  int flat_size() const { return conv2_filters * pool2_height() * pool2_width(); }

  /// Throws ShapeMismatch if any intermediate size drops below 1.
  void validate() const;
  friend bool operator==(const CnnShape&, const CnnShape&) = default;
};

/// Weights are stored as matrices so a model doubles as its own gradient.
/// Conv weight rows are filters; columns run over (in_channel, ky, kx).
struct CnnModel {
  CnnShape shape;
  Eigen::MatrixXd conv1_w, conv1_b;  // b is filters x 1
  Eigen::MatrixXd conv2_w, conv2_b;
  Eigen::MatrixXd dense_w, dense_b;  // classes x flat, classes x 1

  static CnnModel zeros(const CnnShape& shape);
  /// Uniform(-s, s), s = sqrt(6 / (fan_in + fan_out)); biases zero.
  static CnnModel glorot(const CnnShape& shape, std::uint64_t seed);

  std::array<Eigen::MatrixXd*, 6> tensors();
  std::array<const Eigen::MatrixXd*, 6> tensors() const;
  Eigen::Index parameter_count() const;
};

/// Everything the backward pass needs from one forward pass.
struct CnnTrace {
  Eigen::MatrixXd patches1, patches2;
  FeatureMaps z1, a1, p1, z2, a2, p2;
  std::vector<Eigen::Index> argmax1, argmax2;
  Eigen::VectorXd flat;
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;
};

/// Image to a 1 x (h*w) map in [0,1].
FeatureMaps normalize_input(const GrayImage& img);

/// Rows (channel, ky, kx) by columns output position.
Eigen::MatrixXd im2col(const FeatureMaps& in, int height, int width, int kernel);

CnnTrace cnn_forward(const CnnModel& model, const FeatureMaps& input);
CnnTrace cnn_forward(const CnnModel& model, const GrayImage& img);

/// Cross-entropy of one example: -log softmax(logits)[label].
double cross_entropy(const Eigen::VectorXd& logits, int label);

/// Accumulates d(loss)/d(params) for one example into `grad` (same shape as
/// the model). Returns the example's loss.
double cnn_backward(const CnnModel& model, const CnnTrace& trace, int label, CnnModel& grad);

/// Mean cross-entropy over a batch and its gradient.
double cnn_loss_and_gradient(const CnnModel& model, std::span<const FeatureMaps> inputs,
                             std::span<const int> labels, CnnModel* grad);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;  // NaN when no test data was given
};

struct CnnTrainResult {
  CnnModel model;
  std::vector<EpochStats> history;
};

/// Mini-batch gradient descent on mean cross-entropy. The epoch-e shuffle
/// is seeded from (cfg.seed, e). Throws NonFiniteLoss on divergence.
CnnTrainResult cnn_train(std::span<const GrayImage> train, std::span<const int> train_labels,
                         std::span<const GrayImage> test, std::span<const int> test_labels,
                         const TrainConfig& cfg, const CnnShape& shape);

struct CnnPrediction {
  int label = 0;
  double prob = 0.0;  // P(label == 1)
};

CnnPrediction cnn_predict(const CnnModel& model, const GrayImage& img);

}  // namespace adprep

#endif  // ADPREP_CNN_HPP
