#include "adprep/cnn.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "adprep/error.hpp"
#include "adprep/rng.hpp"

namespace adprep {

namespace {

// Adds the patch gradients back onto the (channels x h*w) map they came from.
FeatureMaps col2im(const Eigen::MatrixXd& cols, int channels, int height, int width, int kernel) {
  const int out_h = height - kernel + 1, out_w = width - kernel + 1;
  FeatureMaps out = FeatureMaps::Zero(channels, height * width);
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < kernel; ++ky)
      for (int kx = 0; kx < kernel; ++kx) {
        const Eigen::Index row = (c * kernel + ky) * kernel + kx;
        for (int oy = 0; oy < out_h; ++oy)
          for (int ox = 0; ox < out_w; ++ox)
            out(c, (oy + ky) * width + ox + kx) += cols(row, oy * out_w + ox);
      }
  return out;
}

// Non-overlapping max pooling; argmax holds the winning input column for
// each (channel, output) cell, flattened channel-major. First maximum wins.
FeatureMaps max_pool(const FeatureMaps& in, int height, int width, int pool,
                     std::vector<Eigen::Index>& argmax) {
  const int ph = height / pool, pw = width / pool;
  FeatureMaps out(in.rows(), ph * pw);
  argmax.assign(static_cast<std::size_t>(in.rows()) * ph * pw, 0);
  for (Eigen::Index c = 0; c < in.rows(); ++c)
    for (int py = 0; py < ph; ++py)
      for (int px = 0; px < pw; ++px) {
        Eigen::Index best = (py * pool) * width + px * pool;
        for (int dy = 0; dy < pool; ++dy)
          for (int dx = 0; dx < pool; ++dx) {
            const Eigen::Index at = (py * pool + dy) * width + px * pool + dx;
            if (in(c, at) > in(c, best)) best = at;
          }
        out(c, py * pw + px) = in(c, best);
        argmax[static_cast<std::size_t>(c * ph * pw + py * pw + px)] = best;
      }
  return out;
}

FeatureMaps unpool(const FeatureMaps& grad_out, Eigen::Index in_cols,
                   const std::vector<Eigen::Index>& argmax) {
  FeatureMaps grad_in = FeatureMaps::Zero(grad_out.rows(), in_cols);
  const Eigen::Index per = grad_out.cols();
  for (Eigen::Index c = 0; c < grad_out.rows(); ++c)
    for (Eigen::Index j = 0; j < per; ++j)
      grad_in(c, argmax[static_cast<std::size_t>(c * per + j)]) += grad_out(c, j);
  return grad_in;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

void fill_uniform(Eigen::MatrixXd& m, double limit, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-limit, limit);
}

int argmax_label(const Eigen::VectorXd& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

void check_input(const CnnShape& shape, const GrayImage& img) {
  if (img.height() != shape.input_height || img.width() != shape.input_width)
    throw Error(ErrorCode::ShapeMismatch,
                "network expects " + std::to_string(shape.input_height) + "x" +
                    std::to_string(shape.input_width) + " input, got " +
                    std::to_string(img.height()) + "x" + std::to_string(img.width()));
}

}  // namespace

void CnnShape::validate() const {
  if (input_height < 1 || input_width < 1 || conv1_filters < 1 || conv2_filters < 1 ||
      conv1_kernel < 1 || conv2_kernel < 1 || pool < 1 || classes < 2)
    throw Error(ErrorCode::ShapeMismatch, "non-positive network dimension");
  if (conv1_height() < 1 || conv1_width() < 1 || pool1_height() < 1 || pool1_width() < 1 ||
      conv2_height() < 1 || conv2_width() < 1 || pool2_height() < 1 || pool2_width() < 1)
    throw Error(ErrorCode::ShapeMismatch, "input too small for the configured layers");
}

CnnModel CnnModel::zeros(const CnnShape& shape) {
  shape.validate();
  CnnModel m;
  m.shape = shape;
  const int k1 = shape.conv1_kernel * shape.conv1_kernel;
  const int k2 = shape.conv2_kernel * shape.conv2_kernel;
  m.conv1_w = Eigen::MatrixXd::Zero(shape.conv1_filters, k1);
  m.conv1_b = Eigen::MatrixXd::Zero(shape.conv1_filters, 1);
  m.conv2_w = Eigen::MatrixXd::Zero(shape.conv2_filters, shape.conv1_filters * k2);
  m.conv2_b = Eigen::MatrixXd::Zero(shape.conv2_filters, 1);
  m.dense_w = Eigen::MatrixXd::Zero(shape.classes, shape.flat_size());
  m.dense_b = Eigen::MatrixXd::Zero(shape.classes, 1);
  return m;
}

CnnModel CnnModel::glorot(const CnnShape& shape, std::uint64_t seed) {
  CnnModel m = zeros(shape);
  Rng rng(derive_seed(seed, "cnn-init"));
  const auto limit = [](double fan_in, double fan_out) { return std::sqrt(6.0 / (fan_in + fan_out)); };
  const double k1 = shape.conv1_kernel * shape.conv1_kernel;
  const double k2 = shape.conv2_kernel * shape.conv2_kernel;
  fill_uniform(m.conv1_w, limit(k1, shape.conv1_filters * k1), rng);
  fill_uniform(m.conv2_w, limit(shape.conv1_filters * k2, shape.conv2_filters * k2), rng);
  fill_uniform(m.dense_w, limit(shape.flat_size(), shape.classes), rng);
  return m;
}

std::array<Eigen::MatrixXd*, 6> CnnModel::tensors() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &dense_w, &dense_b};
}

std::array<const Eigen::MatrixXd*, 6> CnnModel::tensors() const {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &dense_w, &dense_b};
}

Eigen::Index CnnModel::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

FeatureMaps normalize_input(const GrayImage& img) {
  return img.pixels.cast<double>().reshaped<Eigen::RowMajor>().transpose() / 255.0;
}

Eigen::MatrixXd im2col(const FeatureMaps& in, int height, int width, int kernel) {
  const int out_h = height - kernel + 1, out_w = width - kernel + 1;
  const Eigen::Index channels = in.rows();
  Eigen::MatrixXd cols(channels * kernel * kernel, out_h * out_w);
  for (Eigen::Index c = 0; c < channels; ++c)
    for (int ky = 0; ky < kernel; ++ky)
      for (int kx = 0; kx < kernel; ++kx) {
        const Eigen::Index row = (c * kernel + ky) * kernel + kx;
        for (int oy = 0; oy < out_h; ++oy)
          for (int ox = 0; ox < out_w; ++ox)
            cols(row, oy * out_w + ox) = in(c, (oy + ky) * width + ox + kx);
      }
  return cols;
}

CnnTrace cnn_forward(const CnnModel& model, const FeatureMaps& input) {
  const CnnShape& s = model.shape;
  if (input.rows() != 1 || input.cols() != static_cast<Eigen::Index>(s.input_height) * s.input_width)
    throw Error(ErrorCode::ShapeMismatch, "input map does not match the network input size");

  CnnTrace t;
  t.patches1 = im2col(input, s.input_height, s.input_width, s.conv1_kernel);
  t.z1 = model.conv1_w * t.patches1;
  t.z1.colwise() += model.conv1_b.col(0);
  t.a1 = t.z1.cwiseMax(0.0);
  t.p1 = max_pool(t.a1, s.conv1_height(), s.conv1_width(), s.pool, t.argmax1);

  t.patches2 = im2col(t.p1, s.pool1_height(), s.pool1_width(), s.conv2_kernel);
  t.z2 = model.conv2_w * t.patches2;
  t.z2.colwise() += model.conv2_b.col(0);
  t.a2 = t.z2.cwiseMax(0.0);
  t.p2 = max_pool(t.a2, s.conv2_height(), s.conv2_width(), s.pool, t.argmax2);

  t.flat = t.p2.reshaped<Eigen::RowMajor>();
  t.logits = model.dense_w * t.flat + model.dense_b.col(0);
  t.probs = softmax(t.logits);
  return t;
}

CnnTrace cnn_forward(const CnnModel& model, const GrayImage& img) {
  check_input(model.shape, img);
  return cnn_forward(model, normalize_input(img));
}

double cross_entropy(const Eigen::VectorXd& logits, int label) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits[label];
}

double cnn_backward(const CnnModel& model, const CnnTrace& t, int label, CnnModel& grad) {
  const CnnShape& s = model.shape;
  Eigen::VectorXd dlogits = t.probs;
  dlogits[label] -= 1.0;

  grad.dense_w.noalias() += dlogits * t.flat.transpose();
  grad.dense_b.col(0) += dlogits;

  const Eigen::VectorXd dflat = model.dense_w.transpose() * dlogits;
  const FeatureMaps dp2 = dflat.reshaped<Eigen::RowMajor>(t.p2.rows(), t.p2.cols());
  FeatureMaps dz2 = unpool(dp2, t.a2.cols(), t.argmax2);
  dz2 = (t.z2.array() > 0.0).select(dz2, 0.0);

  grad.conv2_w.noalias() += dz2 * t.patches2.transpose();
  grad.conv2_b.col(0) += dz2.rowwise().sum();

  const Eigen::MatrixXd dpatches2 = model.conv2_w.transpose() * dz2;
  const FeatureMaps dp1 =
      col2im(dpatches2, s.conv1_filters, s.pool1_height(), s.pool1_width(), s.conv2_kernel);
  FeatureMaps dz1 = unpool(dp1, t.a1.cols(), t.argmax1);
  dz1 = (t.z1.array() > 0.0).select(dz1, 0.0);

  grad.conv1_w.noalias() += dz1 * t.patches1.transpose();
  grad.conv1_b.col(0) += dz1.rowwise().sum();

  return cross_entropy(t.logits, label);
}

double cnn_loss_and_gradient(const CnnModel& model, std::span<const FeatureMaps> inputs,
                             std::span<const int> labels, CnnModel* grad) {
  if (inputs.size() != labels.size() || inputs.empty())
    throw Error(ErrorCode::LengthMismatch, "inputs and labels must be equally long and non-empty");
  CnnModel local = CnnModel::zeros(model.shape);
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const CnnTrace t = cnn_forward(model, inputs[i]);
    loss += grad ? cnn_backward(model, t, labels[i], local) : cross_entropy(t.logits, labels[i]);
  }
  const double scale = 1.0 / static_cast<double>(inputs.size());
  if (grad) {
    *grad = std::move(local);
    for (auto* g : grad->tensors()) *g *= scale;
  }
  return loss * scale;
}

CnnTrainResult cnn_train(std::span<const GrayImage> train, std::span<const int> train_labels,
                         std::span<const GrayImage> test, std::span<const int> test_labels,
                         const TrainConfig& cfg, const CnnShape& shape) {
  if (train.size() != train_labels.size() || test.size() != test_labels.size())
    throw Error(ErrorCode::LengthMismatch, "images and labels differ in length");
  if (train.empty()) throw Error(ErrorCode::EmptyInput, "no training images");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate < 0.0)
    throw Error(ErrorCode::InvalidArgument, "invalid CNN training configuration");
  bool has0 = false, has1 = false;
  for (int y : train_labels) (y ? has1 : has0) = true;
  if (!(has0 && has1)) throw Error(ErrorCode::InvalidArgument, "CNN training needs both classes");

  std::vector<FeatureMaps> x;
  x.reserve(train.size());
  for (const auto& img : train) {
    check_input(shape, img);
    x.push_back(normalize_input(img));
  }

  CnnTrainResult result{CnnModel::glorot(shape, cfg.seed), {}};
  CnnModel& model = result.model;
  CnnModel grad = CnnModel::zeros(shape);

  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::vector<double> sample_loss(n);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, "cnn-shuffle", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      for (auto* g : grad.tensors()) g->setZero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const CnnTrace t = cnn_forward(model, x[i]);
        sample_loss[i] = cnn_backward(model, t, train_labels[i], grad);
        if (!std::isfinite(sample_loss[i]))
          throw Error(ErrorCode::NonFiniteLoss,
                      "loss diverged in epoch " + std::to_string(epoch) +
                          "; last good epoch " + std::to_string(epoch - 1));
        if (argmax_label(t.probs) == train_labels[i]) ++correct;
      }
      const double step = cfg.learning_rate / static_cast<double>(stop - start);
      auto params = model.tensors();
      auto grads = grad.tensors();
      for (std::size_t p = 0; p < params.size(); ++p) *params[p] -= step * *grads[p];
    }

    EpochStats stats;
    stats.epoch = epoch;
    // Summed in sample order so the value does not depend on the shuffle.
    stats.train_loss = std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0) /
                       static_cast<double>(n);
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    if (test.empty()) {
      stats.test_acc = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < test.size(); ++i)
        if (cnn_predict(model, test[i]).label == test_labels[i]) ++hits;
      stats.test_acc = static_cast<double>(hits) / static_cast<double>(test.size());
    }
    result.history.push_back(stats);
  }
  return result;
}

CnnPrediction cnn_predict(const CnnModel& model, const GrayImage& img) {
  const CnnTrace t = cnn_forward(model, img);
  return {argmax_label(t.probs), t.probs[1]};
}

}  // namespace adprep
