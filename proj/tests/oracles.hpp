// Independent reference implementations used by the unit and acceptance
// tests. None of them calls into the code they check.
#ifndef ADPREP_TESTS_ORACLES_HPP
#define ADPREP_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "adprep/cnn.hpp"
#include "adprep/image.hpp"
#include "adprep/rng.hpp"

namespace oracle {

// Equalization by counting: for every pixel, how many pixels are <= it,
// mapped through the textbook CDF formula with round-half-up in doubles.
inline adprep::GrayImage equalize(const adprep::GrayImage& img) {
  const auto* p = img.pixels.data();
  const long n = static_cast<long>(img.pixels.size());
  long cdf_min = n;
  for (long i = 0; i < n; ++i) {
    long c = 0;
    for (long j = 0; j < n; ++j) c += p[j] <= p[i];
    cdf_min = std::min(cdf_min, c);
  }
  adprep::GrayImage out = img;
  if (cdf_min == n) return out;
  for (long i = 0; i < n; ++i) {
    long c = 0;
    for (long j = 0; j < n; ++j) c += p[j] <= p[i];
    const double v = static_cast<double>(c - cdf_min) * 255.0 / static_cast<double>(n - cdf_min);
    out.pixels.data()[i] = static_cast<std::uint8_t>(std::floor(v + 0.5));
  }
  return out;
}

// Forward pass with plain nested loops over [channel][y][x] arrays.
inline Eigen::VectorXd direct_logits(const adprep::CnnModel& m, const adprep::GrayImage& img) {
  const adprep::CnnShape& s = m.shape;
  using Grid = std::vector<std::vector<std::vector<double>>>;
  const auto grid = [](int c, int h, int w) {
    return Grid(static_cast<std::size_t>(c),
                std::vector<std::vector<double>>(static_cast<std::size_t>(h),
                                                 std::vector<double>(static_cast<std::size_t>(w))));
  };
  const auto conv_relu = [&](const Grid& in, const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                             int k) {
    const int cin = static_cast<int>(in.size()), h = static_cast<int>(in[0].size()),
              wd = static_cast<int>(in[0][0].size());
    Grid out = grid(static_cast<int>(w.rows()), h - k + 1, wd - k + 1);
    for (int f = 0; f < w.rows(); ++f)
      for (int y = 0; y + k <= h; ++y)
        for (int x = 0; x + k <= wd; ++x) {
          double acc = b(f, 0);
          for (int c = 0; c < cin; ++c)
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx) acc += w(f, (c * k + dy) * k + dx) * in[c][y + dy][x + dx];
          out[f][y][x] = std::max(acc, 0.0);
        }
    return out;
  };
  const auto pool = [&](const Grid& in) {
    const int h = static_cast<int>(in[0].size()) / s.pool, wd = static_cast<int>(in[0][0].size()) / s.pool;
    Grid out = grid(static_cast<int>(in.size()), h, wd);
    for (std::size_t c = 0; c < in.size(); ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
          double best = -INFINITY;
          for (int dy = 0; dy < s.pool; ++dy)
            for (int dx = 0; dx < s.pool; ++dx) best = std::max(best, in[c][y * s.pool + dy][x * s.pool + dx]);
          out[c][y][x] = best;
        }
    return out;
  };

  Grid in = grid(1, s.input_height, s.input_width);
  for (int y = 0; y < s.input_height; ++y)
    for (int x = 0; x < s.input_width; ++x) in[0][y][x] = img.pixels(y, x) / 255.0;
  const Grid p1 = pool(conv_relu(in, m.conv1_w, m.conv1_b, s.conv1_kernel));
  const Grid p2 = pool(conv_relu(p1, m.conv2_w, m.conv2_b, s.conv2_kernel));

  std::vector<double> flat;
  for (const auto& ch : p2)
    for (const auto& row : ch) flat.insert(flat.end(), row.begin(), row.end());
  Eigen::VectorXd logits(m.dense_w.rows());
  for (Eigen::Index o = 0; o < m.dense_w.rows(); ++o) {
    double acc = m.dense_b(o, 0);
    for (std::size_t j = 0; j < flat.size(); ++j) acc += m.dense_w(o, static_cast<Eigen::Index>(j)) * flat[j];
    logits[o] = acc;
  }
  return logits;
}

inline adprep::GrayImage random_image(adprep::Rng& rng, int h, int w) {
  adprep::GrayImage img(h, w);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i)
    img.pixels.data()[i] = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// 6x6 input, conv 3x3 -> 4x4, pool -> 2x2, conv 1x1 -> 2x2, pool -> 1x1.
inline adprep::CnnShape reduced_shape() {
  adprep::CnnShape s;
  s.input_height = 6;
  s.input_width = 6;
  s.conv1_filters = 3;
  s.conv1_kernel = 3;
  s.conv2_filters = 4;
  s.conv2_kernel = 1;
  return s;
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|) over every
// parameter, using central differences on the mean batch loss. Entries
// where both gradients are below `floor` in magnitude count as agreeing.
inline double max_gradient_error(std::uint64_t seed, double eps = 1e-4, double floor = 1e-9) {
  const adprep::CnnShape shape = reduced_shape();
  adprep::CnnModel model = adprep::CnnModel::glorot(shape, seed);
  adprep::Rng rng(seed ^ 0x5eedULL);
  for (auto* t : model.tensors())
    for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] += rng.uniform(-0.3, 0.3);

  std::vector<adprep::FeatureMaps> inputs;
  std::vector<int> labels;
  for (int k = 0; k < 3; ++k) {
    inputs.push_back(adprep::normalize_input(random_image(rng, shape.input_height, shape.input_width)));
    labels.push_back(k % 2);
  }

  adprep::CnnModel grad;
  adprep::cnn_loss_and_gradient(model, inputs, labels, &grad);

  double worst = 0.0;
  auto params = model.tensors();
  auto grads = grad.tensors();
  for (std::size_t p = 0; p < params.size(); ++p)
    for (Eigen::Index i = 0; i < params[p]->size(); ++i) {
      double& w = params[p]->data()[i];
      const double saved = w;
      w = saved + eps;
      const double up = adprep::cnn_loss_and_gradient(model, inputs, labels, nullptr);
      w = saved - eps;
      const double down = adprep::cnn_loss_and_gradient(model, inputs, labels, nullptr);
      w = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads[p]->data()[i];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale < floor) continue;
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  return worst;
}

}  // namespace oracle

#endif  // ADPREP_TESTS_ORACLES_HPP
