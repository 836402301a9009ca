#include "adprep/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "adprep/error.hpp"
#include "adprep/rng.hpp"

namespace adprep {

namespace {

// Row i of the result averages the source cells overlapping
// [i * src/dst, (i + 1) * src/dst).
Eigen::MatrixXd area_weights(int dst, int src) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dst, src);
  const double step = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * step, hi = (i + 1) * step;
    for (int j = static_cast<int>(std::floor(lo)); j < src && j < hi; ++j) {
      const double overlap = std::min<double>(hi, j + 1) - std::max<double>(lo, j);
      if (overlap > 0) w(i, j) = overlap;
    }
    w.row(i) /= w.row(i).sum();
  }
  return w;
}

}  // namespace

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.label);
  return out;
}

void stratified_split(Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "test_fraction must be in [0,1]");
  data.train.clear();
  data.test.clear();
  for (int label : {kLabelNL, kLabelAD}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.items.size(); ++i)
      if (data.items[i].label == label) idx.push_back(i);
    Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span<std::size_t>(idx));
    const auto n_test = static_cast<std::size_t>(std::floor(idx.size() * test_fraction + 0.5));
    data.test.insert(data.test.end(), idx.begin(), idx.begin() + n_test);
    data.train.insert(data.train.end(), idx.begin() + n_test, idx.end());
  }
  std::sort(data.train.begin(), data.train.end());
  std::sort(data.test.begin(), data.test.end());
}

Eigen::VectorXd featurize(const GrayImage& img, int width, int height) {
  if (width < 1 || height < 1 || img.size() == 0)
    throw Error(ErrorCode::InvalidArgument, "featurize needs a non-empty image and target");
  const Eigen::MatrixXd src = img.pixels.cast<double>();
  Eigen::MatrixXd out;
  if (img.height() == height && img.width() == width) {
    out = src;
  } else {
    out = area_weights(height, img.height()) * src * area_weights(width, img.width()).transpose();
  }
  out /= 255.0;
  return out.reshaped<Eigen::RowMajor>();
}

Eigen::MatrixXd feature_matrix(std::span<const Sample> items, std::span<const std::size_t> rows,
                               int width, int height) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), width * height);
  for (std::size_t r = 0; r < rows.size(); ++r)
    x.row(static_cast<Eigen::Index>(r)) = featurize(items[rows[r]].image, width, height).transpose();
  return x;
}

std::vector<int> gather_labels(std::span<const Sample> items, std::span<const std::size_t> rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (auto r : rows) y.push_back(items[r].label);
  return y;
}

}  // namespace adprep
