#ifndef ADPREP_DATASET_HPP
#define ADPREP_DATASET_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "adprep/image.hpp"

namespace adprep {

inline constexpr int kLabelNL = 0;
inline constexpr int kLabelAD = 1;

constexpr std::string_view class_name(int label) { return label == kLabelAD ? "AD" : "NL"; }

/// One labeled slice together with where it came from.
struct Sample {
  GrayImage image;
  int label = kLabelNL;
  int volume = 0;
  int slice = 0;
};

struct Dataset {
  std::vector<Sample> items;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  std::vector<int> labels() const;
};

/// Per-class shuffled split; round-half-up of n_c * test_fraction items of
/// each class go to test. Both index lists come back sorted.
void stratified_split(Dataset& data, double test_fraction, std::uint64_t seed);

/// Area-average resample to height x width, then scale to [0,1]. Output is
/// row-major (row * width + col).
Eigen::VectorXd featurize(const GrayImage& img, int width = 16, int height = 16);

/// One featurized row per selected item.
Eigen::MatrixXd feature_matrix(std::span<const Sample> items, std::span<const std::size_t> rows,
                               int width = 16, int height = 16);

std::vector<int> gather_labels(std::span<const Sample> items, std::span<const std::size_t> rows);

}  // namespace adprep

#endif  // ADPREP_DATASET_HPP
