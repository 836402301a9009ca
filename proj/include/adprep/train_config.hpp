#ifndef ADPREP_TRAIN_CONFIG_HPP
#define ADPREP_TRAIN_CONFIG_HPP

#include <cstdint>

namespace adprep {

struct RfConfig {
  int n_trees = 100;
  int max_depth = 12;  // 0 = unlimited
  int min_leaf = 2;
  bool bootstrap = true;
};

struct GbtConfig {
  int n_rounds = 100;
  int max_depth = 4;
  double lambda = 1.0;
  double gamma = 0.0;
  double eta = 0.1;
};

struct TrainConfig {
  int epochs = 40;
  double learning_rate = 0.05;
  int batch_size = 32;
  std::uint64_t seed = 42;
  RfConfig rf;
  GbtConfig gbt;
};

}  // namespace adprep

#endif  // ADPREP_TRAIN_CONFIG_HPP
