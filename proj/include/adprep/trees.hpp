#ifndef ADPREP_TREES_HPP
#define ADPREP_TREES_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "adprep/train_config.hpp"

namespace adprep {

struct Prediction {
  int label = 0;
  double prob = 0.0;  // P(label == 1)
};

/// Internal nodes send x[feature] <= threshold left. Leaves carry `value`:
/// the class-1 frequency for forest trees, the shrunken leaf weight for
/// boosted trees. count0/count1 are training counts at the node.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::int64_t count0 = 0;
  std::int64_t count1 = 0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double evaluate(const Row& x) const {
    int i = 0;
    while (!nodes[i].is_leaf())
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
  int depth() const;
};

struct RandomForestModel {
  int n_features = 0;
  std::vector<DecisionTree> trees;
  bool single_class = false;
};

/// CART forest: bootstrap per tree, Gini splits over ceil(sqrt(d)) random
/// features per node, exact threshold search at midpoints. Tree t draws from
/// its own stream derived from (seed, t).
RandomForestModel rf_train(const Eigen::MatrixXd& x, std::span<const int> y,
                           const TrainConfig& cfg);

/// prob = mean leaf class-1 frequency; label = prob >= 0.5.
Prediction rf_predict(const RandomForestModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
std::vector<Prediction> rf_predict_rows(const RandomForestModel& model, const Eigen::MatrixXd& x);

/// Second-order split gain:
///   0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
double gbt_split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma);

struct GbtModel {
  int n_features = 0;
  double base_score = 0.0;  // logit
  std::vector<DecisionTree> trees;
  bool single_class = false;
  int constant_label = 0;  // only meaningful with single_class

  /// Raw additive score (logit) before the sigmoid.
  template <typename Row>
  double margin(const Row& x) const {
    double m = base_score;
    for (const auto& t : trees) m += t.evaluate(x);
    return m;
  }
};

struct GbtTrainLog {
  std::vector<double> train_loss;  // mean log-loss after each round (index 0 = base only)
};

/// Logistic-loss boosting with exact greedy splits, leaf weight -G/(H+lambda)
/// scaled by eta. Fully deterministic: no sampling is involved.
GbtModel gbt_train(const Eigen::MatrixXd& x, std::span<const int> y, const TrainConfig& cfg,
                   GbtTrainLog* log = nullptr);

Prediction gbt_predict(const GbtModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
std::vector<Prediction> gbt_predict_rows(const GbtModel& model, const Eigen::MatrixXd& x);

double sigmoid(double z);

}  // namespace adprep

#endif  // ADPREP_TREES_HPP
