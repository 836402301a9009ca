#include <doctest.h>

#include <cmath>

#include "adprep/cnn.hpp"
#include "adprep/error.hpp"
#include "oracles.hpp"

using namespace adprep;

namespace {

CnnShape tiny_shape() {
  CnnShape s;
  s.input_height = 10;
  s.input_width = 10;
  s.conv1_filters = 2;
  s.conv2_filters = 3;
  return s;
}

std::vector<GrayImage> blobs(Rng& rng, int n, std::vector<int>& labels, int size) {
  std::vector<GrayImage> out;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    GrayImage img(size, size, 0);
    for (Eigen::Index k = 0; k < img.pixels.size(); ++k)
      img.pixels.data()[k] = static_cast<std::uint8_t>(rng.below(40) + (label ? 120 : 0));
    out.push_back(img);
    labels.push_back(label);
  }
  return out;
}

}  // namespace

TEST_CASE("default shape bookkeeping") {
  const CnnShape s;
  CHECK(s.conv1_height() == 30);
  CHECK(s.pool1_height() == 15);
  CHECK(s.conv2_height() == 13);
  CHECK(s.pool2_height() == 6);
  CHECK(s.flat_size() == 576);
  const CnnModel m = CnnModel::zeros(s);
  CHECK(m.parameter_count() == 8 * 9 + 8 + 16 * 72 + 16 + 2 * 576 + 2);
}

TEST_CASE("zero weights give a uniform softmax") {
  const CnnModel m = CnnModel::zeros(CnnShape{});
  Rng rng(1);
  const CnnTrace t = cnn_forward(m, oracle::random_image(rng, 32, 32));
  CHECK(t.probs[0] == doctest::Approx(0.5));
  CHECK(t.probs[1] == doctest::Approx(0.5));
  CHECK(cross_entropy(t.logits, 0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("a 1x1 unit filter passes its input through") {
  CnnShape s;
  s.input_height = 4;
  s.input_width = 4;
  s.conv1_filters = 1;
  s.conv1_kernel = 1;
  s.conv2_filters = 1;
  s.conv2_kernel = 1;
  s.pool = 1;
  CnnModel m = CnnModel::zeros(s);
  m.conv1_w(0, 0) = 1.0;
  Rng rng(2);
  const GrayImage img = oracle::random_image(rng, 4, 4);
  const CnnTrace t = cnn_forward(m, img);
  CHECK(t.a1.isApprox(normalize_input(img), 0.0));
  CHECK(t.p1 == t.a1);
}

TEST_CASE("forward pass matches direct convolution") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    CnnModel m = CnnModel::glorot(CnnShape{}, 100 + trial);
    for (auto* b : {&m.conv1_b, &m.conv2_b, &m.dense_b})
      for (Eigen::Index i = 0; i < b->size(); ++i) b->data()[i] = rng.uniform(-0.1, 0.1);
    const GrayImage img = oracle::random_image(rng, 32, 32);
    const Eigen::VectorXd fast = cnn_forward(m, img).logits;
    const Eigen::VectorXd slow = oracle::direct_logits(m, img);
    CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("property: softmax outputs form a distribution") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const CnnModel m = CnnModel::glorot(CnnShape{}, static_cast<std::uint64_t>(trial));
    const CnnTrace t = cnn_forward(m, oracle::random_image(rng, 32, 32));
    CHECK(std::abs(t.probs.sum() - 1.0) < 1e-9);
    CHECK((t.probs.array() > 0.0).all());
    CHECK((t.probs.array() < 1.0).all());
  }
}

TEST_CASE("analytic gradients agree with central differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CAPTURE(seed);
    CHECK(oracle::max_gradient_error(seed) < 1e-4);
  }
}

TEST_CASE("shape errors") {
  const CnnModel m = CnnModel::zeros(CnnShape{});
  CHECK_THROWS_WITH_AS(cnn_forward(m, GrayImage(16, 32)), doctest::Contains("ShapeMismatch"), Error);
  CnnShape bad;
  bad.input_height = 5;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(CnnModel::zeros(bad), Error);
}

TEST_CASE("training with a zero learning rate changes nothing") {
  Rng rng(5);
  std::vector<int> ytr, yte;
  const auto train = blobs(rng, 20, ytr, 10);
  const auto test = blobs(rng, 6, yte, 10);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 0.0;
  cfg.batch_size = 7;
  const auto r = cnn_train(train, ytr, test, yte, cfg, tiny_shape());
  const CnnModel init = CnnModel::glorot(tiny_shape(), cfg.seed);
  for (std::size_t p = 0; p < 6; ++p) CHECK(*r.model.tensors()[p] == *init.tensors()[p]);
  REQUIRE(r.history.size() == 4);
  for (const auto& e : r.history) {
    CHECK(e.train_loss == r.history[0].train_loss);
    CHECK(e.train_acc == r.history[0].train_acc);
    CHECK(e.test_acc == r.history[0].test_acc);
  }
}

TEST_CASE("training is deterministic and learns an easy problem") {
  Rng rng(6);
  std::vector<int> ytr, yte;
  const auto train = blobs(rng, 40, ytr, 10);
  const auto test = blobs(rng, 10, yte, 10);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.1;
  const auto a = cnn_train(train, ytr, test, yte, cfg, tiny_shape());
  const auto b = cnn_train(train, ytr, test, yte, cfg, tiny_shape());
  for (std::size_t p = 0; p < 6; ++p) CHECK(*a.model.tensors()[p] == *b.model.tensors()[p]);
  for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].train_loss == b.history[e].train_loss);
  CHECK(a.history.back().train_loss < a.history.front().train_loss);
  CHECK(a.history.back().test_acc == 1.0);

  const auto p = cnn_predict(a.model, test[1]);
  CHECK(p.label == yte[1]);
  CHECK(p.prob > 0.5);
}

TEST_CASE("training without test data reports NaN accuracy") {
  Rng rng(7);
  std::vector<int> y;
  const auto train = blobs(rng, 8, y, 10);
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto r = cnn_train(train, y, {}, {}, cfg, tiny_shape());
  CHECK(std::isnan(r.history[0].test_acc));
  CHECK_THROWS_AS(cnn_train(train, std::vector<int>(8, 1), {}, {}, cfg, tiny_shape()), Error);
}

TEST_CASE("divergence is reported as a non-finite loss") {
  Rng rng(8);
  std::vector<int> y;
  const auto train = blobs(rng, 8, y, 10);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 1e200;
  CHECK_THROWS_WITH_AS(cnn_train(train, y, {}, {}, cfg, tiny_shape()), doctest::Contains("NonFiniteLoss"),
                       Error);
}
