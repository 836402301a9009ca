#include "adprep/trees.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "adprep/error.hpp"
#include "adprep/rng.hpp"

namespace adprep {

namespace {

void check_training_set(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in length");
  if (y.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 training items");
  if (x.cols() < 1) throw Error(ErrorCode::InvalidArgument, "need at least 1 feature");
  for (int label : y)
    if (label != 0 && label != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
  if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "features must be finite");
}

bool single_class(std::span<const int> y) {
  return std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); });
}

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

// Weighted child impurity n * Gini, summed over both children.
double weighted_gini(std::int64_t l0, std::int64_t l1, std::int64_t r0, std::int64_t r1) {
  const auto part = [](std::int64_t a, std::int64_t b) {
    const double n = static_cast<double>(a + b);
    return n - (static_cast<double>(a) * a + static_cast<double>(b) * b) / n;
  };
  return part(l0, l1) + part(r0, r1);
}

// Dense per-feature ranks of the training matrix, shared by every tree of a
// forest. Split search orders node rows by rank instead of by value.
struct RankedColumns {
  Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic> rank;  // rows x features
  std::vector<std::vector<double>> values;  // distinct values per feature, ascending
  std::vector<int> digits;                  // 8-bit radix passes per feature

  explicit RankedColumns(const Eigen::MatrixXd& x)
      : rank(x.rows(), x.cols()), values(static_cast<std::size_t>(x.cols())),
        digits(static_cast<std::size_t>(x.cols())) {
    std::vector<int> order(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
      auto& vals = values[static_cast<std::size_t>(f)];
      for (int r : order) {
        if (vals.empty() || vals.back() < x(r, f)) vals.push_back(x(r, f));
        rank(r, f) = static_cast<std::uint32_t>(vals.size() - 1);
      }
      int d = 1;
      while (d < 4 && (vals.size() - 1) >> (8 * d)) ++d;
      digits[static_cast<std::size_t>(f)] = d;
    }
  }
};

class CartBuilder {
 public:
  CartBuilder(const RankedColumns& ranked, const Eigen::MatrixXd& x, std::span<const int> y,
              const RfConfig& cfg, std::uint64_t seed)
      : ranked_(ranked), x_(x), y_(y), cfg_(cfg), rng_(seed),
        mtry_(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols()))))),
        perm_(static_cast<std::size_t>(x.cols())) {}

  DecisionTree build(std::vector<int> rows) {
    tree_ = {};
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  struct Entry {
    std::uint32_t rank;
    int label;
  };

  int grow(std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::int64_t c1 = 0;
    for (int r : rows) c1 += y_[r];
    const std::int64_t c0 = static_cast<std::int64_t>(rows.size()) - c1;
    {
      TreeNode& node = tree_.nodes[id];
      node.count0 = c0;
      node.count1 = c1;
      node.value = static_cast<double>(c1) / static_cast<double>(c0 + c1);
    }

    const bool pure = c0 == 0 || c1 == 0;
    const bool depth_cap = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
    const bool too_small = static_cast<int>(rows.size()) < 2 * cfg_.min_leaf;
    if (pure || depth_cap || too_small) return id;

    const Split s = find_split(rows);
    if (s.feature < 0) return id;

    std::vector<int> left, right;
    for (int r : rows) (x_(r, s.feature) <= s.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(left, depth + 1);
    const int rr = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[id];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  // Orders entries_ by rank: LSD radix for large nodes, comparison sort for
  // small ones.
  void sort_entries(int digits) {
    if (entries_.size() < 64) {
      std::sort(entries_.begin(), entries_.end(),
                [](const Entry& a, const Entry& b) { return a.rank < b.rank; });
      return;
    }
    scratch_.resize(entries_.size());
    for (int d = 0; d < digits; ++d) {
      const int shift = 8 * d;
      std::array<std::size_t, 257> start{};
      for (const Entry& e : entries_) ++start[((e.rank >> shift) & 0xff) + 1];
      for (std::size_t b = 1; b < start.size(); ++b) start[b] += start[b - 1];
      for (const Entry& e : entries_) scratch_[start[(e.rank >> shift) & 0xff]++] = e;
      entries_.swap(scratch_);
    }
  }

  // Scans features in a random order. At least mtry features are examined;
  // scanning continues past mtry only while none of them admitted a split.
  Split find_split(const std::vector<int>& rows) {
    const int d = static_cast<int>(x_.cols());
    std::iota(perm_.begin(), perm_.end(), 0);
    Split best;
    bool found = false;
    for (int k = 0; k < d; ++k) {
      if (k >= mtry_ && found) break;
      const auto j = k + static_cast<int>(rng_.below(static_cast<std::uint64_t>(d - k)));
      std::swap(perm_[k], perm_[j]);
      const int f = perm_[k];
      const auto& values = ranked_.values[static_cast<std::size_t>(f)];

      entries_.resize(rows.size());
      std::int64_t tot1 = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        entries_[i] = {ranked_.rank(rows[i], f), y_[rows[i]]};
        tot1 += entries_[i].label;
      }
      sort_entries(ranked_.digits[static_cast<std::size_t>(f)]);

      const std::int64_t n = static_cast<std::int64_t>(entries_.size());
      const std::int64_t tot0 = n - tot1;
      std::int64_t l0 = 0, l1 = 0;
      for (std::int64_t p = 0; p + 1 < n; ++p) {
        (entries_[p].label ? l1 : l0) += 1;
        const std::uint32_t a = entries_[p].rank, b = entries_[p + 1].rank;
        if (a == b) continue;
        const std::int64_t nl = p + 1;
        if (nl < cfg_.min_leaf || n - nl < cfg_.min_leaf) continue;
        const double imp = weighted_gini(l0, l1, tot0 - l0, tot1 - l1);
        if (!found || imp < best.impurity) {
          best = {f, midpoint(values[a], values[b]), imp};
          found = true;
        }
      }
    }
    return best;
  }

  const RankedColumns& ranked_;
  const Eigen::MatrixXd& x_;
  std::span<const int> y_;
  const RfConfig& cfg_;
  Rng rng_;
  int mtry_;
  std::vector<int> perm_;
  std::vector<Entry> entries_, scratch_;
  DecisionTree tree_;
};

double mean_log_loss(const Eigen::VectorXd& margin, std::span<const int> y) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    // log(1 + exp(-s)) with s = +margin for y=1, -margin for y=0.
    const double s = y[i] ? margin[i] : -margin[i];
    sum += s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
  }
  return sum / static_cast<double>(margin.size());
}

class BoostedTreeBuilder {
 public:
  BoostedTreeBuilder(const Eigen::MatrixXd& x, const GbtConfig& cfg) : x_(x), cfg_(cfg) {
    const auto n = static_cast<int>(x.rows());
    sorted_.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      auto& order = sorted_[static_cast<std::size_t>(f)];
      order.resize(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = x(a, f), vb = x(b, f);
        return va < vb || (va == vb && a < b);
      });
    }
    member_.assign(static_cast<std::size_t>(n), 0);
  }

  /// Grows one tree for the given gradients; `leaf_out[i]` receives the
  /// contribution of the tree to row i.
  DecisionTree build(const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                     Eigen::VectorXd& leaf_out) {
    g_ = &g;
    h_ = &h;
    tree_ = {};
    std::vector<int> rows(static_cast<std::size_t>(x_.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    leaf_out_ = &leaf_out;
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  int grow(const std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double gsum = 0.0, hsum = 0.0;
    for (int r : rows) {
      gsum += (*g_)[r];
      hsum += (*h_)[r];
    }

    Split s;
    if (depth < cfg_.max_depth && rows.size() >= 2) s = find_split(rows, gsum, hsum);
    if (s.feature < 0) {
      const double w = cfg_.eta * (-gsum / (hsum + cfg_.lambda));
      tree_.nodes[id].value = w;
      for (int r : rows) (*leaf_out_)[r] = w;
      return id;
    }

    std::vector<int> left, right;
    for (int r : rows) (x_(r, s.feature) <= s.threshold ? left : right).push_back(r);
    const int l = grow(left, depth + 1);
    const int rr = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[id];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  Split find_split(const std::vector<int>& rows, double gsum, double hsum) {
    for (int r : rows) member_[static_cast<std::size_t>(r)] = 1;
    Split best;
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      double gl = 0.0, hl = 0.0;
      int prev = -1;
      for (int r : sorted_[f]) {
        if (!member_[static_cast<std::size_t>(r)]) continue;
        if (prev >= 0) {
          const double a = x_(prev, static_cast<Eigen::Index>(f));
          const double b = x_(r, static_cast<Eigen::Index>(f));
          if (a < b) {
            const double gain =
                gbt_split_gain(gl, hl, gsum - gl, hsum - hl, cfg_.lambda, cfg_.gamma);
            if (gain > best.gain) best = {static_cast<int>(f), midpoint(a, b), gain};
          }
        }
        gl += (*g_)[r];
        hl += (*h_)[r];
        prev = r;
      }
    }
    for (int r : rows) member_[static_cast<std::size_t>(r)] = 0;
    return best;
  }

  const Eigen::MatrixXd& x_;
  const GbtConfig& cfg_;
  std::vector<std::vector<int>> sorted_;
  std::vector<char> member_;
  const Eigen::VectorXd* g_ = nullptr;
  const Eigen::VectorXd* h_ = nullptr;
  Eigen::VectorXd* leaf_out_ = nullptr;
  DecisionTree tree_;
};

void check_predict_dim(int expected, Eigen::Index got) {
  if (got != expected)
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(expected) +
                                                  " features, got " + std::to_string(got));
}

}  // namespace

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return deepest;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

RandomForestModel rf_train(const Eigen::MatrixXd& x, std::span<const int> y,
                           const TrainConfig& cfg) {
  check_training_set(x, y);
  if (cfg.rf.n_trees < 1 || cfg.rf.min_leaf < 1 || cfg.rf.max_depth < 0)
    throw Error(ErrorCode::InvalidArgument, "invalid random forest configuration");

  RandomForestModel model;
  model.n_features = static_cast<int>(x.cols());
  model.single_class = single_class(y);
  const int n = static_cast<int>(x.rows());
  const int n_trees = model.single_class ? 1 : cfg.rf.n_trees;
  const RankedColumns ranked(x);
  for (int t = 0; t < n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(cfg.seed, "rf-tree", static_cast<std::uint64_t>(t));
    Rng sampler(derive_seed(tree_seed, "bootstrap"));
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (cfg.rf.bootstrap) {
      for (auto& r : rows) r = static_cast<int>(sampler.below(static_cast<std::uint64_t>(n)));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    CartBuilder builder(ranked, x, y, cfg.rf, derive_seed(tree_seed, "features"));
    model.trees.push_back(builder.build(std::move(rows)));
  }
  return model;
}

Prediction rf_predict(const RandomForestModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_predict_dim(model.n_features, x.size());
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.evaluate(x);
  const double prob = sum / static_cast<double>(model.trees.size());
  return {prob >= 0.5 ? 1 : 0, prob};
}

std::vector<Prediction> rf_predict_rows(const RandomForestModel& model, const Eigen::MatrixXd& x) {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(rf_predict(model, Eigen::VectorXd(x.row(i).transpose())));
  return out;
}

double gbt_split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  const double g = gl + gr, h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma;
}

GbtModel gbt_train(const Eigen::MatrixXd& x, std::span<const int> y, const TrainConfig& cfg,
                   GbtTrainLog* log) {
  check_training_set(x, y);
  const GbtConfig& gc = cfg.gbt;
  if (gc.n_rounds < 0 || gc.max_depth < 0 || !(gc.lambda > 0.0) || gc.eta < 0.0 || gc.gamma < 0.0)
    throw Error(ErrorCode::InvalidArgument, "invalid boosting configuration");

  GbtModel model;
  model.n_features = static_cast<int>(x.cols());
  if (single_class(y)) {
    model.single_class = true;
    model.constant_label = y.front();
    return model;
  }

  const Eigen::Index n = x.rows();
  const double pos = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  model.base_score = std::log(pos / (1.0 - pos));

  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, model.base_score);
  Eigen::VectorXd g(n), h(n), contribution(n);
  if (log) log->train_loss = {mean_log_loss(margin, y)};

  BoostedTreeBuilder builder(x, gc);
  for (int round = 0; round < gc.n_rounds; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - y[i];
      h[i] = p * (1.0 - p);
    }
    model.trees.push_back(builder.build(g, h, contribution));
    margin += contribution;
    if (log) log->train_loss.push_back(mean_log_loss(margin, y));
  }
  return model;
}

Prediction gbt_predict(const GbtModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_predict_dim(model.n_features, x.size());
  if (model.single_class) return {model.constant_label, static_cast<double>(model.constant_label)};
  const double prob = sigmoid(model.margin(x));
  return {prob >= 0.5 ? 1 : 0, prob};
}

std::vector<Prediction> gbt_predict_rows(const GbtModel& model, const Eigen::MatrixXd& x) {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out.push_back(gbt_predict(model, Eigen::VectorXd(x.row(i).transpose())));
  return out;
}

}  // namespace adprep
