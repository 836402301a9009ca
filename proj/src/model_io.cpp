#include "adprep/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adprep/error.hpp"

namespace adprep {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols)
    throw Error(ErrorCode::MalformedModel, "tensor shape does not match the network shape");
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw Error(ErrorCode::MalformedModel, "tensor has the wrong number of entries");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
  return m;
}

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.count0, n.count1});
  return nodes;
}

DecisionTree tree_from_json(const json& j, int n_features) {
  DecisionTree tree;
  for (const auto& a : j) {
    TreeNode n;
    n.feature = a.at(0).get<int>();
    n.threshold = a.at(1).get<double>();
    n.left = a.at(2).get<int>();
    n.right = a.at(3).get<int>();
    n.value = a.at(4).get<double>();
    n.count0 = a.at(5).get<std::int64_t>();
    n.count1 = a.at(6).get<std::int64_t>();
    tree.nodes.push_back(n);
  }
  const auto size = static_cast<int>(tree.nodes.size());
  if (size == 0) throw Error(ErrorCode::MalformedModel, "empty tree");
  for (int i = 0; i < size; ++i) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) continue;
    if (n.feature >= n_features || n.left <= i || n.right <= i || n.left >= size || n.right >= size)
      throw Error(ErrorCode::MalformedModel, "tree node " + std::to_string(i) + " is inconsistent");
  }
  return tree;
}

json trees_to_json(const std::vector<DecisionTree>& trees) {
  json out = json::array();
  for (const auto& t : trees) out.push_back(tree_to_json(t));
  return out;
}

std::vector<DecisionTree> trees_from_json(const json& j, int n_features) {
  std::vector<DecisionTree> trees;
  for (const auto& t : j) trees.push_back(tree_from_json(t, n_features));
  return trees;
}

json shape_to_json(const CnnShape& s) {
  return {{"input_height", s.input_height}, {"input_width", s.input_width},
          {"conv1_filters", s.conv1_filters}, {"conv1_kernel", s.conv1_kernel},
          {"conv2_filters", s.conv2_filters}, {"conv2_kernel", s.conv2_kernel},
          {"pool", s.pool},                   {"classes", s.classes}};
}

CnnShape shape_from_json(const json& j) {
  CnnShape s;
  s.input_height = j.at("input_height").get<int>();
  s.input_width = j.at("input_width").get<int>();
  s.conv1_filters = j.at("conv1_filters").get<int>();
  s.conv1_kernel = j.at("conv1_kernel").get<int>();
  s.conv2_filters = j.at("conv2_filters").get<int>();
  s.conv2_kernel = j.at("conv2_kernel").get<int>();
  s.pool = j.at("pool").get<int>();
  s.classes = j.at("classes").get<int>();
  return s;
}

struct ToJson {
  json operator()(const RandomForestModel& m) const {
    return {{"n_features", m.n_features}, {"single_class", m.single_class},
            {"trees", trees_to_json(m.trees)}};
  }
  json operator()(const GbtModel& m) const {
    return {{"n_features", m.n_features},         {"base_score", m.base_score},
            {"single_class", m.single_class},     {"constant_label", m.constant_label},
            {"trees", trees_to_json(m.trees)}};
  }
  json operator()(const CnnModel& m) const {
    json tensors = json::array();
    for (const auto* t : m.tensors()) tensors.push_back(matrix_to_json(*t));
    return {{"shape", shape_to_json(m.shape)}, {"tensors", std::move(tensors)}};
  }
};

AnyModel model_from_json(std::string_view kind, const json& j) {
  if (kind == "rf") {
    RandomForestModel m;
    m.n_features = j.at("n_features").get<int>();
    m.single_class = j.at("single_class").get<bool>();
    m.trees = trees_from_json(j.at("trees"), m.n_features);
    if (m.trees.empty()) throw Error(ErrorCode::MalformedModel, "forest has no trees");
    return m;
  }
  if (kind == "gbt") {
    GbtModel m;
    m.n_features = j.at("n_features").get<int>();
    m.base_score = j.at("base_score").get<double>();
    m.single_class = j.at("single_class").get<bool>();
    m.constant_label = j.at("constant_label").get<int>();
    m.trees = trees_from_json(j.at("trees"), m.n_features);
    return m;
  }
  if (kind == "cnn") {
    const CnnShape shape = shape_from_json(j.at("shape"));
    try {
      shape.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedModel, e.what());
    }
    CnnModel m = CnnModel::zeros(shape);
    const auto& tensors = j.at("tensors");
    if (tensors.size() != 6) throw Error(ErrorCode::MalformedModel, "expected 6 tensors");
    auto dst = m.tensors();
    for (std::size_t i = 0; i < dst.size(); ++i)
      *dst[i] = matrix_from_json(tensors[i], dst[i]->rows(), dst[i]->cols());
    return m;
  }
  throw Error(ErrorCode::MalformedModel, "unknown model kind '" + std::string(kind) + "'");
}

}  // namespace

std::string_view model_kind(const AnyModel& model) {
  static constexpr std::string_view names[] = {"rf", "gbt", "cnn"};
  return names[model.index()];
}

std::string encode_model(const ModelFile& file) {
  const json doc = {{"format", "adprep-model"},
                    {"version", kFormatVersion},
                    {"kind", model_kind(file.model)},
                    {"stage", file.stage},
                    {"feature_width", file.feature_width},
                    {"feature_height", file.feature_height},
                    {"model", std::visit(ToJson{}, file.model)}};
  return doc.dump() + "\n";
}

ModelFile decode_model(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "adprep-model")
      throw Error(ErrorCode::MalformedModel, "not a model file");
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion)
      throw Error(ErrorCode::MalformedModel, "unsupported model version " + std::to_string(version));
    ModelFile file;
    file.stage = doc.at("stage").get<std::string>();
    file.feature_width = doc.at("feature_width").get<int>();
    file.feature_height = doc.at("feature_height").get<int>();
    file.model = model_from_json(doc.at("kind").get<std::string>(), doc.at("model"));
    return file;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedModel, e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  out << encode_model(file);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return decode_model(text.str());
}

}  // namespace adprep
