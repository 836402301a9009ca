#ifndef ADPREP_MODEL_IO_HPP
#define ADPREP_MODEL_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "adprep/cnn.hpp"
#include "adprep/trees.hpp"

namespace adprep {

using AnyModel = std::variant<RandomForestModel, GbtModel, CnnModel>;

/// A trained model plus what is needed to feed it: the data stage it was
/// trained on and the tree-learner feature grid.
struct ModelFile {
  std::string stage = "after";
  int feature_width = 16;
  int feature_height = 16;
  AnyModel model;
};

std::string_view model_kind(const AnyModel& model);  // "rf", "gbt" or "cnn"

/// Versioned JSON. Doubles are written in shortest round-trip form, so
/// encode/decode is exact. Decoding failures throw MalformedModel.
std::string encode_model(const ModelFile& file);
ModelFile decode_model(std::string_view text);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace adprep

#endif  // ADPREP_MODEL_IO_HPP
