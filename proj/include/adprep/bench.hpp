#ifndef ADPREP_BENCH_HPP
#define ADPREP_BENCH_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adprep/dataset.hpp"
#include "adprep/model_io.hpp"
#include "adprep/preprocess.hpp"
#include "adprep/report.hpp"
#include "adprep/train_config.hpp"

namespace adprep {

enum class Stage { Before, After };

std::string_view stage_name(Stage stage);
/// "before" or "after"; anything else is InvalidArgument.
Stage parse_stage(std::string_view name);

/// Sorted *.nii files directly under dir/NL and dir/AD, NL first.
/// Throws EmptyInput ("no input volumes") when there are none.
struct LabeledPath {
  std::filesystem::path path;
  int label = kLabelNL;
};
std::vector<LabeledPath> list_labeled_volumes(const std::filesystem::path& data_dir);

struct ManifestRow {
  std::string volume;
  int slice = 0;
  bool kept = false;
  double foreground = 0.0;
};

/// All slices of a data directory in both stages. `raw` holds the quantized
/// slices and the one train/test split both stages share; `processed`
/// mirrors raw.items with pipeline output, meaningful where `kept` is set.
struct SliceCorpus {
  Dataset raw;
  std::vector<Sample> processed;
  std::vector<char> kept;
  std::vector<std::string> volume_names;  // indexed by Sample::volume
  std::vector<ManifestRow> manifest;
  std::vector<std::vector<StageTiming>> timings;  // per volume
};

SliceCorpus load_corpus(const std::filesystem::path& data_dir, const PipelineConfig& pipeline,
                        std::uint64_t seed, double test_fraction = 0.2);

struct StageView {
  std::span<const Sample> items;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// The after stage keeps only the split members that survived clipping.
StageView stage_view(const SliceCorpus& corpus, Stage stage);

struct TrainedModel {
  ModelFile file;
  std::vector<EpochStats> history;  // cnn only
  double seconds = 0.0;             // training only, monotonic clock
};

/// kind is "rf", "gbt" or "cnn". The CNN input size follows the slices.
TrainedModel train_model(std::string_view kind, const StageView& view, Stage stage,
                         const TrainConfig& cfg);

std::vector<int> predict_labels(const ModelFile& file, std::span<const Sample> items,
                                std::span<const std::size_t> rows);

struct BenchOptions {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  std::vector<std::string> models{"rf", "gbt", "cnn"};
  TrainConfig train;
  PipelineConfig pipeline;
  double test_fraction = 0.2;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::string> files;  // everything written under out_dir
  bool ok() const;
};

/// Trains every requested model on both stages and writes bench.csv,
/// history_cnn_<stage>.csv, preprocess_manifest.csv and
/// preprocess_timing.csv. Training failures are recorded in their row.
BenchReport run_bench(const BenchOptions& options);

std::vector<std::string> parse_model_list(std::string_view list);

}  // namespace adprep

#endif  // ADPREP_BENCH_HPP
