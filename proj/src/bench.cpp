#include "adprep/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "adprep/cnn.hpp"
#include "adprep/error.hpp"
#include "adprep/metrics.hpp"
#include "adprep/slicer.hpp"
#include "adprep/trees.hpp"
#include "adprep/volume_io.hpp"

namespace adprep {

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kFeatureSide = 16;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<GrayImage> gather_images(std::span<const Sample> items, std::span<const std::size_t> rows) {
  std::vector<GrayImage> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(items[r].image);
  return out;
}

CnnShape cnn_shape_for(std::span<const Sample> items, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no training slices");
  CnnShape shape;
  shape.input_height = items[rows[0]].image.height();
  shape.input_width = items[rows[0]].image.width();
  for (auto r : rows)
    if (items[r].image.height() != shape.input_height || items[r].image.width() != shape.input_width)
      throw Error(ErrorCode::ShapeMismatch, "slices of different sizes cannot share one network");
  shape.validate();
  return shape;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string_view stage_name(Stage stage) { return stage == Stage::Before ? "before" : "after"; }

Stage parse_stage(std::string_view name) {
  if (name == "before") return Stage::Before;
  if (name == "after") return Stage::After;
  throw Error(ErrorCode::InvalidArgument, "stage must be 'before' or 'after', got '" + std::string(name) + "'");
}

std::vector<LabeledPath> list_labeled_volumes(const std::filesystem::path& data_dir) {
  std::vector<LabeledPath> out;
  for (int label : {kLabelNL, kLabelAD}) {
    const auto dir = data_dir / std::string(class_name(label));
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".nii") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (auto& f : files) out.push_back({std::move(f), label});
  }
  if (out.empty())
    throw Error(ErrorCode::EmptyInput, "no input volumes under " + data_dir.string() + " (expected NL/*.nii and AD/*.nii)");
  return out;
}

SliceCorpus load_corpus(const std::filesystem::path& data_dir, const PipelineConfig& pipeline,
                        std::uint64_t seed, double test_fraction) {
  SliceCorpus corpus;
  for (const auto& [path, label] : list_labeled_volumes(data_dir)) {
    const auto frames = load_volume_file(path);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const int volume = static_cast<int>(corpus.volume_names.size());
      std::string name = path.stem().string();
      if (frames.size() > 1) name += "_t" + std::to_string(t);
      corpus.volume_names.push_back(name);

      std::vector<GrayImage> stack;
      for (auto& q : slice_and_quantize(frames[t])) {
        corpus.raw.items.push_back({q.image, label, volume, q.index});
        stack.push_back(std::move(q.image));
      }
      const std::size_t first = corpus.raw.items.size() - stack.size();
      corpus.processed.resize(corpus.raw.items.size());
      corpus.kept.resize(corpus.raw.items.size(), 0);
      for (std::size_t k = 0; k < stack.size(); ++k) {
        corpus.processed[first + k] = corpus.raw.items[first + k];
        corpus.processed[first + k].image = GrayImage();
      }

      std::vector<double> foreground(stack.size(), 0.0);
      try {
        PipelineResult r = run_pipeline(std::span<const GrayImage>(stack), pipeline);
        for (std::size_t k = 0; k < r.kept.size(); ++k) {
          const std::size_t item = first + static_cast<std::size_t>(r.kept[k]);
          corpus.kept[item] = 1;
          corpus.processed[item].image = std::move(r.images[k]);
        }
        foreground = r.foreground;
        corpus.timings.push_back(std::move(r.timings));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllClipped) throw;
        for (std::size_t k = 0; k < stack.size(); ++k) foreground[k] = adprep::foreground_fraction(stack[k]);
        corpus.timings.emplace_back();
      }
      for (std::size_t k = 0; k < stack.size(); ++k)
        corpus.manifest.push_back({name, static_cast<int>(k), corpus.kept[first + k] != 0,
                                   foreground.empty() ? 0.0 : foreground[k]});
    }
  }
  stratified_split(corpus.raw, test_fraction, seed);
  return corpus;
}

StageView stage_view(const SliceCorpus& corpus, Stage stage) {
  StageView view;
  if (stage == Stage::Before) {
    view.items = corpus.raw.items;
    view.train = corpus.raw.train;
    view.test = corpus.raw.test;
    return view;
  }
  view.items = corpus.processed;
  for (auto i : corpus.raw.train)
    if (corpus.kept[i]) view.train.push_back(i);
  for (auto i : corpus.raw.test)
    if (corpus.kept[i]) view.test.push_back(i);
  return view;
}

TrainedModel train_model(std::string_view kind, const StageView& view, Stage stage,
                         const TrainConfig& cfg) {
  TrainedModel out;
  out.file.stage = std::string(stage_name(stage));
  out.file.feature_width = kFeatureSide;
  out.file.feature_height = kFeatureSide;
  const std::vector<int> ytrain = gather_labels(view.items, view.train);

  if (kind == "rf" || kind == "gbt") {
    const Eigen::MatrixXd x = feature_matrix(view.items, view.train, kFeatureSide, kFeatureSide);
    const auto start = Clock::now();
    if (kind == "rf")
      out.file.model = rf_train(x, ytrain, cfg);
    else
      out.file.model = gbt_train(x, ytrain, cfg);
    out.seconds = seconds_since(start);
    return out;
  }
  if (kind == "cnn") {
    const CnnShape shape = cnn_shape_for(view.items, view.train);
    const auto train = gather_images(view.items, view.train);
    const auto test = gather_images(view.items, view.test);
    const std::vector<int> ytest = gather_labels(view.items, view.test);
    const auto start = Clock::now();
    CnnTrainResult r = cnn_train(train, ytrain, test, ytest, cfg, shape);
    out.seconds = seconds_since(start);
    out.file.model = std::move(r.model);
    out.history = std::move(r.history);
    return out;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + std::string(kind) + "' (expected rf, gbt or cnn)");
}

std::vector<int> predict_labels(const ModelFile& file, std::span<const Sample> items,
                                std::span<const std::size_t> rows) {
  std::vector<int> labels;
  labels.reserve(rows.size());
  if (const auto* cnn = std::get_if<CnnModel>(&file.model)) {
    for (auto r : rows) labels.push_back(cnn_predict(*cnn, items[r].image).label);
    return labels;
  }
  for (auto r : rows) {
    const Eigen::VectorXd x = featurize(items[r].image, file.feature_width, file.feature_height);
    if (const auto* rf = std::get_if<RandomForestModel>(&file.model))
      labels.push_back(rf_predict(*rf, x).label);
    else
      labels.push_back(gbt_predict(std::get<GbtModel>(file.model), x).label);
  }
  return labels;
}

bool BenchReport::ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.error.empty(); });
}

BenchReport run_bench(const BenchOptions& options) {
  if (options.models.empty()) throw Error(ErrorCode::InvalidArgument, "no models requested");
  for (const auto& m : options.models)
    if (m != "rf" && m != "gbt" && m != "cnn")
      throw Error(ErrorCode::InvalidArgument, "unknown model '" + m + "' (expected rf, gbt or cnn)");

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec || !std::filesystem::is_directory(options.out_dir))
    throw Error(ErrorCode::IoError, "cannot create " + options.out_dir.string());

  const SliceCorpus corpus =
      load_corpus(options.data_dir, options.pipeline, options.train.seed, options.test_fraction);

  BenchReport report;
  const auto emit = [&](const std::string& name, const std::string& text) {
    write_text(options.out_dir / name, text);
    report.files.push_back(name);
  };

  std::string manifest = "volume,slice_index,kept,foreground_fraction\n";
  for (const auto& m : corpus.manifest)
    manifest += m.volume + "," + std::to_string(m.slice) + "," + (m.kept ? "1" : "0") + "," +
                fixed6(m.foreground) + "\n";
  emit("preprocess_manifest.csv", manifest);

  std::string timing = "volume,stage,seconds\n";
  for (std::size_t v = 0; v < corpus.timings.size(); ++v)
    for (const auto& t : corpus.timings[v])
      timing += corpus.volume_names[v] + "," + t.stage + "," + fixed6(t.seconds) + "\n";
  emit("preprocess_timing.csv", timing);

  for (const auto& kind : options.models) {
    double before_seconds = -1.0;
    for (Stage stage : {Stage::Before, Stage::After}) {
      BenchRow row;
      row.model = kind;
      row.stage = std::string(stage_name(stage));
      try {
        const StageView view = stage_view(corpus, stage);
        if (view.test.empty()) throw Error(ErrorCode::EmptyInput, "no test slices in this stage");
        TrainedModel trained = train_model(kind, view, stage, options.train);
        const std::vector<int> pred = predict_labels(trained.file, view.items, view.test);
        row.cm = confusion_from_predictions(gather_labels(view.items, view.test), pred);
        row.metrics = metrics_from_cm(row.cm);
        row.seconds = trained.seconds;
        if (stage == Stage::Before) {
          before_seconds = trained.seconds;
        } else if (before_seconds > 0.0) {
          row.percentage_decrease = percentage_decrease(before_seconds, trained.seconds);
        }
        if (kind == "cnn") emit("history_cnn_" + row.stage + ".csv", history_csv(trained.history));
      } catch (const Error& e) {
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  emit("bench.csv", bench_csv(report.rows));
  return report;
}

std::vector<std::string> parse_model_list(std::string_view list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string_view::npos ? list.size() - start : comma - start);
    if (item != "rf" && item != "gbt" && item != "cnn")
      throw Error(ErrorCode::InvalidArgument, "unknown model '" + std::string(item) + "' (expected rf, gbt or cnn)");
    if (std::find(out.begin(), out.end(), item) == out.end()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace adprep
