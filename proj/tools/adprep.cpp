// adprep command-line front end.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adprep/bench.hpp"
#include "adprep/error.hpp"
#include "adprep/metrics.hpp"
#include "adprep/model_io.hpp"
#include "adprep/phantom.hpp"
#include "adprep/preprocess.hpp"
#include "adprep/report.hpp"
#include "adprep/slicer.hpp"
#include "adprep/volume_io.hpp"

namespace fs = std::filesystem;
using namespace adprep;

namespace {

struct Common {
  std::uint64_t seed = 42;
  std::string config;
  int epochs = 40;
  double learning_rate = TrainConfig{}.learning_rate;
  int batch_size = TrainConfig{}.batch_size;

  TrainConfig train() const {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = epochs;
    cfg.learning_rate = learning_rate;
    cfg.batch_size = batch_size;
    return cfg;
  }
  PipelineConfig pipeline() const { return config.empty() ? PipelineConfig{} : PipelineConfig::load(config); }
};

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

// Every *.nii below in_dir, sorted, as paths relative to in_dir.
std::vector<fs::path> find_volumes(const fs::path& in_dir) {
  if (!fs::is_directory(in_dir)) throw Error(ErrorCode::IoError, "not a directory: " + in_dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(in_dir))
    if (e.is_regular_file() && e.path().extension() == ".nii") out.push_back(fs::relative(e.path(), in_dir));
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no input volumes in " + in_dir.string());
  return out;
}

// Shared by convert and preprocess: per file, per frame, hand the quantized
// slice stack to `emit`. Returns the number of files that failed.
template <typename Emit>
int for_each_stack(const fs::path& in_dir, const fs::path& out_dir, Emit emit) {
  int failed = 0;
  for (const auto& rel : find_volumes(in_dir)) {
    try {
      const auto frames = load_volume_file(in_dir / rel);
      const fs::path dir = out_dir / rel.parent_path();
      make_dir(dir);
      for (std::size_t t = 0; t < frames.size(); ++t) {
        std::string stem = rel.stem().string();
        if (frames.size() > 1) stem += "_t" + std::to_string(t);
        std::vector<GrayImage> stack;
        for (auto& q : slice_and_quantize(frames[t])) stack.push_back(std::move(q.image));
        emit(dir, (rel.parent_path() / stem).generic_string(), stem, stack);
      }
    } catch (const Error& e) {
      std::cerr << "error: " << rel.generic_string() << ": " << e.what() << "\n";
      ++failed;
    }
  }
  return failed;
}

fs::path slice_path(const fs::path& dir, const std::string& stem, int index) {
  return dir / (stem + "_Image_" + std::to_string(index) + ".pgm");
}

int cmd_gen_phantom(int n, const Common& c, const fs::path& out) {
  const auto files = export_phantoms(out, n, c.seed);
  std::cout << "wrote " << files.size() << " volumes under " << out.string() << "\n";
  return 0;
}

int cmd_convert(const fs::path& in_dir, const fs::path& out_dir) {
  make_dir(out_dir);
  std::string manifest = "volume,slice_index,file\n";
  int written = 0;
  const int failed = for_each_stack(in_dir, out_dir, [&](const fs::path& dir, const std::string& id,
                                                         const std::string& stem,
                                                         const std::vector<GrayImage>& stack) {
    for (std::size_t k = 0; k < stack.size(); ++k) {
      const fs::path p = slice_path(dir, stem, static_cast<int>(k));
      write_pgm(p, stack[k]);
      manifest += id + "," + std::to_string(k) + "," + fs::relative(p, out_dir).generic_string() + "\n";
      ++written;
    }
  });
  write_text(out_dir / "manifest.csv", manifest);
  std::cout << "wrote " << written << " slices to " << out_dir.string() << "\n";
  return failed ? 1 : 0;
}

int cmd_preprocess(const fs::path& in_dir, const fs::path& out_dir, const Common& c) {
  const PipelineConfig pipeline = c.pipeline();
  make_dir(out_dir);
  std::string manifest = "volume,slice_index,kept,foreground_fraction,input,file\n";
  std::string timing = "volume,stage,seconds\n";
  int total = 0, kept_total = 0;
  const int failed = for_each_stack(in_dir, out_dir, [&](const fs::path& dir, const std::string& id,
                                                         const std::string& stem,
                                                         const std::vector<GrayImage>& stack) {
    const PipelineResult r = run_pipeline(std::span<const GrayImage>(stack), pipeline);
    std::vector<int> slot(stack.size(), -1);
    for (std::size_t k = 0; k < r.kept.size(); ++k) slot[static_cast<std::size_t>(r.kept[k])] = static_cast<int>(k);
    for (std::size_t i = 0; i < stack.size(); ++i) {
      std::string file;
      if (slot[i] >= 0) {
        const fs::path p = slice_path(dir, stem, static_cast<int>(i));
        write_pgm(p, r.images[static_cast<std::size_t>(slot[i])]);
        file = fs::relative(p, out_dir).generic_string();
        ++kept_total;
      }
      const double fg = r.foreground.empty() ? foreground_fraction(stack[i]) : r.foreground[i];
      manifest += id + "," + std::to_string(i) + "," + (slot[i] >= 0 ? "1" : "0") + "," + fmt(fg) +
                  ",gray," + file + "\n";
      ++total;
    }
    for (const auto& t : r.timings) timing += id + "," + t.stage + "," + fmt(t.seconds) + "\n";
  });
  write_text(out_dir / "manifest.csv", manifest);
  write_text(out_dir / "timing.csv", timing);
  std::cout << "kept " << kept_total << " of " << total << " slices; wrote " << out_dir.string() << "\n";
  return failed ? 1 : 0;
}

void print_metrics(const std::string& model, const std::string& stage, const ConfusionMatrix& cm) {
  const Metrics m = metrics_from_cm(cm);
  std::cout << "model,stage,accuracy,sensitivity,specificity,tp,fn,fp,tn\n"
            << model << "," << stage << "," << fmt(m.accuracy) << "," << fmt(m.sensitivity) << ","
            << fmt(m.specificity) << "," << cm.tp << "," << cm.fn << "," << cm.fp << "," << cm.tn << "\n";
}

int cmd_train(const fs::path& data_dir, const std::string& kind, const std::string& stage_arg,
              const Common& c, const fs::path& out, const std::string& history_path) {
  const Stage stage = parse_stage(stage_arg);
  const SliceCorpus corpus = load_corpus(data_dir, c.pipeline(), c.seed);
  const StageView view = stage_view(corpus, stage);
  const TrainedModel trained = train_model(kind, view, stage, c.train());
  if (out.has_parent_path()) make_dir(out.parent_path());
  save_model(out, trained.file);
  if (!trained.history.empty()) {
    const fs::path h = history_path.empty() ? fs::path(out).replace_extension(".history.csv") : fs::path(history_path);
    write_text(h, history_csv(trained.history));
  }
  std::cout << "trained " << kind << " on " << view.train.size() << " " << stage_name(stage) << " slices in "
            << fmt(trained.seconds, 3) << " s; saved " << out.string() << "\n";
  if (!view.test.empty()) {
    const auto truth = gather_labels(view.items, view.test);
    print_metrics(kind, std::string(stage_name(stage)),
                  confusion_from_predictions(truth, predict_labels(trained.file, view.items, view.test)));
  }
  return 0;
}

int cmd_eval(const fs::path& data_dir, const fs::path& model_path, const Common& c) {
  const ModelFile file = load_model(model_path);
  const Stage stage = parse_stage(file.stage);
  const SliceCorpus corpus = load_corpus(data_dir, c.pipeline(), c.seed);
  const StageView view = stage_view(corpus, stage);
  if (view.test.empty()) throw Error(ErrorCode::EmptyInput, "no test slices");
  const auto truth = gather_labels(view.items, view.test);
  print_metrics(std::string(model_kind(file.model)), file.stage,
                confusion_from_predictions(truth, predict_labels(file, view.items, view.test)));
  return 0;
}

int cmd_bench(const fs::path& data_dir, const std::string& models, const Common& c, const fs::path& out) {
  BenchOptions opt;
  opt.data_dir = data_dir;
  opt.out_dir = out;
  opt.models = parse_model_list(models);
  opt.train = c.train();
  opt.pipeline = c.pipeline();
  const BenchReport report = run_bench(opt);
  std::cout << read_text(out / "bench.csv");
  for (const auto& r : report.rows)
    if (!r.error.empty()) std::cerr << "error: " << r.model << "/" << r.stage << ": " << r.error << "\n";
  return report.ok() ? 0 : 1;
}

int cmd_plot(const fs::path& csv, const fs::path& out) {
  const auto history = parse_history_csv(read_text(csv));
  write_text(out, history_svg(history));
  std::cout << "wrote " << out.string() << " (" << history.size() << " epochs)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MRI slice preprocessing and classifier benchmark"};
  app.require_subcommand(1);
  Common c;
  const auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", c.seed, "Top-level random seed")->capture_default_str(); };
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "Preprocessing config file (key = value)")->check(CLI::ExistingFile);
  };
  const auto add_training = [&](CLI::App* sub) {
    sub->add_option("--epochs", c.epochs, "CNN epochs")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--learning-rate", c.learning_rate, "CNN learning rate")->capture_default_str();
    sub->add_option("--batch-size", c.batch_size, "CNN batch size")->capture_default_str()->check(CLI::PositiveNumber);
  };

  int n_per_class = 50;
  std::string in_dir, out, models = "rf,gbt,cnn", kind, stage = "after", model_file, history, csv;

  auto* gen = app.add_subcommand("gen-phantom", "Write synthetic AD/NL volumes as NIfTI-1");
  gen->add_option("--n", n_per_class, "Volumes per class")->capture_default_str()->check(CLI::PositiveNumber);
  add_seed(gen);
  gen->add_option("--out", out, "Output directory")->required();

  auto* convert = app.add_subcommand("convert", "Slice volumes into raw PGM images");
  convert->add_option("input", in_dir, "Directory of .nii files")->required();
  convert->add_option("--out", out, "Output directory")->required();

  auto* prep = app.add_subcommand("preprocess", "Slice, clip and equalize volumes into PGM images");
  prep->add_option("input", in_dir, "Directory of .nii files")->required();
  prep->add_option("--out", out, "Output directory")->required();
  add_config(prep);

  auto* train = app.add_subcommand("train", "Train one model and save it");
  train->add_option("data", in_dir, "Data directory with NL/ and AD/")->required();
  train->add_option("--model", kind, "rf, gbt or cnn")->required()->check(CLI::IsMember({"rf", "gbt", "cnn"}));
  train->add_option("--stage", stage, "before or after preprocessing")->capture_default_str()->check(CLI::IsMember({"before", "after"}));
  train->add_option("--out", out, "Model file (JSON)")->required();
  train->add_option("--history", history, "CNN history CSV (default: next to the model)");
  add_seed(train);
  add_config(train);
  add_training(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on the test split");
  eval->add_option("data", in_dir, "Data directory with NL/ and AD/")->required();
  eval->add_option("--model-file", model_file, "Model file from train")->required()->check(CLI::ExistingFile);
  add_seed(eval);
  add_config(eval);

  auto* bench = app.add_subcommand("bench", "Before/after benchmark of all models");
  bench->add_option("data", in_dir, "Data directory with NL/ and AD/")->required();
  bench->add_option("--models", models, "Comma-separated subset of rf,gbt,cnn")->capture_default_str();
  bench->add_option("--out", out, "Output directory")->required();
  add_seed(bench);
  add_config(bench);
  add_training(bench);

  auto* plot = app.add_subcommand("plot", "Plot a training history CSV as SVG");
  plot->add_option("history", csv, "History CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out, "Output SVG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_phantom(n_per_class, c, out);
    if (*convert) return cmd_convert(in_dir, out);
    if (*prep) return cmd_preprocess(in_dir, out, c);
    if (*train) return cmd_train(in_dir, kind, stage, c, out, history);
    if (*eval) return cmd_eval(in_dir, model_file, c);
    if (*bench) return cmd_bench(in_dir, models, c, out);
    if (*plot) return cmd_plot(csv, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
