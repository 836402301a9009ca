#ifndef ADPREP_PREPROCESS_HPP
#define ADPREP_PREPROCESS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adprep/image.hpp"

namespace adprep {

/// Luma with BT.601 weights (0.299, 0.587, 0.114), rounded half up.
GrayImage to_grayscale(const RgbImage& img);

struct Histogram {
  std::array<std::int64_t, 256> bins{};
  std::int64_t total = 0;
};

Histogram histogram(const GrayImage& img);

/// Global CDF equalization over 256 levels:
///   h(v) = round_half_up((cdf(v) - cdf_min) / (N - cdf_min) * 255)
/// where cdf_min is the smallest nonzero CDF value. A constant image is
/// returned unchanged. The mapping is evaluated in exact integer arithmetic.
GrayImage equalize_histogram(const GrayImage& img);

/// Otsu's threshold: the t maximizing between-class variance for the split
/// (<= t background, > t foreground). t ranges over levels with a non-empty
/// background class; ties go to the smallest t.
int otsu_threshold(const Histogram& hist);

/// Fraction of pixels strictly above the image's Otsu threshold.
double foreground_fraction(const GrayImage& img);

struct ClipPolicy {
  enum class Kind { ForegroundFraction, CentralRange };

  Kind kind = Kind::ForegroundFraction;
  double tau = 0.10;
  double keep_lo = 0.20;
  double keep_hi = 0.80;

  static ClipPolicy foreground(double tau);
  static ClipPolicy central(double keep_lo, double keep_hi);
  /// Throws InvalidArgument if tau or the range bounds are out of [0,1].
  void validate() const;
};

struct ClipResult {
  std::vector<int> kept;  // original indices, ascending
  std::vector<GrayImage> images;
  std::vector<double> foreground;  // per input slice
};

/// Keeps the slices the policy accepts, in input order. Throws AllClipped
/// when nothing survives.
ClipResult clip_slices(std::span<const GrayImage> slices, const ClipPolicy& policy);

struct PipelineConfig {
  bool do_gray = true;
  bool do_equalize = true;
  std::optional<ClipPolicy> clip = ClipPolicy{};

  /// Parses "key = value" lines ('#' starts a comment). Keys: do_gray,
  /// do_equalize, clip.kind (foreground_fraction|central_range|off),
  /// clip.tau, clip.keep_lo, clip.keep_hi. Unknown keys are an error.
  static PipelineConfig parse(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);
  /// Everything off: quantized slices pass through unchanged.
  static PipelineConfig raw();
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineResult {
  std::vector<GrayImage> images;
  std::vector<int> kept;
  std::vector<double> foreground;  // per input slice
  std::vector<StageTiming> timings;
};

/// gray -> clip -> equalize, each stage gated by the config.
PipelineResult run_pipeline(std::span<const GrayImage> slices, const PipelineConfig& config);
/// RGB input requires do_gray.
PipelineResult run_pipeline(std::span<const RgbImage> slices, const PipelineConfig& config);

}  // namespace adprep

#endif  // ADPREP_PREPROCESS_HPP
