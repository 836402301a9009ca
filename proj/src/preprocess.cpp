#include "adprep/preprocess.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adprep/error.hpp"

namespace adprep {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::MalformedConfig, key + ": expected boolean, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty())
    throw Error(ErrorCode::MalformedConfig, key + ": expected number, got '" + v + "'");
  return x;
}

}  // namespace

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const Rgb& p = img.at(r, c);
      // Weights in thousandths; +500 rounds half up.
      const int luma = (299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000;
      out.pixels(r, c) = static_cast<std::uint8_t>(std::min(luma, 255));
    }
  }
  return out;
}

Histogram histogram(const GrayImage& img) {
  Histogram h;
  const std::uint8_t* p = img.pixels.data();
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) ++h.bins[p[i]];
  h.total = img.pixels.size();
  return h;
}

GrayImage equalize_histogram(const GrayImage& img) {
  const Histogram h = histogram(img);
  const std::int64_t n = h.total;
  std::array<std::int64_t, 256> cdf{};
  std::int64_t running = 0, cdf_min = 0;
  for (int v = 0; v < 256; ++v) {
    running += h.bins[v];
    cdf[v] = running;
    if (cdf_min == 0 && running > 0) cdf_min = running;
  }
  if (n == cdf_min) return img;

  // round_half_up(a / b) == floor((2a + b) / 2b) for a, b >= 0.
  const std::int64_t b = n - cdf_min;
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    const std::int64_t a = std::max<std::int64_t>(cdf[v] - cdf_min, 0) * 255;
    lut[v] = static_cast<std::uint8_t>((2 * a + b) / (2 * b));
  }
  GrayImage out = img;
  out.pixels = img.pixels.unaryExpr([&lut](std::uint8_t v) { return lut[v]; });
  return out;
}

int otsu_threshold(const Histogram& hist) {
  if (hist.total < 1) throw Error(ErrorCode::InvalidArgument, "otsu_threshold on empty histogram");
  const long double n = static_cast<long double>(hist.total);
  long double sum_all = 0;
  for (int v = 0; v < 256; ++v) sum_all += static_cast<long double>(v) * hist.bins[v];

  int best_t = -1;
  long double best = -1;
  std::int64_t n0 = 0;
  long double s0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist.bins[t];
    s0 += static_cast<long double>(t) * hist.bins[t];
    if (n0 == 0) continue;
    const std::int64_t n1 = hist.total - n0;
    // n^2 * sigma_B^2 = (s0 * n - sum_all * n0)^2 / (n0 * n1)
    long double between = 0;
    if (n1 > 0) {
      const long double d = s0 * n - sum_all * static_cast<long double>(n0);
      between = d * d / (static_cast<long double>(n0) * static_cast<long double>(n1));
    }
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

double foreground_fraction(const GrayImage& img) {
  const Histogram h = histogram(img);
  const int t = otsu_threshold(h);
  std::int64_t above = 0;
  for (int v = t + 1; v < 256; ++v) above += h.bins[v];
  return static_cast<double>(above) / static_cast<double>(h.total);
}

ClipPolicy ClipPolicy::foreground(double tau) {
  ClipPolicy p;
  p.kind = Kind::ForegroundFraction;
  p.tau = tau;
  p.validate();
  return p;
}

ClipPolicy ClipPolicy::central(double keep_lo, double keep_hi) {
  ClipPolicy p;
  p.kind = Kind::CentralRange;
  p.keep_lo = keep_lo;
  p.keep_hi = keep_hi;
  p.validate();
  return p;
}

void ClipPolicy::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must be in [0,1]");
  if (!(keep_lo >= 0.0 && keep_hi <= 1.0 && keep_lo < keep_hi))
    throw Error(ErrorCode::InvalidArgument, "central range needs 0 <= keep_lo < keep_hi <= 1");
}

ClipResult clip_slices(std::span<const GrayImage> slices, const ClipPolicy& policy) {
  if (slices.empty()) throw Error(ErrorCode::EmptyInput, "clip_slices on empty stack");
  policy.validate();

  ClipResult out;
  const int nz = static_cast<int>(slices.size());
  const int lo = static_cast<int>(std::floor(policy.keep_lo * nz));
  const int hi = static_cast<int>(std::ceil(policy.keep_hi * nz));
  for (int i = 0; i < nz; ++i) {
    const double fg = foreground_fraction(slices[i]);
    out.foreground.push_back(fg);
    const bool keep = policy.kind == ClipPolicy::Kind::ForegroundFraction ? fg >= policy.tau
                                                                         : (lo <= i && i < hi);
    if (keep) {
      out.kept.push_back(i);
      out.images.push_back(slices[i]);
    }
  }
  if (out.kept.empty())
    throw Error(ErrorCode::AllClipped, "no slice survived clipping of " + std::to_string(nz));
  return out;
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
  PipelineConfig cfg;
  ClipPolicy policy = cfg.clip.value_or(ClipPolicy{});
  bool clip_on = cfg.clip.has_value();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::MalformedConfig,
                  "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "do_gray") {
      cfg.do_gray = parse_bool(key, value);
    } else if (key == "do_equalize") {
      cfg.do_equalize = parse_bool(key, value);
    } else if (key == "clip.kind") {
      if (value == "off" || value == "none") {
        clip_on = false;
      } else if (value == "foreground_fraction") {
        clip_on = true;
        policy.kind = ClipPolicy::Kind::ForegroundFraction;
      } else if (value == "central_range") {
        clip_on = true;
        policy.kind = ClipPolicy::Kind::CentralRange;
      } else {
        throw Error(ErrorCode::MalformedConfig, "clip.kind: unknown policy '" + value + "'");
      }
    } else if (key == "clip.tau") {
      policy.tau = parse_real(key, value);
    } else if (key == "clip.keep_lo") {
      policy.keep_lo = parse_real(key, value);
    } else if (key == "clip.keep_hi") {
      policy.keep_hi = parse_real(key, value);
    } else {
      throw Error(ErrorCode::MalformedConfig, "unknown key '" + key + "'");
    }
  }
  if (clip_on) cfg.clip = policy;
  else cfg.clip.reset();
  if (cfg.clip) {
    try {
      cfg.clip->validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedConfig, e.what());
    }
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

PipelineConfig PipelineConfig::raw() {
  PipelineConfig cfg;
  cfg.do_gray = false;
  cfg.do_equalize = false;
  cfg.clip.reset();
  return cfg;
}

PipelineResult run_pipeline(std::span<const GrayImage> slices, const PipelineConfig& config) {
  PipelineResult out;
  // Input is already single-channel; the gray stage is a no-op here.
  out.timings.push_back({"gray", 0.0});

  auto start = Clock::now();
  if (config.clip) {
    ClipResult clipped = clip_slices(slices, *config.clip);
    out.images = std::move(clipped.images);
    out.kept = std::move(clipped.kept);
    out.foreground = std::move(clipped.foreground);
  } else {
    out.images.assign(slices.begin(), slices.end());
    for (int i = 0; i < static_cast<int>(slices.size()); ++i) {
      out.kept.push_back(i);
      out.foreground.push_back(foreground_fraction(slices[i]));
    }
  }
  out.timings.push_back({"clip", seconds_since(start)});

  start = Clock::now();
  if (config.do_equalize) {
    for (auto& img : out.images) img = equalize_histogram(img);
  }
  out.timings.push_back({"equalize", seconds_since(start)});
  return out;
}

PipelineResult run_pipeline(std::span<const RgbImage> slices, const PipelineConfig& config) {
  if (!config.do_gray)
    throw Error(ErrorCode::InvalidArgument, "RGB input requires the grayscale stage");
  const auto start = Clock::now();
  std::vector<GrayImage> gray;
  gray.reserve(slices.size());
  for (const auto& s : slices) gray.push_back(to_grayscale(s));
  const double gray_seconds = seconds_since(start);
  PipelineResult out = run_pipeline(std::span<const GrayImage>(gray), config);
  out.timings.front().seconds = gray_seconds;
  return out;
}

}  // namespace adprep
