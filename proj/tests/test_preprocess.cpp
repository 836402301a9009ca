#include <doctest.h>

#include <cmath>
#include <numeric>

#include "adprep/error.hpp"
#include "adprep/preprocess.hpp"
#include "adprep/rng.hpp"

using namespace adprep;

namespace {

GrayImage from_values(int h, int w, std::initializer_list<int> values) {
  GrayImage img(h, w);
  auto it = values.begin();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img.pixels(r, c) = static_cast<std::uint8_t>(*it++);
  return img;
}

GrayImage random_image(Rng& rng, int h, int w, int levels = 256) {
  GrayImage img(h, w);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i)
    img.pixels.data()[i] = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(levels)));
  return img;
}

// Exhaustive Otsu in plain doubles: w0 * w1 * (mu0 - mu1)^2 for every
// threshold with a non-empty background; first maximum wins.
int brute_force_otsu(const std::vector<int>& values) {
  int best_t = -1;
  double best = -1.0;
  for (int t = 0; t < 256; ++t) {
    double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (int v : values) (v <= t ? (n0 += 1, s0 += v) : (n1 += 1, s1 += v));
    if (n0 == 0) continue;
    const double n = static_cast<double>(values.size());
    const double var = n1 == 0 ? 0.0 : (n0 / n) * (n1 / n) * std::pow(s0 / n0 - s1 / n1, 2);
    if (var > best + 1e-12) {
      best = var;
      best_t = t;
    }
  }
  return best_t;
}

Histogram histogram_of(const std::vector<int>& values) {
  Histogram h;
  for (int v : values) ++h.bins[v];
  h.total = static_cast<std::int64_t>(values.size());
  return h;
}

// Stack of 10 slices: 0,1,8,9 have ~2% foreground, the rest ~40%.
std::vector<GrayImage> edge_stack() {
  std::vector<GrayImage> stack;
  for (int i = 0; i < 10; ++i) {
    GrayImage img(10, 10, 5);
    const int bright = (i <= 1 || i >= 8) ? 2 : 40;
    for (int k = 0; k < bright; ++k) img.pixels.data()[k] = static_cast<std::uint8_t>(150 + i);
    stack.push_back(img);
  }
  return stack;
}

}  // namespace

TEST_CASE("to_grayscale worked values") {
  RgbImage img(1, 3);
  img.at(0, 0) = {255, 255, 255};
  img.at(0, 1) = {0, 0, 0};
  img.at(0, 2) = {255, 0, 0};
  const GrayImage g = to_grayscale(img);
  CHECK(g.pixels(0, 0) == 255);
  CHECK(g.pixels(0, 1) == 0);
  CHECK(g.pixels(0, 2) == 76);
  CHECK(g.width() == 3);
  CHECK(g.height() == 1);
}

TEST_CASE("property: to_grayscale of equal channels is that channel") {
  RgbImage img(16, 16);
  for (int v = 0; v < 256; ++v) {
    const auto b = static_cast<std::uint8_t>(v);
    img.at(v / 16, v % 16) = {b, b, b};
  }
  const GrayImage g = to_grayscale(img);
  for (int v = 0; v < 256; ++v) CHECK(g.pixels(v / 16, v % 16) == v);
}

TEST_CASE("equalize_histogram worked examples") {
  CHECK(equalize_histogram(from_values(2, 2, {0, 1, 1, 3})) == from_values(2, 2, {0, 170, 170, 255}));

  const GrayImage flat(3, 4, 100);
  CHECK(equalize_histogram(flat) == flat);

  GrayImage ramp(16, 16);
  for (int v = 0; v < 256; ++v) ramp.pixels(v / 16, v % 16) = static_cast<std::uint8_t>(v);
  const GrayImage eq = equalize_histogram(ramp);
  CHECK(eq.pixels(0, 0) == 0);
  CHECK(eq.pixels(15, 15) == 255);
  std::vector<bool> seen(256, false);
  for (int v = 0; v < 256; ++v) {
    seen[eq.pixels(v / 16, v % 16)] = true;
    if (v > 0) CHECK(eq.pixels(v / 16, v % 16) >= eq.pixels((v - 1) / 16, (v - 1) % 16));
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST_CASE("property: equalization ordering, range and near-idempotence") {
  Rng rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    const int levels = 2 + static_cast<int>(rng.below(255));
    const GrayImage img = random_image(rng, 1 + static_cast<int>(rng.below(12)),
                                       1 + static_cast<int>(rng.below(12)), levels);
    const GrayImage eq = equalize_histogram(img);
    REQUIRE(eq.width() == img.width());
    REQUIRE(eq.height() == img.height());

    const auto* in = img.pixels.data();
    const auto* out = eq.pixels.data();
    const Eigen::Index n = img.pixels.size();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (in[i] <= in[j]) CHECK(out[i] <= out[j]);

    const bool constant = img.pixels.maxCoeff() == img.pixels.minCoeff();
    if (!constant) {
      for (Eigen::Index i = 0; i < n; ++i)
        if (in[i] == img.pixels.maxCoeff()) CHECK(out[i] == 255);
    }

    const GrayImage twice = equalize_histogram(eq);
    const Eigen::ArrayXi diff =
        (twice.pixels.cast<int>() - eq.pixels.cast<int>()).reshaped().array().abs();
    CHECK(diff.maxCoeff() <= 1);
  }
}

TEST_CASE("otsu_threshold") {
  SUBCASE("two equal modes: smallest optimal split") {
    std::vector<int> v(5, 0);
    v.insert(v.end(), 5, 255);
    CHECK(otsu_threshold(histogram_of(v)) == 0);
  }
  SUBCASE("single level") {
    CHECK(otsu_threshold(histogram_of(std::vector<int>(9, 77))) == 77);
  }
  SUBCASE("three clusters against brute force") {
    std::vector<int> v{10, 10, 10, 10, 200, 200, 200, 200, 100};
    CHECK(otsu_threshold(histogram_of(v)) == brute_force_otsu(v));
  }
  SUBCASE("empty histogram is rejected") {
    CHECK_THROWS_AS(otsu_threshold(Histogram{}), Error);
  }
}

TEST_CASE("property: otsu matches brute force on random histograms") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> v(1 + rng.below(60));
    const int levels = 1 + static_cast<int>(rng.below(256));
    for (auto& x : v) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(levels)));
    CHECK(otsu_threshold(histogram_of(v)) == brute_force_otsu(v));
  }
}

TEST_CASE("foreground_fraction") {
  GrayImage half(2, 4, 0);
  half.pixels.bottomRows(1).setConstant(255);
  CHECK(foreground_fraction(half) == doctest::Approx(0.5));

  CHECK(foreground_fraction(GrayImage(5, 5, 0)) == 0.0);

  const GrayImage three_quarters = from_values(2, 2, {200, 200, 5, 200});
  CHECK(foreground_fraction(three_quarters) == doctest::Approx(0.75));
}

TEST_CASE("clip_slices policies") {
  const auto stack = edge_stack();
  SUBCASE("foreground fraction drops edge slices") {
    const auto r = clip_slices(stack, ClipPolicy::foreground(0.10));
    CHECK(r.kept == std::vector<int>{2, 3, 4, 5, 6, 7});
    REQUIRE(r.images.size() == 6);
    CHECK(r.images[0] == stack[2]);
    CHECK(r.foreground[0] == doctest::Approx(0.02));
    CHECK(r.foreground[5] == doctest::Approx(0.40));
  }
  SUBCASE("tau 0 keeps everything") {
    CHECK(clip_slices(stack, ClipPolicy::foreground(0.0)).kept.size() == 10);
  }
  SUBCASE("central range") {
    const auto r = clip_slices(stack, ClipPolicy::central(0.2, 0.8));
    CHECK(r.kept == std::vector<int>{2, 3, 4, 5, 6, 7});
  }
  SUBCASE("nothing survives") {
    CHECK_THROWS_WITH_AS(clip_slices(stack, ClipPolicy::foreground(0.9)),
                         doctest::Contains("AllClipped"), Error);
  }
  SUBCASE("invalid policies") {
    CHECK_THROWS_AS(ClipPolicy::foreground(1.5), Error);
    CHECK_THROWS_AS(ClipPolicy::central(0.8, 0.2), Error);
    CHECK_THROWS_AS(clip_slices({}, ClipPolicy{}), Error);
  }
}

TEST_CASE("property: clipping keeps an ordered subsequence of unchanged images") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GrayImage> stack;
    const int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) stack.push_back(random_image(rng, 6, 5, 4));
    const ClipPolicy policy = ClipPolicy::foreground(rng.uniform(0.0, 0.5));
    try {
      const auto r = clip_slices(stack, policy);
      CHECK(std::is_sorted(r.kept.begin(), r.kept.end()));
      CHECK(std::adjacent_find(r.kept.begin(), r.kept.end()) == r.kept.end());
      for (std::size_t k = 0; k < r.kept.size(); ++k) CHECK(r.images[k] == stack[r.kept[k]]);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllClipped);
    }
  }
}

TEST_CASE("run_pipeline composition") {
  const auto stack = edge_stack();
  SUBCASE("all stages off is the identity") {
    const auto r = run_pipeline(std::span<const GrayImage>(stack), PipelineConfig::raw());
    REQUIRE(r.images.size() == stack.size());
    for (std::size_t i = 0; i < stack.size(); ++i) CHECK(r.images[i] == stack[i]);
  }
  SUBCASE("equalize only matches per-slice equalization") {
    PipelineConfig cfg = PipelineConfig::raw();
    cfg.do_equalize = true;
    const auto r = run_pipeline(std::span<const GrayImage>(stack), cfg);
    for (std::size_t i = 0; i < stack.size(); ++i) CHECK(r.images[i] == equalize_histogram(stack[i]));
  }
  SUBCASE("full pipeline on the edge stack") {
    const auto r = run_pipeline(std::span<const GrayImage>(stack), PipelineConfig{});
    CHECK(r.kept == std::vector<int>{2, 3, 4, 5, 6, 7});
    REQUIRE(r.images.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) CHECK(r.images[k] == equalize_histogram(stack[k + 2]));
    CHECK(r.foreground.size() == 10);
    REQUIRE(r.timings.size() == 3);
    CHECK(r.timings[0].stage == "gray");
    CHECK(r.timings[1].stage == "clip");
    CHECK(r.timings[2].stage == "equalize");
    for (const auto& t : r.timings) CHECK(t.seconds >= 0.0);
  }
  SUBCASE("RGB input runs the gray stage first") {
    std::vector<RgbImage> rgb;
    for (const auto& g : stack) {
      RgbImage img(g.height(), g.width());
      for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) img.at(r, c) = {g.pixels(r, c), g.pixels(r, c), g.pixels(r, c)};
      rgb.push_back(img);
    }
    const auto from_rgb = run_pipeline(std::span<const RgbImage>(rgb), PipelineConfig{});
    const auto from_gray = run_pipeline(std::span<const GrayImage>(stack), PipelineConfig{});
    CHECK(from_rgb.kept == from_gray.kept);
    CHECK(from_rgb.images == from_gray.images);

    PipelineConfig no_gray;
    no_gray.do_gray = false;
    CHECK_THROWS_AS(run_pipeline(std::span<const RgbImage>(rgb), no_gray), Error);
  }
}

TEST_CASE("PipelineConfig parsing") {
  const auto cfg = PipelineConfig::parse(
      "# preprocessing\n"
      "do_gray = true\n"
      "do_equalize = false\n"
      "clip.kind = central_range\n"
      "clip.keep_lo = 0.25\n"
      "clip.keep_hi = 0.75  # trailing comment\n");
  CHECK(cfg.do_gray);
  CHECK_FALSE(cfg.do_equalize);
  REQUIRE(cfg.clip.has_value());
  CHECK(cfg.clip->kind == ClipPolicy::Kind::CentralRange);
  CHECK(cfg.clip->keep_lo == 0.25);
  CHECK(cfg.clip->keep_hi == 0.75);

  CHECK_FALSE(PipelineConfig::parse("clip.kind = off\n").clip.has_value());
  CHECK(PipelineConfig::parse("clip.tau = 0.3").clip->tau == 0.3);
  CHECK_FALSE(PipelineConfig::parse("clip.kind = off\nclip.tau = 0.3\n").clip.has_value());
  CHECK(PipelineConfig::parse("clip.kind = off\nclip.tau = 0.3\nclip.kind = foreground_fraction\n").clip->tau == 0.3);

  CHECK_THROWS_WITH_AS(PipelineConfig::parse("bogus = 1"), doctest::Contains("MalformedConfig"), Error);
  CHECK_THROWS_AS(PipelineConfig::parse("do_gray maybe"), Error);
  CHECK_THROWS_AS(PipelineConfig::parse("do_gray = maybe"), Error);
  CHECK_THROWS_AS(PipelineConfig::parse("clip.tau = 2"), Error);
  CHECK_THROWS_AS(PipelineConfig::parse("clip.kind = skull"), Error);
}
