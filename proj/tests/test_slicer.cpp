#include <doctest.h>

#include "adprep/error.hpp"
#include "adprep/rng.hpp"
#include "adprep/slicer.hpp"

using namespace adprep;

namespace {

Volume3D random_volume(Rng& rng, int nx, int ny, int nz) {
  Eigen::VectorXd v(nx * ny * nz);
  for (auto& x : v) x = rng.uniform(-50, 50);
  return Volume3D(nx, ny, nz, v);
}

}  // namespace

TEST_CASE("extract_slices: 4x4x3 gives three named 4x4 slices") {
  const Volume3D vol(4, 4, 3, Eigen::VectorXd::Zero(48));
  const auto slices = extract_slices(vol);
  REQUIRE(slices.size() == 3);
  for (int n = 0; n < 3; ++n) {
    CHECK(slices[n].index == n);
    CHECK(slices[n].name() == "Image_" + std::to_string(n));
    CHECK(slices[n].height() == 4);
    CHECK(slices[n].width() == 4);
  }
}

TEST_CASE("extract_slices: single plane keeps voxel order") {
  Eigen::VectorXd v(4);
  v << 1.5, -2.0, 7.0, 0.25;
  const auto slices = extract_slices(Volume3D(2, 2, 1, v));
  REQUIRE(slices.size() == 1);
  CHECK(slices[0].pixels.reshaped() == v);
  // height runs along x, width along y
  CHECK(slices[0].pixels(1, 0) == -2.0);
  CHECK(slices[0].pixels(0, 1) == 7.0);
}

TEST_CASE("extract_slices: 3x5x7 shape bookkeeping") {
  const auto slices = extract_slices(Volume3D(3, 5, 7, Eigen::VectorXd::Zero(105)));
  REQUIRE(slices.size() == 7);
  for (const auto& s : slices) {
    CHECK(s.height() == 3);
    CHECK(s.width() == 5);
  }
}

TEST_CASE("property: slices match direct indexing and reassemble to the volume") {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const int nx = 1 + static_cast<int>(rng.below(6)), ny = 1 + static_cast<int>(rng.below(6)),
              nz = 1 + static_cast<int>(rng.below(6));
    const Volume3D vol = random_volume(rng, nx, ny, nz);
    const auto slices = extract_slices(vol);
    REQUIRE(static_cast<int>(slices.size()) == nz);

    Eigen::VectorXd joined(vol.voxels().size());
    Eigen::Index pos = 0;
    for (const auto& s : slices) {
      for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y) CHECK(s.pixels(x, y) == vol(x, y, s.index));
      joined.segment(pos, s.pixels.size()) = s.pixels.reshaped();
      pos += s.pixels.size();
    }
    CHECK(joined == vol.voxels());
  }
}

TEST_CASE("quantize_u8 mapping") {
  Slice2D s;
  s.pixels = Eigen::MatrixXd::Constant(1, 1, 100.0);
  CHECK(quantize_u8(s, -100, 300).image.pixels(0, 0) == 128);

  s.pixels(0, 0) = 17;
  CHECK(quantize_u8(s, 0, 255).image.pixels(0, 0) == 17);

  s.pixels = Eigen::MatrixXd::Constant(2, 3, 42.0);
  const auto q = quantize_u8(s, 42.0, 42.0);
  CHECK(q.degenerate_range);
  CHECK(q.image.pixels.isZero());
  CHECK(q.image.width() == 3);
  CHECK(q.image.height() == 2);

  s.pixels = Eigen::MatrixXd(1, 2);
  s.pixels << -10, 900;
  const auto clamped = quantize_u8(s, 0, 255);
  CHECK(clamped.image.pixels(0, 0) == 0);
  CHECK(clamped.image.pixels(0, 1) == 255);
}

TEST_CASE("property: quantize_u8 is monotone") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const double lo = rng.uniform(-500, 500);
    const double hi = lo + rng.uniform(0.001, 1000);
    Slice2D s;
    s.pixels = Eigen::MatrixXd(1, 2);
    double a = rng.uniform(lo - 100, hi + 100), b = rng.uniform(lo - 100, hi + 100);
    if (a > b) std::swap(a, b);
    s.pixels << a, b;
    const auto q = quantize_u8(s, lo, hi);
    CHECK(q.image.pixels(0, 0) <= q.image.pixels(0, 1));
  }
}

TEST_CASE("slice_and_quantize normalizes per volume") {
  Eigen::VectorXd v(8);
  v << 0, 0, 0, 0, 10, 10, 10, 10;  // z=0 all 0, z=1 all 10
  const auto qs = slice_and_quantize(Volume3D(2, 2, 2, v));
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].image.pixels.isZero());
  CHECK((qs[1].image.pixels.array() == 255).all());
  CHECK_FALSE(qs[0].degenerate_range);
}
