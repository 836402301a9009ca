#include <doctest.h>

#include <filesystem>
#include <set>

#include "adprep/error.hpp"
#include "adprep/phantom.hpp"
#include "adprep/preprocess.hpp"
#include "adprep/slicer.hpp"

using namespace adprep;

namespace {

std::uint64_t checksum(const Dataset& d) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& s : d.items)
    for (Eigen::Index i = 0; i < s.image.pixels.size(); ++i) {
      h ^= s.image.pixels.data()[i];
      h *= 1099511628211ULL;
    }
  return h;
}

}  // namespace

TEST_CASE("phantom classes differ only through speckle") {
  PhantomSpec spec;
  spec.seed = 9;
  spec.speckle_amplitude = 0;
  spec.noise_sigma = 0;
  PhantomSpec ad = spec;
  ad.class_label = 1;
  CHECK(generate_volume(spec) == generate_volume(ad));

  spec.speckle_amplitude = 6;
  ad.speckle_amplitude = 6;
  CHECK_FALSE(generate_volume(spec) == generate_volume(ad));
}

TEST_CASE("phantom generation is deterministic") {
  PhantomSpec spec;
  spec.seed = 77;
  spec.class_label = 1;
  CHECK(generate_volume(spec) == generate_volume(spec));
  PhantomSpec other = spec;
  other.seed = 78;
  CHECK_FALSE(generate_volume(spec) == generate_volume(other));
}

TEST_CASE("edge slices are empty and the centre is mostly tissue") {
  for (int label : {0, 1}) {
    for (std::uint64_t seed : {0ULL, 5ULL, 42ULL}) {
      PhantomSpec spec;
      spec.class_label = label;
      spec.seed = seed;
      const auto slices = slice_and_quantize(generate_volume(spec));
      REQUIRE(slices.size() == 16);
      CHECK(foreground_fraction(slices[8].image) >= 0.3);
      CHECK(foreground_fraction(slices[0].image) < 0.05);
      CHECK(foreground_fraction(slices[15].image) < 0.05);
    }
  }
}

TEST_CASE("phantom values stay inside the byte range and the tissue band") {
  PhantomSpec spec;
  spec.class_label = 1;
  const Volume3D v = generate_volume(spec);
  CHECK(v.voxels().minCoeff() >= 0.0);
  CHECK(v.voxels().maxCoeff() <= 255.0);
  const double width = v.voxels().maxCoeff() - spec.tissue_lo;
  CHECK(width < 40.0 + 6.0 + 8 * spec.noise_sigma);
}

TEST_CASE("phantom spec validation") {
  PhantomSpec spec;
  spec.semi_z = 9;
  CHECK_THROWS_AS(generate_volume(spec), Error);
  spec = PhantomSpec{};
  spec.class_label = 2;
  CHECK_THROWS_AS(generate_volume(spec), Error);
  spec = PhantomSpec{};
  spec.speckle_grain = 0;
  CHECK_THROWS_AS(generate_volume(spec), Error);
}

TEST_CASE("generate_dataset counts and split") {
  const Dataset one = generate_dataset(1, 3);
  CHECK(one.items.size() == 32);

  const Dataset d = generate_dataset(50, 42);
  CHECK(d.items.size() == 1600);
  CHECK(d.train.size() == 1280);
  CHECK(d.test.size() == 320);
  std::set<std::size_t> seen(d.train.begin(), d.train.end());
  for (auto i : d.test) CHECK(seen.insert(i).second);
  CHECK(seen.size() == 1600);

  int ad_test = 0;
  for (auto i : d.test) ad_test += d.items[i].label;
  CHECK(ad_test == 160);
}

TEST_CASE("different base seeds give different content") {
  CHECK(checksum(generate_dataset(2, 1)) != checksum(generate_dataset(2, 2)));
  CHECK(checksum(generate_dataset(2, 1)) == checksum(generate_dataset(2, 1)));
}

TEST_CASE("property: equalization widens the in-band spread") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    PhantomSpec spec;
    spec.seed = seed;
    spec.class_label = static_cast<int>(seed % 2);
    for (const auto& q : slice_and_quantize(generate_volume(spec))) {
      const GrayImage& img = q.image;
      const int cut = otsu_threshold(histogram(img));
      const GrayImage eq = equalize_histogram(img);
      int lo = 256, hi = -1, elo = 256, ehi = -1;
      for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
        const int v = img.pixels.data()[i];
        if (v <= cut) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        elo = std::min(elo, static_cast<int>(eq.pixels.data()[i]));
        ehi = std::max(ehi, static_cast<int>(eq.pixels.data()[i]));
      }
      if (hi <= lo) continue;
      CHECK(ehi - elo > hi - lo);
    }
  }
}

TEST_CASE("export_phantoms writes one file per volume") {
  const auto dir = std::filesystem::temp_directory_path() / "adprep_phantom_export";
  std::filesystem::remove_all(dir);
  const auto files = export_phantoms(dir, 2, 4);
  REQUIRE(files.size() == 4);
  CHECK(std::filesystem::exists(dir / "AD" / "phantom_AD_0001.nii"));
  CHECK(std::filesystem::exists(dir / "NL" / "phantom_NL_0000.nii"));
  PhantomSpec spec;
  spec.seed = 5;
  spec.class_label = 1;
  const auto back = load_volume_file(dir / "AD" / "phantom_AD_0001.nii");
  REQUIRE(back.size() == 1);
  CHECK((back[0].voxels() - generate_volume(spec).voxels()).cwiseAbs().maxCoeff() < 1e-4);
  std::filesystem::remove_all(dir);
}
