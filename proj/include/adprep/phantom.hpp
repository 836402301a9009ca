#ifndef ADPREP_PHANTOM_HPP
#define ADPREP_PHANTOM_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "adprep/dataset.hpp"
#include "adprep/volume_io.hpp"

namespace adprep {

/// Synthetic two-class head volume. A centered ellipsoid of "tissue" sits in
/// a constant background. Tissue intensity is a smooth per-volume pattern
/// inside [tissue_lo, tissue_hi] plus Gaussian noise; AD volumes (label 1)
/// add `speckle_amplitude` to a random `speckle_density` share of tissue
/// voxels, which is the only class signal.
///
/// Randomness: the smooth pattern comes from a stream keyed by `seed` alone;
/// speckle placement and noise come from a stream keyed by (seed, label).
/// Both are Rng (mt19937_64) streams seeded through derive_seed.
struct PhantomSpec {
  int nx = 32;
  int ny = 32;
  int nz = 16;
  int class_label = 0;
  std::uint64_t seed = 0;
  double semi_x = 12.0;
  double semi_y = 12.0;
  double semi_z = 6.0;
  double background_level = 8.0;
  double tissue_lo = 100.0;
  double tissue_hi = 140.0;
  double speckle_amplitude = 6.0;
  double speckle_density = 0.15;
  double noise_sigma = 2.0;
  int speckle_grain = 2;  // speckle cells are grain^3 voxel cubes
  double anatomy_contrast = 0.25;

  void validate() const;
};

Volume3D generate_volume(const PhantomSpec& spec);

/// n_per_class volumes per class (seeds base_seed + i), sliced and
/// quantized per volume, then split 80/20 per class with base_seed.
Dataset generate_dataset(int n_per_class, std::uint64_t base_seed,
                         const PhantomSpec& tmpl = PhantomSpec{});

/// Writes <out_dir>/AD/*.nii and <out_dir>/NL/*.nii as float32 NIfTI-1.
/// Returns the written paths.
std::vector<std::filesystem::path> export_phantoms(const std::filesystem::path& out_dir,
                                                   int n_per_class, std::uint64_t base_seed,
                                                   const PhantomSpec& tmpl = PhantomSpec{});

}  // namespace adprep

#endif  // ADPREP_PHANTOM_HPP
