#include "adprep/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "adprep/error.hpp"
#include "adprep/rng.hpp"
#include "adprep/slicer.hpp"

namespace adprep {

void PhantomSpec::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw Error(ErrorCode::InvalidArgument, "phantom dims must be positive");
  if (class_label != 0 && class_label != 1)
    throw Error(ErrorCode::InvalidArgument, "phantom class must be 0 or 1");
  if (!(semi_x > 0 && semi_y > 0 && semi_z > 0) || 2 * semi_x > nx || 2 * semi_y > ny ||
      2 * semi_z > nz)
    throw Error(ErrorCode::InvalidArgument, "ellipsoid does not fit inside the volume");
  if (!(tissue_lo < tissue_hi) || tissue_lo < 0 || tissue_hi > 255 || background_level < 0 ||
      background_level > 255)
    throw Error(ErrorCode::InvalidArgument, "phantom intensities must lie in [0,255]");
  if (speckle_amplitude < 0 || noise_sigma < 0 || speckle_density < 0 || speckle_density > 1)
    throw Error(ErrorCode::InvalidArgument, "invalid speckle or noise parameters");
  if (speckle_grain < 1 || anatomy_contrast < 0 || anatomy_contrast > 1)
    throw Error(ErrorCode::InvalidArgument, "invalid speckle grain or anatomy contrast");
}

Volume3D generate_volume(const PhantomSpec& spec) {
  spec.validate();

  // Smooth per-volume tissue pattern: radial falloff plus one plane wave.
  Rng anatomy(derive_seed(spec.seed, "phantom-anatomy"));
  const double kx = anatomy.uniform(0.2, 0.6);
  const double ky = anatomy.uniform(0.2, 0.6);
  const double kz = anatomy.uniform(0.1, 0.4);
  const double phase = anatomy.uniform(0.0, 2.0 * std::numbers::pi);

  Rng texture(derive_seed(spec.seed, spec.class_label ? "phantom-AD" : "phantom-NL"));

  const int grain = spec.speckle_grain;
  const int gx = (spec.nx + grain - 1) / grain, gy = (spec.ny + grain - 1) / grain,
            gz = (spec.nz + grain - 1) / grain;
  std::vector<char> cell_speckled(static_cast<std::size_t>(gx) * gy * gz);
  for (auto& c : cell_speckled) c = texture.bernoulli(spec.speckle_density);
  const auto cell_of = [&](int x, int y, int z) {
    return static_cast<std::size_t>(x / grain + gx * (y / grain + gy * (z / grain)));
  };

  const double cx = (spec.nx - 1) / 2.0, cy = (spec.ny - 1) / 2.0, cz = (spec.nz - 1) / 2.0;
  const double band = spec.tissue_hi - spec.tissue_lo;
  Eigen::VectorXd v(static_cast<Eigen::Index>(spec.nx) * spec.ny * spec.nz);
  Eigen::Index i = 0;
  for (int z = 0; z < spec.nz; ++z)
    for (int y = 0; y < spec.ny; ++y)
      for (int x = 0; x < spec.nx; ++x, ++i) {
        const double dx = (x - cx) / spec.semi_x, dy = (y - cy) / spec.semi_y,
                     dz = (z - cz) / spec.semi_z;
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (r > 1.0) {
          v[i] = spec.background_level;
          continue;
        }
        const double shape = 0.5 + spec.anatomy_contrast *
                                       (0.35 * std::cos(std::numbers::pi * r) +
                                        0.15 * std::sin(kx * x + ky * y + kz * z + phase));
        double value = spec.tissue_lo + band * shape;
        // Both draws happen for either class so the noise field does not
        // depend on whether speckle is applied.
        const bool speckled = cell_speckled[cell_of(x, y, z)];
        const double noise = texture.normal() * spec.noise_sigma;
        if (speckled && spec.class_label == 1) value += spec.speckle_amplitude;
        v[i] = std::clamp(value + noise, 0.0, 255.0);
      }
  return Volume3D(spec.nx, spec.ny, spec.nz, std::move(v));
}

Dataset generate_dataset(int n_per_class, std::uint64_t base_seed, const PhantomSpec& tmpl) {
  if (n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  Dataset data;
  int volume = 0;
  for (int label : {kLabelNL, kLabelAD}) {
    for (int i = 0; i < n_per_class; ++i, ++volume) {
      PhantomSpec spec = tmpl;
      spec.class_label = label;
      spec.seed = base_seed + static_cast<std::uint64_t>(i);
      for (auto& q : slice_and_quantize(generate_volume(spec)))
        data.items.push_back({std::move(q.image), label, volume, q.index});
    }
  }
  stratified_split(data, 0.2, base_seed);
  return data;
}

std::vector<std::filesystem::path> export_phantoms(const std::filesystem::path& out_dir,
                                                   int n_per_class, std::uint64_t base_seed,
                                                   const PhantomSpec& tmpl) {
  if (n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  std::vector<std::filesystem::path> written;
  for (int label : {kLabelNL, kLabelAD}) {
    const auto dir = out_dir / std::string(class_name(label));
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    for (int i = 0; i < n_per_class; ++i) {
      PhantomSpec spec = tmpl;
      spec.class_label = label;
      spec.seed = base_seed + static_cast<std::uint64_t>(i);
      char name[64];
      std::snprintf(name, sizeof name, "phantom_%s_%04d.nii", class_name(label).data(), i);
      const auto path = dir / name;
      write_nifti_file(path, generate_volume(spec), Datatype::Float32);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace adprep
