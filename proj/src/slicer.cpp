#include "adprep/slicer.hpp"

#include <algorithm>
#include <cmath>

#include "adprep/error.hpp"

namespace adprep {

std::vector<Slice2D> extract_slices(const Volume3D& vol) {
  const Eigen::Index plane = static_cast<Eigen::Index>(vol.nx()) * vol.ny();
  std::vector<Slice2D> out;
  out.reserve(static_cast<std::size_t>(vol.nz()));
  for (int z = 0; z < vol.nz(); ++z) {
    Slice2D s;
    s.index = z;
    s.pixels = vol.voxels().segment(z * plane, plane).reshaped(vol.nx(), vol.ny());
    out.push_back(std::move(s));
  }
  return out;
}

QuantizedSlice quantize_u8(const Slice2D& slice, double vmin, double vmax) {
  if (!(vmin <= vmax)) throw Error(ErrorCode::InvalidArgument, "quantize_u8 requires vmin <= vmax");
  QuantizedSlice q;
  q.index = slice.index;
  q.image = GrayImage(slice.height(), slice.width());
  if (vmin == vmax) {
    q.degenerate_range = true;
    return q;
  }
  const double range = vmax - vmin;
  for (Eigen::Index r = 0; r < slice.pixels.rows(); ++r) {
    for (Eigen::Index c = 0; c < slice.pixels.cols(); ++c) {
      const double p = std::clamp(slice.pixels(r, c), vmin, vmax);
      const double level = std::floor((p - vmin) * 255.0 / range + 0.5);
      q.image.pixels(r, c) = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
    }
  }
  return q;
}

std::vector<QuantizedSlice> slice_and_quantize(const Volume3D& vol) {
  const double vmin = vol.voxels().minCoeff();
  const double vmax = vol.voxels().maxCoeff();
  std::vector<QuantizedSlice> out;
  for (const auto& s : extract_slices(vol)) out.push_back(quantize_u8(s, vmin, vmax));
  return out;
}

}  // namespace adprep
