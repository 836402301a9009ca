#ifndef ADPREP_SLICER_HPP
#define ADPREP_SLICER_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "adprep/image.hpp"
#include "adprep/volume_io.hpp"

namespace adprep {

/// One z-plane of a volume: height = nx rows, width = ny columns.
/// `pixels` is column-major, so its storage order is the volume's own
/// x-fastest voxel order for that plane.
struct Slice2D {
  int index = 0;
  Eigen::MatrixXd pixels;

  int height() const { return static_cast<int>(pixels.rows()); }
  int width() const { return static_cast<int>(pixels.cols()); }
  std::string name() const { return "Image_" + std::to_string(index); }
};

/// Exactly nz slices, in ascending z.
std::vector<Slice2D> extract_slices(const Volume3D& vol);

struct QuantizedSlice {
  int index = 0;
  GrayImage image;
  bool degenerate_range = false;

  std::string name() const { return "Image_" + std::to_string(index); }
};

/// Maps [vmin, vmax] linearly onto 0..255 with round-half-up; values outside
/// the range are clamped. vmin == vmax yields an all-zero image flagged
/// `degenerate_range`.
QuantizedSlice quantize_u8(const Slice2D& slice, double vmin, double vmax);

/// Slices a volume and quantizes every plane with the volume-wide min/max.
std::vector<QuantizedSlice> slice_and_quantize(const Volume3D& vol);

}  // namespace adprep

#endif  // ADPREP_SLICER_HPP
