#ifndef ADPREP_VOLUME_IO_HPP
#define ADPREP_VOLUME_IO_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace adprep {

enum class Datatype : std::int16_t {
  UInt8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  Float64 = 64,
};

enum class Endian { Little, Big };

/// Bits per voxel for a supported datatype.
int bitpix_of(Datatype dt);

/// The NIfTI-1 header fields this project reads. Orientation fields are
/// parsed but never used for slicing.
struct NiftiHeader {
  static constexpr int kSize = 348;

  std::int32_t sizeof_hdr = kSize;
  std::array<std::int16_t, 8> dim{};
  Datatype datatype = Datatype::Float32;
  std::int16_t bitpix = 32;
  std::array<float, 8> pixdim{};
  float vox_offset = 352.0f;
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  std::array<char, 4> magic{'n', '+', '1', '\0'};
  Endian endianness = Endian::Little;

  int rank() const { return dim[0]; }
  int nx() const { return dim[0] >= 1 ? dim[1] : 1; }
  int ny() const { return dim[0] >= 2 ? dim[2] : 1; }
  int nz() const { return dim[0] >= 3 ? dim[3] : 1; }
  /// Number of 3D volumes stored (product of dims 4..rank).
  int nt() const;
  bool single_file() const { return magic[1] == '+'; }
  /// Expected byte count of the voxel block.
  std::size_t data_bytes() const;
};

/// Builds a single-file header for the given extents (x, y, z[, t, ...]).
/// Throws InvalidHeader for an empty extent list or any extent < 1.
NiftiHeader make_header(std::span<const int> extents, Datatype dt);

/// Parses and validates the 348-byte header. Byte order is detected from
/// sizeof_hdr; gzip-compressed input is rejected.
NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes);

/// Immutable voxel grid, x fastest: index = x + nx * (y + ny * z).
class Volume3D {
 public:
  Volume3D(int nx, int ny, int nz, Eigen::VectorXd voxels, double slope = 1.0,
           double intercept = 0.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  const Eigen::VectorXd& voxels() const { return voxels_; }
  double operator()(int x, int y, int z) const { return voxels_[x + nx_ * (y + ny_ * z)]; }
  double scl_slope() const { return slope_; }
  double scl_inter() const { return intercept_; }

  friend bool operator==(const Volume3D& a, const Volume3D& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.nz_ == b.nz_ && a.voxels_ == b.voxels_;
  }

 private:
  int nx_, ny_, nz_;
  Eigen::VectorXd voxels_;
  double slope_, intercept_;
};

/// Decodes a single-file NIfTI-1 image. A 4D (or higher) image is unrolled
/// into one Volume3D per trailing index, in storage order.
std::vector<Volume3D> load_volume(std::span<const std::uint8_t> bytes);
std::vector<Volume3D> load_volume_file(const std::filesystem::path& path);

/// Encodes one volume as a single-file NIfTI-1 image (vox_offset 352,
/// scl_slope 1). Integer datatypes round to nearest and throw ValueOverflow
/// for values outside the type's range.
std::vector<std::uint8_t> write_nifti(const Volume3D& vol, Datatype dt,
                                      Endian endian = Endian::Little);

/// Encodes a stack of equally shaped volumes as one 4D image.
std::vector<std::uint8_t> write_nifti(std::span<const Volume3D> vols, Datatype dt,
                                      Endian endian = Endian::Little);

void write_nifti_file(const std::filesystem::path& path, const Volume3D& vol, Datatype dt);

}  // namespace adprep

#endif  // ADPREP_VOLUME_IO_HPP
