#include "adprep/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "adprep/error.hpp"

namespace adprep {

namespace {

// Byte offsets inside the 348-byte NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffMagic = 344;

constexpr bool host_is_little = std::endian::native == std::endian::little;

template <typename T>
T read_at(std::span<const std::uint8_t> bytes, std::size_t offset, bool swap) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), bytes.data() + offset, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  T value;
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

template <typename T>
void write_at(std::vector<std::uint8_t>& bytes, std::size_t offset, T value, bool swap) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  std::memcpy(bytes.data() + offset, raw.data(), sizeof(T));
}

bool is_supported(std::int16_t code) {
  switch (code) {
    case 2: case 4: case 8: case 16: case 64: return true;
    default: return false;
  }
}

template <typename T>
double decode_voxel(std::span<const std::uint8_t> bytes, std::size_t offset, bool swap) {
  return static_cast<double>(read_at<T>(bytes, offset, swap));
}

double read_voxel(std::span<const std::uint8_t> bytes, std::size_t offset, Datatype dt,
                  bool swap) {
  switch (dt) {
    case Datatype::UInt8: return decode_voxel<std::uint8_t>(bytes, offset, swap);
    case Datatype::Int16: return decode_voxel<std::int16_t>(bytes, offset, swap);
    case Datatype::Int32: return decode_voxel<std::int32_t>(bytes, offset, swap);
    case Datatype::Float32: return decode_voxel<float>(bytes, offset, swap);
    case Datatype::Float64: return decode_voxel<double>(bytes, offset, swap);
  }
  throw Error(ErrorCode::UnsupportedDatatype, "datatype " + std::to_string(static_cast<int>(dt)));
}

template <typename T>
void encode_integer(std::vector<std::uint8_t>& out, std::size_t offset, double v, bool swap) {
  if (!std::isfinite(v)) throw Error(ErrorCode::ValueOverflow, "non-finite voxel");
  const double r = std::floor(v + 0.5);
  if (r < static_cast<double>(std::numeric_limits<T>::min()) ||
      r > static_cast<double>(std::numeric_limits<T>::max())) {
    throw Error(ErrorCode::ValueOverflow,
                "voxel value " + std::to_string(v) + " does not fit the integer datatype");
  }
  write_at<T>(out, offset, static_cast<T>(r), swap);
}

void write_voxel(std::vector<std::uint8_t>& out, std::size_t offset, double v, Datatype dt,
                 bool swap) {
  switch (dt) {
    case Datatype::UInt8: encode_integer<std::uint8_t>(out, offset, v, swap); return;
    case Datatype::Int16: encode_integer<std::int16_t>(out, offset, v, swap); return;
    case Datatype::Int32: encode_integer<std::int32_t>(out, offset, v, swap); return;
    case Datatype::Float32: {
      if (std::isfinite(v) && std::abs(v) > std::numeric_limits<float>::max())
        throw Error(ErrorCode::ValueOverflow, "voxel value exceeds float32 range");
      write_at<float>(out, offset, static_cast<float>(v), swap);
      return;
    }
    case Datatype::Float64: write_at<double>(out, offset, v, swap); return;
  }
  throw Error(ErrorCode::UnsupportedDatatype, "datatype " + std::to_string(static_cast<int>(dt)));
}

void validate(const NiftiHeader& h) {
  const int rank = h.dim[0];
  if (rank < 1 || rank > 7)
    throw Error(ErrorCode::InvalidHeader, "dim[0] must be in 1..7, got " + std::to_string(rank));
  for (int i = 1; i <= rank; ++i) {
    if (h.dim[i] < 1)
      throw Error(ErrorCode::InvalidHeader,
                  "dim[" + std::to_string(i) + "] must be >= 1, got " + std::to_string(h.dim[i]));
  }
  if (h.bitpix != bitpix_of(h.datatype))
    throw Error(ErrorCode::InvalidHeader, "bitpix " + std::to_string(h.bitpix) +
                                              " inconsistent with datatype " +
                                              std::to_string(static_cast<int>(h.datatype)));
  if (h.single_file() && !(h.vox_offset >= static_cast<float>(NiftiHeader::kSize)))
    throw Error(ErrorCode::InvalidHeader, "vox_offset below 348 in single-file image");
}

}  // namespace

int bitpix_of(Datatype dt) {
  switch (dt) {
    case Datatype::UInt8: return 8;
    case Datatype::Int16: return 16;
    case Datatype::Int32: return 32;
    case Datatype::Float32: return 32;
    case Datatype::Float64: return 64;
  }
  throw Error(ErrorCode::UnsupportedDatatype, "datatype " + std::to_string(static_cast<int>(dt)));
}

int NiftiHeader::nt() const {
  int t = 1;
  for (int i = 4; i <= dim[0]; ++i) t *= dim[i];
  return t;
}

std::size_t NiftiHeader::data_bytes() const {
  return static_cast<std::size_t>(nx()) * ny() * nz() * nt() * (bitpix / 8);
}

NiftiHeader make_header(std::span<const int> extents, Datatype dt) {
  if (extents.empty() || extents.size() > 7)
    throw Error(ErrorCode::InvalidHeader, "rank must be in 1..7");
  NiftiHeader h;
  h.dim.fill(1);
  h.dim[0] = static_cast<std::int16_t>(extents.size());
  for (std::size_t i = 0; i < extents.size(); ++i) {
    if (extents[i] < 1 || extents[i] > std::numeric_limits<std::int16_t>::max())
      throw Error(ErrorCode::InvalidHeader, "extent out of range: " + std::to_string(extents[i]));
    h.dim[i + 1] = static_cast<std::int16_t>(extents[i]);
  }
  h.pixdim.fill(1.0f);
  h.datatype = dt;
  h.bitpix = static_cast<std::int16_t>(bitpix_of(dt));
  return h;
}

NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
    throw Error(ErrorCode::GzipUnsupported, "gzip-compressed NIfTI (.nii.gz) is not supported");
  if (bytes.size() < static_cast<std::size_t>(NiftiHeader::kSize))
    throw Error(ErrorCode::TooShort,
                "need 348 header bytes, got " + std::to_string(bytes.size()));

  NiftiHeader h;
  const auto raw_size = read_at<std::int32_t>(bytes, kOffSizeofHdr, false);
  bool swap = false;
  if (raw_size == NiftiHeader::kSize) {
    swap = false;
  } else if (read_at<std::int32_t>(bytes, kOffSizeofHdr, true) == NiftiHeader::kSize) {
    swap = true;
  } else {
    throw Error(ErrorCode::BadSize, "sizeof_hdr is " + std::to_string(raw_size));
  }
  h.endianness = (host_is_little != swap) ? Endian::Little : Endian::Big;
  h.sizeof_hdr = NiftiHeader::kSize;

  std::memcpy(h.magic.data(), bytes.data() + kOffMagic, 4);
  const bool magic_ok = (h.magic[0] == 'n' && (h.magic[1] == '+' || h.magic[1] == 'i') &&
                         h.magic[2] == '1' && h.magic[3] == '\0');
  if (!magic_ok) throw Error(ErrorCode::BadMagic, "magic is not \"n+1\" or \"ni1\"");

  const auto code = read_at<std::int16_t>(bytes, kOffDatatype, swap);
  if (!is_supported(code))
    throw Error(ErrorCode::UnsupportedDatatype, "datatype code " + std::to_string(code));
  h.datatype = static_cast<Datatype>(code);

  for (std::size_t i = 0; i < 8; ++i) {
    h.dim[i] = read_at<std::int16_t>(bytes, kOffDim + 2 * i, swap);
    h.pixdim[i] = read_at<float>(bytes, kOffPixdim + 4 * i, swap);
  }
  h.bitpix = read_at<std::int16_t>(bytes, kOffBitpix, swap);
  h.vox_offset = read_at<float>(bytes, kOffVoxOffset, swap);
  h.scl_slope = read_at<float>(bytes, kOffSclSlope, swap);
  h.scl_inter = read_at<float>(bytes, kOffSclInter, swap);
  h.qform_code = read_at<std::int16_t>(bytes, kOffQformCode, swap);
  h.sform_code = read_at<std::int16_t>(bytes, kOffSformCode, swap);

  validate(h);
  return h;
}

Volume3D::Volume3D(int nx, int ny, int nz, Eigen::VectorXd voxels, double slope,
                   double intercept)
    : nx_(nx), ny_(ny), nz_(nz), voxels_(std::move(voxels)), slope_(slope),
      intercept_(intercept) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw Error(ErrorCode::InvalidArgument, "volume dimensions must be positive");
  if (voxels_.size() != static_cast<Eigen::Index>(nx) * ny * nz)
    throw Error(ErrorCode::DimensionMismatch, "voxel count does not match nx*ny*nz");
  if (!voxels_.allFinite())
    throw Error(ErrorCode::InvalidArgument, "volume contains non-finite voxels");
}

std::vector<Volume3D> load_volume(std::span<const std::uint8_t> bytes) {
  const NiftiHeader h = parse_nifti_header(bytes);
  if (!h.single_file())
    throw Error(ErrorCode::InvalidHeader, "paired .hdr/.img images are not supported");

  const auto offset = static_cast<std::size_t>(h.vox_offset);
  const std::size_t need = offset + h.data_bytes();
  if (bytes.size() < need)
    throw Error(ErrorCode::TruncatedData, "expected " + std::to_string(need) + " bytes, got " +
                                              std::to_string(bytes.size()));

  const bool swap = (h.endianness == Endian::Little) != host_is_little;
  const bool scaled = h.scl_slope != 0.0f;
  const double slope = scaled ? h.scl_slope : 1.0;
  const double inter = scaled ? h.scl_inter : 0.0;
  const Eigen::Index per_volume = static_cast<Eigen::Index>(h.nx()) * h.ny() * h.nz();
  const std::size_t width = static_cast<std::size_t>(h.bitpix / 8);

  std::vector<Volume3D> out;
  out.reserve(static_cast<std::size_t>(h.nt()));
  for (int t = 0; t < h.nt(); ++t) {
    Eigen::VectorXd v(per_volume);
    const std::size_t base = offset + static_cast<std::size_t>(t) * per_volume * width;
    for (Eigen::Index i = 0; i < per_volume; ++i) {
      const double raw = read_voxel(bytes, base + static_cast<std::size_t>(i) * width,
                                    h.datatype, swap);
      v[i] = scaled ? raw * slope + inter : raw;
    }
    out.emplace_back(h.nx(), h.ny(), h.nz(), std::move(v), slope, inter);
  }
  return out;
}

std::vector<Volume3D> load_volume_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_volume(bytes);
}

std::vector<std::uint8_t> write_nifti(std::span<const Volume3D> vols, Datatype dt,
                                      Endian endian) {
  if (vols.empty()) throw Error(ErrorCode::InvalidArgument, "no volumes to write");
  const Volume3D& first = vols.front();
  for (const auto& v : vols) {
    if (v.nx() != first.nx() || v.ny() != first.ny() || v.nz() != first.nz())
      throw Error(ErrorCode::DimensionMismatch, "4D stack requires equally shaped volumes");
  }
  std::vector<int> extents{first.nx(), first.ny(), first.nz()};
  if (vols.size() > 1) extents.push_back(static_cast<int>(vols.size()));
  const NiftiHeader h = make_header(extents, dt);

  const bool swap = (endian == Endian::Little) != host_is_little;
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  std::vector<std::uint8_t> out(offset + h.data_bytes(), 0);

  write_at<std::int32_t>(out, kOffSizeofHdr, h.sizeof_hdr, swap);
  out[38] = 'r';  // "regular", legacy ANALYZE field
  for (std::size_t i = 0; i < 8; ++i) {
    write_at<std::int16_t>(out, kOffDim + 2 * i, h.dim[i], swap);
    write_at<float>(out, kOffPixdim + 4 * i, h.pixdim[i], swap);
  }
  write_at<std::int16_t>(out, kOffDatatype, static_cast<std::int16_t>(h.datatype), swap);
  write_at<std::int16_t>(out, kOffBitpix, h.bitpix, swap);
  write_at<float>(out, kOffVoxOffset, h.vox_offset, swap);
  write_at<float>(out, kOffSclSlope, h.scl_slope, swap);
  write_at<float>(out, kOffSclInter, h.scl_inter, swap);
  std::memcpy(out.data() + kOffMagic, h.magic.data(), 4);

  const std::size_t width = static_cast<std::size_t>(h.bitpix / 8);
  std::size_t pos = offset;
  for (const auto& v : vols) {
    for (Eigen::Index i = 0; i < v.voxels().size(); ++i, pos += width)
      write_voxel(out, pos, v.voxels()[i], dt, swap);
  }
  return out;
}

std::vector<std::uint8_t> write_nifti(const Volume3D& vol, Datatype dt, Endian endian) {
  return write_nifti(std::span<const Volume3D>(&vol, 1), dt, endian);
}

void write_nifti_file(const std::filesystem::path& path, const Volume3D& vol, Datatype dt) {
  const auto bytes = write_nifti(vol, dt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace adprep
