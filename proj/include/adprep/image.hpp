#ifndef ADPREP_IMAGE_HPP
#define ADPREP_IMAGE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace adprep {

using GrayPixels = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit single-channel image, row-major (height rows x width columns).
struct GrayImage {
  GrayPixels pixels;

  GrayImage() = default;
  explicit GrayImage(GrayPixels p) : pixels(std::move(p)) {}
  GrayImage(int height, int width, std::uint8_t fill = 0)
      : pixels(GrayPixels::Constant(height, width, fill)) {}

  int width() const { return static_cast<int>(pixels.cols()); }
  int height() const { return static_cast<int>(pixels.rows()); }
  Eigen::Index size() const { return pixels.size(); }

  friend bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.pixels.rows() == b.pixels.rows() && a.pixels.cols() == b.pixels.cols() &&
           a.pixels == b.pixels;
  }
};

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(int h, int w, Rgb fill = {0, 0, 0})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  Rgb& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  const Rgb& at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

/// Binary PGM (P5, maxval 255): "P5\n<w> <h>\n255\n" + row-major bytes.
std::string encode_pgm(const GrayImage& img);
GrayImage decode_pgm(const std::string& bytes);

void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace adprep

#endif  // ADPREP_IMAGE_HPP
