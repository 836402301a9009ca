#include "adprep/image.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "adprep/error.hpp"

namespace adprep {

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::size_t>(img.pixels.size()));
  return out;
}

GrayImage decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int width = 0, height = 0, maxval = 0;

  // Header tokens may be separated by whitespace and '#' comments.
  auto next_token = [&in](auto& value) {
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      in >> value;
      return static_cast<bool>(in);
    }
  };
  if (!next_token(magic) || magic != "P5")
    throw Error(ErrorCode::InvalidArgument, "not a binary PGM (P5) image");
  if (!next_token(width) || !next_token(height) || !next_token(maxval))
    throw Error(ErrorCode::InvalidArgument, "truncated PGM header");
  if (width < 1 || height < 1 || maxval != 255)
    throw Error(ErrorCode::InvalidArgument, "unsupported PGM geometry or maxval");
  in.get();  // single whitespace before raster

  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() < offset + n) throw Error(ErrorCode::TruncatedData, "PGM raster truncated");

  GrayImage img(height, width);
  std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data() + offset), n,
              img.pixels.data());
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::string bytes = encode_pgm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return decode_pgm(std::string(std::istreambuf_iterator<char>(in), {}));
}

}  // namespace adprep
