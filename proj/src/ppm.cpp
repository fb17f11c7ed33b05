#include <cctype>
#include <fstream>
#include <iterator>

#include "netforge/dataset.hpp"
#include "netforge/error.hpp"
#include "netforge/graph_io.hpp"

namespace netforge {

namespace {

// Skips whitespace and '#' comments, then reads a decimal header field.
std::size_t header_field(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const unsigned char ch = static_cast<unsigned char>(bytes[pos]);
    if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(ch)) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t value = 0, digits = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
    if (++digits > 9) throw FormatError("PPM header value too large");
    ++pos;
  }
  if (digits == 0) throw FormatError("malformed PPM header");
  return value;
}

}  // namespace

Image8 decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM (P6)");
  std::size_t pos = 2;
  Image8 image;
  image.width = header_field(bytes, pos);
  image.height = header_field(bytes, pos);
  const std::size_t maxval = header_field(bytes, pos);
  if (maxval != 255) throw FormatError("unsupported PPM maxval " + std::to_string(maxval));
  if (image.width == 0 || image.height == 0) throw FormatError("empty PPM image");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("malformed PPM header");
  }
  ++pos;
  const std::size_t n = image.width * image.height * 3;
  if (bytes.size() - pos < n) throw FormatError("truncated PPM payload");
  image.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return image;
}

std::string encode_ppm(const Image8& image) {
  if (image.rgb.size() != image.width * image.height * 3) {
    throw ShapeError("image buffer does not match " + std::to_string(image.width) + "x" +
                     std::to_string(image.height));
  }
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.rgb.begin(), image.rgb.end());
  return out;
}

Image8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_ppm(const std::filesystem::path& path, const Image8& image) {
  write_file_atomic(path, encode_ppm(image));
}

Tensor<float> to_tensor(const Image8& image, std::size_t extent) {
  if (extent == 0) throw GeometryError("resize extent must be >= 1");
  Tensor<float> out({3, extent, extent});
  auto dst = out.data();
  for (std::size_t y = 0; y < extent; ++y) {
    const std::size_t sy = y * image.height / extent;
    for (std::size_t x = 0; x < extent; ++x) {
      const std::size_t sx = x * image.width / extent;
      const std::uint8_t* px = &image.rgb[(sy * image.width + sx) * 3];
      for (std::size_t c = 0; c < 3; ++c) dst[(c * extent + y) * extent + x] = px[c];
    }
  }
  return out;
}

}  // namespace netforge
