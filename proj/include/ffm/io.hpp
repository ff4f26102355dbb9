#pragma once

// File codecs: 8-bit grayscale PGM/PNG input, the FFM1 float container, and
// PNG output (8-bit masks, 16-bit quantized maps).
//
// FFM1 layout, all little-endian:
//   bytes 0..3   "FFM1"
//   bytes 4..7   width  (uint32)
//   bytes 8..11  height (uint32)
//   then width * height float32 values, row-major.

#include <png.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ffm/grid.hpp"

namespace ffm::io {

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

struct Gray8 {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> data;
};

// Minimal PGM header/token reader: whitespace separated, '#' comments to end of line.
class PgmCursor {
 public:
  explicit PgmCursor(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  std::size_t number(const char* what) {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      throw Error(ErrorCode::CorruptFile, std::string("PGM: expected ") + what);
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1u << 30)) throw Error(ErrorCode::CorruptFile, std::string("PGM: ") + what + " too large");
    }
    return v;
  }

  // exactly one whitespace byte separates the header from binary data
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw Error(ErrorCode::CorruptFile, "PGM: missing separator before raster");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

inline Gray8 decode_pgm(const std::vector<std::uint8_t>& bytes) {
  const bool binary = bytes[1] == '5';
  PgmCursor cur(bytes);
  Gray8 img;
  img.width = cur.number("width");
  img.height = cur.number("height");
  const std::size_t maxval = cur.number("maxval");
  if (img.width == 0 || img.height == 0) throw Error(ErrorCode::CorruptFile, "PGM: zero dimension");
  if (maxval != 255)
    throw Error(ErrorCode::UnsupportedFormat, "PGM maxval " + std::to_string(maxval) + " (only 8-bit, 255, supported)");
  const std::size_t n = img.width * img.height;
  img.data.resize(n);
  if (binary) {
    cur.single_space();
    if (bytes.size() - cur.pos() < n) throw Error(ErrorCode::CorruptFile, "PGM: truncated raster");
    std::memcpy(img.data.data(), bytes.data() + cur.pos(), n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = cur.number("pixel value");
      if (v > 255) throw Error(ErrorCode::CorruptFile, "PGM: pixel value exceeds maxval");
      img.data[i] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

inline Gray8 decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(ErrorCode::CorruptFile, std::string("PNG: ") + image.message);
  const auto fmt = image.format;
  if (fmt & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_COLORMAP)) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "PNG is not single-channel grayscale");
  }
  if (fmt & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "16-bit PNG input is not supported");
  }
  image.format = PNG_FORMAT_GRAY;
  Gray8 img;
  img.width = image.width;
  img.height = image.height;
  img.data.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr))
    throw Error(ErrorCode::CorruptFile, std::string("PNG: ") + image.message);
  return img;
}

inline Gray8 decode_gray8(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) return decode_pgm(bytes);
  throw Error(ErrorCode::UnsupportedFormat, path.string() + ": not an 8-bit grayscale PGM or PNG");
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      const void* pixels, bool sixteen_bit) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = sixteen_bit ? PNG_FORMAT_LINEAR_Y : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels, 0, nullptr))
    throw Error(ErrorCode::IoError, "PNG write failed for " + path.string() + ": " + image.message);
}

}  // namespace detail

inline GrayImage read_image(const std::filesystem::path& path) {
  auto g = detail::decode_gray8(path);
  return GrayImage(g.width, g.height, std::vector<std::uint16_t>(g.data.begin(), g.data.end()), 256);
}

/// Mask files hold 0 and 255 only; 255 becomes 1.
inline BinaryMask read_mask(const std::filesystem::path& path) {
  auto g = detail::decode_gray8(path);
  for (auto& v : g.data) {
    if (v != 0 && v != 255)
      throw Error(ErrorCode::NotBinaryMask, path.string() + ": value " + std::to_string(v) + " is not 0 or 255");
    v = v ? 1 : 0;
  }
  return BinaryMask(g.width, g.height, std::move(g.data));
}

inline std::vector<std::uint8_t> encode_ffm(const FloatMap& map) {
  if (map.empty()) throw Error(ErrorCode::InvalidArgument, "cannot encode an empty map");
  if (map.width() > UINT32_MAX || map.height() > UINT32_MAX)
    throw Error(ErrorCode::OutOfRange, "map dimensions exceed 32 bits");
  std::vector<std::uint8_t> out{'F', 'F', 'M', '1'};
  out.reserve(12 + 4 * map.size());
  detail::put_u32(out, static_cast<std::uint32_t>(map.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(map.height()));
  for (float v : map.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::OutOfRange, "map contains a non-finite value");
    detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline FloatMap decode_ffm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "FFM1", 4) != 0)
    throw Error(ErrorCode::CorruptFile, "missing FFM1 header");
  const std::uint64_t w = detail::get_u32(bytes.data() + 4), h = detail::get_u32(bytes.data() + 8);
  if (w == 0 || h == 0) throw Error(ErrorCode::CorruptFile, "zero map dimension");
  if (bytes.size() - 12 != 4 * w * h)
    throw Error(ErrorCode::CorruptFile, "payload is " + std::to_string(bytes.size() - 12) + " bytes, header implies " +
                                            std::to_string(4 * w * h));
  std::vector<float> data(w * h);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(detail::get_u32(bytes.data() + 12 + 4 * i));
    if (!std::isfinite(data[i])) throw Error(ErrorCode::CorruptFile, "non-finite value in payload");
  }
  return FloatMap(w, h, std::move(data));
}

inline void write_ffm(const FloatMap& map, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_ffm(map));
}

inline FloatMap read_ffm(const std::filesystem::path& path) { return decode_ffm(detail::read_bytes(path)); }

/// 16-bit grayscale PNG with v -> round(v * 65535); values must lie in [0, 1].
inline void export_png16(const FloatMap& map, const std::filesystem::path& path) {
  std::vector<std::uint16_t> px(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float v = map[i];
    if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::OutOfRange, "export_png16: value outside [0, 1]");
    px[i] = static_cast<std::uint16_t>(std::lround(static_cast<double>(v) * 65535.0));
  }
  detail::write_png(path, map.width(), map.height(), px.data(), true);
}

/// Reads a 16-bit grayscale PNG back as raw sample values.
inline Grid<std::uint16_t> read_png16(const std::filesystem::path& path) {
  const auto bytes = detail::read_bytes(path);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(ErrorCode::CorruptFile, std::string("PNG: ") + image.message);
  if (image.format != PNG_FORMAT_LINEAR_Y) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "not a 16-bit grayscale PNG");
  }
  std::vector<std::uint16_t> px(image.width * image.height);
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr))
    throw Error(ErrorCode::CorruptFile, std::string("PNG: ") + image.message);
  return Grid<std::uint16_t>(image.width, image.height, std::move(px));
}

/// 8-bit grayscale PNG; values above 255 are rejected.
inline void write_image_png(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img[i] > 255) throw Error(ErrorCode::OutOfRange, "write_image_png: value above 255");
    px[i] = static_cast<std::uint8_t>(img[i]);
  }
  detail::write_png(path, img.width(), img.height(), px.data(), false);
}

/// Mask as an 8-bit PNG of 0 and 255.
inline void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
  detail::write_png(path, mask.width(), mask.height(), px.data(), false);
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (auto v : img.values()) {
    if (v > 255) throw Error(ErrorCode::OutOfRange, "write_pgm: value above 255");
    bytes.push_back(static_cast<std::uint8_t>(v));
  }
  detail::write_bytes(path, bytes);
}

}  // namespace ffm::io
