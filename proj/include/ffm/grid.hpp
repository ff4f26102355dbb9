#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ffm {

/// Error categories shared by every module. Each maps to one failure mode
/// named in the operation contracts.
enum class ErrorCode {
  InvalidArgument,
  InvalidScale,
  DegenerateFit,
  DimensionMismatch,
  UndefinedIoU,
  DegenerateClasses,
  EmptyMask,
  EmptySetDistance,
  UnsupportedFormat,
  NotBinaryMask,
  CorruptFile,
  OutOfRange,
  IoError,
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UndefinedIoU: return "UndefinedIoU";
    case ErrorCode::DegenerateClasses: return "DegenerateClasses";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptySetDistance: return "EmptySetDistance";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::NotBinaryMask: return "NotBinaryMask";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Dense row-major 2-D grid. Width is the column count, height the row count.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_)
      throw Error(ErrorCode::DimensionMismatch, "grid data length does not match width x height");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * width_ + col];
  }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * width_, width_}; }
  std::span<const T> row(std::size_t r) const noexcept {
    return {data_.data() + r * width_, width_};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& vector() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

/// Real-valued map: FFMs, probability maps, loss weights.
using FloatMap = Grid<float>;
/// Double-precision map, used for distances and gradient checks.
using DoubleMap = Grid<double>;

/// Binary mask holding 0 or 1 per pixel.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : Grid(width, height, static_cast<std::uint8_t>(fill ? 1 : 0)) {}
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
      : Grid(width, height, std::move(data)) {
    for (auto v : values())
      if (v > 1) throw Error(ErrorCode::NotBinaryMask, "mask values must be 0 or 1");
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto v : values()) n += v;
    return n;
  }

  BinaryMask complement() const {
    BinaryMask out(width(), height());
    for (std::size_t i = 0; i < size(); ++i) out[i] = (*this)[i] ? 0 : 1;
    return out;
  }
};

/// Grayscale image with values in [0, gray_levels - 1].
class GrayImage : public Grid<std::uint16_t> {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint16_t fill = 0,
            unsigned gray_levels = 256)
      : Grid(width, height, fill), gray_levels_(gray_levels) {
    validate();
  }
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint16_t> data,
            unsigned gray_levels = 256)
      : Grid(width, height, std::move(data)), gray_levels_(gray_levels) {
    validate();
  }

  unsigned gray_levels() const noexcept { return gray_levels_; }

 private:
  void validate() const {
    if (gray_levels_ < 2 || gray_levels_ > 65536)
      throw Error(ErrorCode::InvalidArgument, "gray_levels must lie in [2, 65536]");
    for (auto v : values())
      if (v >= gray_levels_)
        throw Error(ErrorCode::OutOfRange, "gray value " + std::to_string(v) +
                                               " exceeds gray_levels - 1");
  }

  unsigned gray_levels_ = 256;
};

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
}

}  // namespace ffm
