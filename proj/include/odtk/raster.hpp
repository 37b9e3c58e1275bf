#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odtk/error.hpp"

namespace odtk {

/// Decoded 8-bit image, row-major, channel-interleaved (RGB order for 3 channels).
class RasterImage {
 public:
  RasterImage() = default;

  RasterImage(int width, int height, int channels, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    validate_shape();
    data_.assign(size_t(width) * size_t(height) * size_t(channels), fill);
  }

  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != size_t(width) * size_t(height) * size_t(channels)) {
      fail(ErrorCode::InvalidArgument, "pixel buffer length does not match " +
                                           std::to_string(width) + "x" + std::to_string(height) +
                                           "x" + std::to_string(channels));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  size_t pixel_count() const noexcept { return size_t(width_) * size_t(height_); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(size_t(y) * size_t(width_) + size_t(x)) * size_t(channels_) + size_t(c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(size_t(y) * size_t(width_) + size_t(x)) * size_t(channels_) + size_t(c)];
  }

  std::span<const std::uint8_t> row(int y) const {
    return std::span<const std::uint8_t>(data_).subspan(size_t(y) * size_t(width_) * size_t(channels_),
                                                        size_t(width_) * size_t(channels_));
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  void validate_shape() const {
    if (width_ <= 0 || height_ <= 0) fail(ErrorCode::InvalidArgument, "image dimensions must be positive");
    if (channels_ != 1 && channels_ != 3) fail(ErrorCode::InvalidChannelCount, "channels must be 1 or 3");
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// One boolean per pixel, stored as 0/1 bytes.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false)
      : width_(width), height_(height), bits_(size_t(width) * size_t(height), value ? 1 : 0) {
    if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "mask dimensions must be positive");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  size_t size() const noexcept { return bits_.size(); }

  bool get(int x, int y) const { return bits_[size_t(y) * size_t(width_) + size_t(x)] != 0; }
  void set(int x, int y, bool v) { bits_[size_t(y) * size_t(width_) + size_t(x)] = v ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  size_t count() const noexcept {
    size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  BinaryMask complement() const {
    BinaryMask out = *this;
    for (auto& b : out.bits_) b = b ? 0 : 1;
    return out;
  }

  /// True when every foreground pixel of this mask is also set in `other`.
  bool subset_of(const BinaryMask& other) const {
    if (other.width_ != width_ || other.height_ != height_) return false;
    for (size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] && !other.bits_[i]) return false;
    return true;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace odtk
