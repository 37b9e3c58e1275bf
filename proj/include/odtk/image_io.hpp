#pragma once

// PNG/JPEG ingestion and PNG output, backed by OpenCV's codecs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "odtk/error.hpp"
#include "odtk/raster.hpp"

namespace odtk {

enum class ImageFormat { png, jpeg, unknown };

inline ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) return ImageFormat::png;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return ImageFormat::jpeg;
  return ImageFormat::unknown;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

/// Decodes PNG or JPEG bytes. 16-bit samples are right-shifted to 8 bits,
/// alpha is dropped, colour comes back in RGB order.
inline RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (sniff_format(bytes) == ImageFormat::unknown)
    fail(ErrorCode::UnsupportedFormat, "only PNG and JPEG are supported");
  const cv::Mat buf(1, int(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat m = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  if (m.empty()) fail(ErrorCode::DecodeFailed, "codec rejected the image data");

  if (m.depth() == CV_16U) {
    // Plain shift; convertTo would round instead of truncating.
    cv::Mat m8(m.size(), CV_MAKETYPE(CV_8U, m.channels()));
    for (int y = 0; y < m.rows; ++y) {
      const auto* s = m.ptr<std::uint16_t>(y);
      auto* d = m8.ptr<std::uint8_t>(y);
      for (int i = 0; i < m.cols * m.channels(); ++i) d[i] = std::uint8_t(s[i] >> 8);
    }
    m = m8;
  } else if (m.depth() != CV_8U) {
    fail(ErrorCode::UnsupportedFormat, "unsupported sample depth");
  }

  const int W = m.cols, H = m.rows, ch = m.channels();
  if (ch == 1 || ch == 2) {
    RasterImage out(W, H, 1);
    for (int y = 0; y < H; ++y) {
      const auto* s = m.ptr<std::uint8_t>(y);
      for (int x = 0; x < W; ++x) out.at(x, y) = s[x * ch];
    }
    return out;
  }
  if (ch == 3 || ch == 4) {
    RasterImage out(W, H, 3);
    for (int y = 0; y < H; ++y) {
      const auto* s = m.ptr<std::uint8_t>(y);
      for (int x = 0; x < W; ++x) {
        out.at(x, y, 0) = s[x * ch + 2];
        out.at(x, y, 1) = s[x * ch + 1];
        out.at(x, y, 2) = s[x * ch + 0];
      }
    }
    return out;
  }
  fail(ErrorCode::UnsupportedFormat, "unsupported channel count " + std::to_string(ch));
}

inline RasterImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_image(bytes);
}

inline std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  cv::Mat m(img.height(), img.width(), img.channels() == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    auto* d = m.ptr<std::uint8_t>(y);
    auto row = img.row(y);
    if (img.channels() == 3) {
      for (int x = 0; x < img.width(); ++x) {
        d[3 * x + 0] = row[size_t(3 * x + 2)];
        d[3 * x + 1] = row[size_t(3 * x + 1)];
        d[3 * x + 2] = row[size_t(3 * x + 0)];
      }
    } else {
      std::copy(row.begin(), row.end(), d);
    }
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", m, out)) fail(ErrorCode::IoError, "PNG encoding failed");
  return out;
}

}  // namespace odtk
