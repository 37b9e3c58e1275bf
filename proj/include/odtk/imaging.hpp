#pragma once

// Pixel-level primitives used by the disc localizer: grayscale conversion,
// bilinear resize, Otsu and top-percentile thresholds, binary morphology and
// 8-connected component labelling. Everything here is a pure function of its
// inputs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "odtk/error.hpp"
#include "odtk/raster.hpp"

namespace odtk {

enum class ChannelMode { luminance, red, green, passthrough };

inline std::string_view to_string(ChannelMode m) {
  switch (m) {
    case ChannelMode::luminance: return "luminance";
    case ChannelMode::red: return "red";
    case ChannelMode::green: return "green";
    case ChannelMode::passthrough: return "passthrough";
  }
  return "luminance";
}

inline ChannelMode parse_channel_mode(std::string_view s) {
  if (s == "luminance") return ChannelMode::luminance;
  if (s == "red") return ChannelMode::red;
  if (s == "green") return ChannelMode::green;
  if (s == "passthrough") return ChannelMode::passthrough;
  fail(ErrorCode::ParseError, "unknown channel mode '" + std::string(s) + "'");
}

/// Collapses an RGB image to one channel. Luminance uses the BT.601 weights
/// in integer per-mille form, so the result is the exactly rounded weighted sum.
inline RasterImage to_grayscale(const RasterImage& img, ChannelMode mode = ChannelMode::luminance) {
  if (img.channels() == 1) {
    if (mode != ChannelMode::passthrough)
      fail(ErrorCode::InvalidChannelCount, "grayscale conversion needs a 3-channel image");
    return img;
  }
  if (mode == ChannelMode::passthrough)
    fail(ErrorCode::InvalidChannelCount, "passthrough requires a 1-channel image");

  RasterImage out(img.width(), img.height(), 1);
  auto src = img.data();
  auto dst = out.data();
  const size_t n = img.pixel_count();
  switch (mode) {
    case ChannelMode::luminance:
      for (size_t i = 0; i < n; ++i) {
        const unsigned r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
        dst[i] = std::uint8_t((299 * r + 587 * g + 114 * b + 500) / 1000);
      }
      break;
    case ChannelMode::red:
      for (size_t i = 0; i < n; ++i) dst[i] = src[3 * i];
      break;
    case ChannelMode::green:
      for (size_t i = 0; i < n; ++i) dst[i] = src[3 * i + 1];
      break;
    case ChannelMode::passthrough:
      break;
  }
  return out;
}

namespace detail {

struct AxisSample {
  int i0;
  int i1;
  double w1;
};

// Pixel-center aligned source coordinate for every destination index.
inline std::vector<AxisSample> bilinear_axis(int src_len, int dst_len) {
  std::vector<AxisSample> out(static_cast<size_t>(dst_len));
  const double scale = double(src_len) / double(dst_len);
  for (int d = 0; d < dst_len; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, double(src_len - 1));
    const int i0 = int(std::floor(s));
    const int i1 = std::min(i0 + 1, src_len - 1);
    out[size_t(d)] = {i0, i1, s - i0};
  }
  return out;
}

}  // namespace detail

/// Bilinear resize with independent x/y stretch.
inline RasterImage resize(const RasterImage& img, int target_w, int target_h) {
  if (target_w <= 0 || target_h <= 0) fail(ErrorCode::InvalidArgument, "resize target must be positive");
  if (target_w == img.width() && target_h == img.height()) return img;

  const int ch = img.channels();
  const auto xs = detail::bilinear_axis(img.width(), target_w);
  const auto ys = detail::bilinear_axis(img.height(), target_h);
  RasterImage out(target_w, target_h, ch);
  auto dst = out.data();

  for (int y = 0; y < target_h; ++y) {
    const auto& sy = ys[size_t(y)];
    auto r0 = img.row(sy.i0);
    auto r1 = img.row(sy.i1);
    for (int x = 0; x < target_w; ++x) {
      const auto& sx = xs[size_t(x)];
      for (int c = 0; c < ch; ++c) {
        const double a0 = r0[size_t(sx.i0 * ch + c)], a1 = r0[size_t(sx.i1 * ch + c)];
        const double b0 = r1[size_t(sx.i0 * ch + c)], b1 = r1[size_t(sx.i1 * ch + c)];
        const double top = a0 + (a1 - a0) * sx.w1;
        const double bot = b0 + (b1 - b0) * sx.w1;
        const double v = top + (bot - top) * sy.w1;
        dst[(size_t(y) * size_t(target_w) + size_t(x)) * size_t(ch) + size_t(c)] =
            std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

using Histogram = std::array<std::uint64_t, 256>;

inline Histogram histogram(const RasterImage& img) {
  if (img.channels() != 1) fail(ErrorCode::InvalidChannelCount, "histogram needs a 1-channel image");
  Histogram h{};
  for (auto v : img.data()) ++h[v];
  return h;
}

/// Otsu threshold over a 256-bin histogram. Returns the t in [0,254] that
/// maximises between-class variance for the split {<= t} / {> t}; the
/// smallest t wins ties. Comparisons are exact: the variance is proportional
/// to (N*S_t - n_t*S)^2 / (n_t*(N - n_t)), compared by cross-multiplication
/// in 256-bit integers. Total count must stay below 2^32.
inline int otsu_threshold(std::span<const std::uint64_t, 256> hist) {
  using boost::multiprecision::uint256_t;
  std::uint64_t total = 0, sum = 0;
  int distinct = 0;
  for (int v = 0; v < 256; ++v) {
    total += hist[size_t(v)];
    sum += hist[size_t(v)] * std::uint64_t(v);
    distinct += hist[size_t(v)] > 0;
  }
  if (distinct < 2) fail(ErrorCode::DegenerateHistogram, "histogram has fewer than two distinct values");
  if (total >= (std::uint64_t(1) << 32)) fail(ErrorCode::InvalidArgument, "histogram total exceeds 2^32");

  int best_t = -1;
  uint256_t best_num = 0, best_den = 1;
  std::uint64_t n_low = 0, s_low = 0;
  for (int t = 0; t < 255; ++t) {
    n_low += hist[size_t(t)];
    s_low += hist[size_t(t)] * std::uint64_t(t);
    if (n_low == 0 || n_low == total) continue;
    // N*S_t - n_t*S fits in 128 bits for N < 2^32.
    const auto a = static_cast<unsigned __int128>(total) * s_low;
    const auto b = static_cast<unsigned __int128>(n_low) * sum;
    const auto diff = a > b ? a - b : b - a;
    const uint256_t d = uint256_t(diff);
    const uint256_t num = d * d;
    const uint256_t den = uint256_t(n_low) * uint256_t(total - n_low);
    if (best_t < 0 || num * best_den > best_num * den) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  return best_t;
}

inline int otsu_threshold(const RasterImage& img) {
  const auto h = histogram(img);
  return otsu_threshold(std::span<const std::uint64_t, 256>(h));
}

/// Foreground is strictly brighter than t.
inline BinaryMask binarize(const RasterImage& img, int t) {
  if (img.channels() != 1) fail(ErrorCode::InvalidChannelCount, "binarize needs a 1-channel image");
  BinaryMask out(img.width(), img.height());
  auto src = img.data();
  auto bits = out.bits();
  for (size_t i = 0; i < src.size(); ++i) bits[i] = int(src[i]) > t ? 1 : 0;
  return out;
}

/// Mean intensity of the ceil(p*N) brightest pixels.
inline double top_percentile_mean_threshold(const RasterImage& img, double p = 0.01) {
  if (!(p > 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, "percentile fraction must lie in (0,1]");
  const auto h = histogram(img);
  const std::uint64_t n = img.pixel_count();
  // The epsilon keeps products such as 0.01 * 10000 from rounding up to 101.
  std::uint64_t take = std::uint64_t(std::ceil(p * double(n) - 1e-9));
  take = std::clamp<std::uint64_t>(take, 1, n);

  std::uint64_t remaining = take, sum = 0;
  for (int v = 255; v >= 0 && remaining > 0; --v) {
    const std::uint64_t k = std::min(remaining, h[size_t(v)]);
    sum += k * std::uint64_t(v);
    remaining -= k;
  }
  return double(sum) / double(take);
}

/// Binarize at a real-valued threshold using the strict convention value > floor(t).
inline BinaryMask binarize_above(const RasterImage& img, double t) {
  return binarize(img, int(std::floor(t)));
}

// ---------------------------------------------------------------------------
// Binary morphology
// ---------------------------------------------------------------------------

enum class ElementShape { disk, square };

/// Structuring element centred on its origin.
struct StructuringElement {
  ElementShape shape = ElementShape::disk;
  int radius = 1;

  static StructuringElement disk(int r) { return {ElementShape::disk, r}; }
  static StructuringElement square(int r) { return {ElementShape::square, r}; }

  /// Horizontal half-width of the element on row offset dy, dy in [-radius, radius].
  int half_width(int dy) const {
    if (shape == ElementShape::square) return radius;
    const int rem = radius * radius - dy * dy;
    int w = int(std::sqrt(double(rem)));
    while ((w + 1) * (w + 1) <= rem) ++w;
    while (w * w > rem) --w;
    return w;
  }

  bool contains(int dx, int dy) const {
    if (std::abs(dy) > radius) return false;
    return std::abs(dx) <= half_width(dy);
  }

  friend bool operator==(const StructuringElement&, const StructuringElement&) = default;
};

inline std::string to_string(const StructuringElement& se) {
  return std::string(se.shape == ElementShape::disk ? "disk:" : "square:") + std::to_string(se.radius);
}

inline StructuringElement parse_structuring_element(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) fail(ErrorCode::ParseError, "structuring element must be shape:radius");
  const auto shape = s.substr(0, colon);
  const std::string rad(s.substr(colon + 1));
  int r = 0;
  try {
    size_t used = 0;
    r = std::stoi(rad, &used);
    if (used != rad.size()) throw std::invalid_argument(rad);
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad structuring element radius '" + rad + "'");
  }
  if (r < 1) fail(ErrorCode::ParseError, "structuring element radius must be >= 1");
  if (shape == "disk") return StructuringElement::disk(r);
  if (shape == "square") return StructuringElement::square(r);
  fail(ErrorCode::ParseError, "unknown structuring element shape '" + std::string(shape) + "'");
}

namespace detail {

// Per-row prefix sums of foreground bits: prefix[y*(W+1) + x] = count of bits in [0,x).
inline std::vector<std::uint32_t> row_prefix_sums(const BinaryMask& m) {
  const size_t w = size_t(m.width());
  std::vector<std::uint32_t> prefix(size_t(m.height()) * (w + 1));
  auto bits = m.bits();
  for (int y = 0; y < m.height(); ++y) {
    std::uint32_t* p = prefix.data() + size_t(y) * (w + 1);
    const std::uint8_t* b = bits.data() + size_t(y) * w;
    p[0] = 0;
    for (size_t x = 0; x < w; ++x) p[x + 1] = p[x] + b[x];
  }
  return prefix;
}

}  // namespace detail

/// Erosion with background outside the image: a pixel survives iff the element
/// placed on it lies entirely inside the foreground.
inline BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  const int W = mask.width(), H = mask.height(), r = se.radius;
  const auto prefix = detail::row_prefix_sums(mask);
  BinaryMask out(W, H);
  auto bits = out.bits();
  for (int y = 0; y < H; ++y) {
    std::uint8_t* o = bits.data() + size_t(y) * size_t(W);
    if (y - r < 0 || y + r >= H) continue;
    std::fill(o, o + W, std::uint8_t(1));
    for (int dy = -r; dy <= r; ++dy) {
      const int hw = se.half_width(dy);
      const std::uint32_t* p = prefix.data() + size_t(y + dy) * size_t(W + 1);
      const std::uint32_t full = std::uint32_t(2 * hw + 1);
      for (int x = 0; x < W; ++x) {
        if (!o[x]) continue;
        if (x - hw < 0 || x + hw >= W || p[x + hw + 1] - p[x - hw] != full) o[x] = 0;
      }
    }
  }
  return out;
}

/// Dilation: a pixel is set iff the element placed on it touches the foreground.
inline BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  const int W = mask.width(), H = mask.height(), r = se.radius;
  const auto prefix = detail::row_prefix_sums(mask);
  BinaryMask out(W, H);
  auto bits = out.bits();
  for (int y = 0; y < H; ++y) {
    std::uint8_t* o = bits.data() + size_t(y) * size_t(W);
    for (int dy = -r; dy <= r; ++dy) {
      const int yy = y + dy;
      if (yy < 0 || yy >= H) continue;
      const std::uint32_t* p = prefix.data() + size_t(yy) * size_t(W + 1);
      if (p[W] == 0) continue;
      const int hw = se.half_width(dy);
      for (int x = 0; x < W; ++x) {
        if (o[x]) continue;
        const int lo = std::max(0, x - hw);
        const int hi = std::min(W - 1, x + hw);
        if (p[hi + 1] != p[lo]) o[x] = 1;
      }
    }
  }
  return out;
}

inline BinaryMask open(const BinaryMask& mask, const StructuringElement& se) {
  return dilate(erode(mask, se), se);
}

// ---------------------------------------------------------------------------
// Connected components
// ---------------------------------------------------------------------------

struct PixelBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

/// One 8-connected foreground blob. Centroid is in pixel-index coordinates.
struct Component {
  std::uint64_t area = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  PixelBox bbox;
  double mean_intensity = 0.0;
};

/// Labels 8-connected foreground blobs, sorted by area (descending); equal
/// areas keep raster order of their first pixel. `labels_out`, when given,
/// receives a per-pixel index into the returned list (or -1 for background).
inline std::vector<Component> connected_components(const BinaryMask& mask, const RasterImage& reference,
                                                   std::vector<int>* labels_out = nullptr) {
  if (reference.channels() != 1) fail(ErrorCode::InvalidChannelCount, "reference must be 1-channel");
  if (reference.width() != mask.width() || reference.height() != mask.height())
    fail(ErrorCode::InvalidArgument, "reference dimensions do not match mask");

  const int W = mask.width(), H = mask.height();
  auto bits = mask.bits();
  auto ref = reference.data();
  std::vector<int> labels(mask.size(), -1);
  std::vector<Component> comps;
  std::vector<int> stack;

  for (int y0 = 0; y0 < H; ++y0) {
    for (int x0 = 0; x0 < W; ++x0) {
      const size_t seed = size_t(y0) * size_t(W) + size_t(x0);
      if (!bits[seed] || labels[seed] >= 0) continue;
      const int id = int(comps.size());
      std::uint64_t area = 0, sx = 0, sy = 0, si = 0;
      int minx = x0, maxx = x0, miny = y0, maxy = y0;
      labels[seed] = id;
      stack.assign(1, int(seed));
      while (!stack.empty()) {
        const size_t idx = size_t(stack.back());
        stack.pop_back();
        const int x = int(idx % size_t(W)), y = int(idx / size_t(W));
        ++area;
        sx += std::uint64_t(x);
        sy += std::uint64_t(y);
        si += ref[idx];
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
        for (int dy = -1; dy <= 1; ++dy) {
          const int ny = y + dy;
          if (ny < 0 || ny >= H) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            if (nx < 0 || nx >= W || (dx == 0 && dy == 0)) continue;
            const size_t n = size_t(ny) * size_t(W) + size_t(nx);
            if (bits[n] && labels[n] < 0) {
              labels[n] = id;
              stack.push_back(int(n));
            }
          }
        }
      }
      Component c;
      c.area = area;
      c.centroid_x = double(sx) / double(area);
      c.centroid_y = double(sy) / double(area);
      c.bbox = {minx, miny, maxx - minx + 1, maxy - miny + 1};
      c.mean_intensity = double(si) / double(area);
      comps.push_back(c);
    }
  }

  std::vector<int> order(comps.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return comps[size_t(a)].area > comps[size_t(b)].area; });
  std::vector<Component> sorted;
  sorted.reserve(comps.size());
  std::vector<int> remap(comps.size());
  for (size_t i = 0; i < order.size(); ++i) {
    sorted.push_back(comps[size_t(order[i])]);
    remap[size_t(order[i])] = int(i);
  }
  if (labels_out) {
    for (auto& l : labels)
      if (l >= 0) l = remap[size_t(l)];
    *labels_out = std::move(labels);
  }
  return sorted;
}

}  // namespace odtk
