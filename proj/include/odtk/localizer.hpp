#pragma once

// Heuristic optic-disc localizer.
//
// Pipeline, all at a fixed working resolution:
//   resize -> grayscale -> retina circle (Otsu + largest blob) -> zero the rim
//   outside a shrunken retina circle -> keep pixels brighter than the mean of
//   the top percentile -> erode -> dilate -> pick the dominant blob -> disc
//   circle from blob area -> expand -> map back to the original image.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "odtk/error.hpp"
#include "odtk/geometry.hpp"
#include "odtk/imaging.hpp"
#include "odtk/raster.hpp"

namespace odtk {

/// Tunables of the localizer. The defaults are chosen values calibrated on
/// the synthetic corpus, not published constants.
struct LocalizerConfig {
  int working_size = 1500;
  ChannelMode channel_mode = ChannelMode::luminance;
  double fringe_margin = 0.95;
  double top_percentile = 0.01;
  StructuringElement erode_se = StructuringElement::disk(5);
  StructuringElement dilate_se = StructuringElement::disk(15);
  std::uint64_t min_blob_area = 100;
  double radius_expansion = 1.3;

  void validate() const {
    if (working_size <= 0) fail(ErrorCode::InvalidArgument, "working_size must be positive");
    if (!(fringe_margin > 0.0 && fringe_margin < 1.0))
      fail(ErrorCode::InvalidArgument, "fringe_margin must lie in (0,1)");
    if (!(top_percentile > 0.0 && top_percentile <= 1.0))
      fail(ErrorCode::InvalidArgument, "top_percentile must lie in (0,1]");
    if (erode_se.radius < 1 || dilate_se.radius < 1)
      fail(ErrorCode::InvalidArgument, "structuring element radius must be >= 1");
    if (!(radius_expansion > 1.0)) fail(ErrorCode::InvalidArgument, "radius_expansion must be > 1");
  }

  friend bool operator==(const LocalizerConfig&, const LocalizerConfig&) = default;
};

struct WorkingScale {
  double sx = 1.0;
  double sy = 1.0;
};

/// Result of one localization, in original-image coordinates.
struct DiscLocalization {
  Circle circle;  // detected disc, before expansion
  BoundingBox box;  // square around the expanded circle, clipped
  Circle retina;
  WorkingScale working_scale;
};

/// Foreground counts and intermediate values recorded while localizing.
struct PipelineTrace {
  int otsu_threshold = 0;
  double bright_threshold = 0.0;
  std::uint64_t binarized_count = 0;
  std::uint64_t eroded_count = 0;
  std::uint64_t dilated_count = 0;
  std::size_t candidate_count = 0;
  Circle working_retina;
  Circle working_disc;
};

inline Circle circle_from_component(const Component& c) {
  return {c.centroid_x + 0.5, c.centroid_y + 0.5, std::sqrt(double(c.area) / std::numbers::pi)};
}

/// Retina centre and radius from the largest Otsu-foreground blob.
inline Circle estimate_retina_geometry(const RasterImage& gray, int* threshold_out = nullptr) {
  if (gray.channels() != 1) fail(ErrorCode::InvalidChannelCount, "retina estimation needs a 1-channel image");
  const int t = otsu_threshold(gray);
  if (threshold_out) *threshold_out = t;
  const auto comps = connected_components(binarize(gray, t), gray);
  if (comps.empty() || double(comps.front().area) < 0.01 * double(gray.pixel_count()))
    fail(ErrorCode::RetinaNotFound, "no foreground blob covers 1% of the image");
  return circle_from_component(comps.front());
}

/// Zeroes every pixel whose centre lies farther than margin * r from the
/// retina centre. Pixels exactly on the boundary are kept.
inline RasterImage crop_fringe(const RasterImage& gray, const Circle& retina, double margin) {
  if (!(margin > 0.0 && margin <= 1.0)) fail(ErrorCode::InvalidArgument, "margin must lie in (0,1]");
  if (gray.channels() != 1) fail(ErrorCode::InvalidChannelCount, "crop_fringe needs a 1-channel image");
  RasterImage out = gray;
  const double limit = margin * retina.r;
  const double limit2 = limit * limit;
  for (int y = 0; y < out.height(); ++y) {
    const double dy = y + 0.5 - retina.cy;
    for (int x = 0; x < out.width(); ++x) {
      const double dx = x + 0.5 - retina.cx;
      if (dx * dx + dy * dy > limit2) out.at(x, y) = 0;
    }
  }
  return out;
}

namespace detail {

// Largest area, then brighter, then topmost-leftmost centroid.
inline bool better_candidate(const Component& a, const Component& b) {
  if (a.area != b.area) return a.area > b.area;
  if (a.mean_intensity != b.mean_intensity) return a.mean_intensity > b.mean_intensity;
  if (a.centroid_y != b.centroid_y) return a.centroid_y < b.centroid_y;
  return a.centroid_x < b.centroid_x;
}

}  // namespace detail

inline DiscLocalization localize_disc(const RasterImage& img, const LocalizerConfig& cfg,
                                      PipelineTrace* trace = nullptr) {
  cfg.validate();
  const int ws = cfg.working_size;
  const RasterImage working = resize(img, ws, ws);
  const RasterImage gray =
      working.channels() == 1 ? working : to_grayscale(working, cfg.channel_mode);

  Circle retina;
  int otsu_t = 0;
  try {
    retina = estimate_retina_geometry(gray, &otsu_t);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateHistogram)
      fail(ErrorCode::RetinaNotFound, "image has a single intensity level");
    throw;
  }

  const RasterImage cropped = crop_fringe(gray, retina, cfg.fringe_margin);
  const double bright = top_percentile_mean_threshold(cropped, cfg.top_percentile);
  const BinaryMask binary = binarize_above(cropped, bright);
  const BinaryMask eroded = erode(binary, cfg.erode_se);
  const BinaryMask dilated = dilate(eroded, cfg.dilate_se);
  const auto comps = connected_components(dilated, cropped);

  const Component* best = nullptr;
  std::size_t candidates = 0;
  for (const auto& c : comps) {
    if (c.area < cfg.min_blob_area) continue;
    ++candidates;
    if (!best || detail::better_candidate(c, *best)) best = &c;
  }

  if (trace) {
    trace->otsu_threshold = otsu_t;
    trace->bright_threshold = bright;
    trace->binarized_count = binary.count();
    trace->eroded_count = eroded.count();
    trace->dilated_count = dilated.count();
    trace->candidate_count = candidates;
    trace->working_retina = retina;
  }
  if (!best) fail(ErrorCode::NoCandidateRegion, "no bright blob survived morphology");

  const Circle disc = circle_from_component(*best);
  if (trace) trace->working_disc = disc;

  const WorkingScale scale{double(ws) / img.width(), double(ws) / img.height()};
  const double iso = std::sqrt(scale.sx * scale.sy);
  const double half = disc.r * cfg.radius_expansion;

  DiscLocalization out;
  out.working_scale = scale;
  out.circle = {disc.cx / scale.sx, disc.cy / scale.sy, disc.r / iso};
  out.retina = {retina.cx / scale.sx, retina.cy / scale.sy, retina.r / iso};
  out.box = extent_to_box((disc.cx - half) / scale.sx, (disc.cy - half) / scale.sy,
                          (disc.cx + half) / scale.sx, (disc.cy + half) / scale.sy, img.width(),
                          img.height());
  return out;
}

}  // namespace odtk
