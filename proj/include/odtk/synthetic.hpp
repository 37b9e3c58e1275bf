#pragma once

// Procedural fundus generator. Each scene is a dark orange retina disk on a
// black field with one bright optic disc, tapering vessel strokes, a darker
// macula and, on demand, the two artefacts the localizer is built to survive:
// a bright fringe arc at the retinal rim and a cloud of small shiny
// reflections around the macula. The generator knows the true disc circle, so
// it doubles as ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <numbers>
#include <numeric>
#include <vector>

#include "odtk/error.hpp"
#include "odtk/geometry.hpp"
#include "odtk/raster.hpp"

namespace odtk {

/// splitmix64; also used to derive independent per-image streams from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Small deterministic generator with fully specified derived distributions
/// (the std:: distributions are implementation-defined).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1) with 53 random bits.
  double unit() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Uniform integer in [0, bound) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) fail(ErrorCode::InvalidArgument, "bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % bound;
  }

  int uniform_int(int lo, int hi) { return lo + int(below(std::uint64_t(hi - lo + 1))); }

  /// Fisher-Yates, last element first.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t state_;
};

struct SynthParams {
  int min_size = 1000;
  int max_size = 2000;
  double fringe_rate = 0.3;
  double reflection_rate = 0.3;
  double retina_fraction_min = 0.42;  // retina radius / image side
  double retina_fraction_max = 0.47;
  double disc_fraction_min = 0.10;  // disc radius / retina radius
  double disc_fraction_max = 0.14;
  bool vessels = true;
};

struct FringeArc {
  double angle = 0.0;  // centre of the arc, radians
  double span = 0.0;   // angular extent, radians
  double inner = 0.0;  // radial band as fractions of the retina radius
  double outer = 0.0;
};

struct VesselStroke {
  std::array<double, 6> control{};  // quadratic Bezier: x0 y0 x1 y1 x2 y2
  double width0 = 0.0;  // half-width at the disc end
  double width1 = 0.0;  // half-width at the far end
};

struct FundusScene {
  int width = 0;
  int height = 0;
  Circle retina;
  Circle disc;
  Circle macula;
  std::vector<VesselStroke> vessels;
  std::vector<FringeArc> fringe;
  std::vector<Circle> reflections;
  std::uint64_t noise_seed = 0;
  double salt_fraction = 5e-5;
};

struct SyntheticFundus {
  std::string image_id;
  FundusScene scene;
  RasterImage image;
  BoundingBox gt_box;
  bool has_fringe() const { return !scene.fringe.empty(); }
  bool has_reflections() const { return !scene.reflections.empty(); }
};

/// Ground-truth box: the square enclosing the disc circle.
inline BoundingBox scene_gt_box(const FundusScene& s) {
  return circle_to_bbox(s.disc, 1.0, s.width, s.height);
}

inline FundusScene random_scene(SeededRng& rng, const SynthParams& p, int width, int height, bool fringe,
                                bool reflections) {
  FundusScene s;
  s.width = width;
  s.height = height;
  const double side = std::min(width, height);
  const double R = side * rng.uniform(p.retina_fraction_min, p.retina_fraction_max);
  s.retina = {width * 0.5 + side * rng.uniform(-0.02, 0.02), height * 0.5 + side * rng.uniform(-0.02, 0.02), R};

  const double eye = rng.unit() < 0.5 ? -1.0 : 1.0;  // which side the disc sits on
  const double rd = R * rng.uniform(p.disc_fraction_min, p.disc_fraction_max);
  s.disc = {s.retina.cx + eye * R * rng.uniform(0.30, 0.50), s.retina.cy + R * rng.uniform(-0.12, 0.12), rd};
  s.macula = {s.disc.cx - eye * rd * rng.uniform(4.5, 5.5), s.disc.cy + rd * rng.uniform(-0.4, 0.4), rd * 1.6};

  if (p.vessels) {
    const double w0 = R * rng.uniform(0.006, 0.009);
    // Temporal arcades bend around the macula; nasal branches fan outwards.
    for (double up : {-1.0, 1.0}) {
      VesselStroke arcade;
      arcade.control = {s.disc.cx,
                        s.disc.cy,
                        s.disc.cx - eye * R * rng.uniform(0.05, 0.15),
                        s.disc.cy + up * R * rng.uniform(0.40, 0.55),
                        s.disc.cx - eye * R * rng.uniform(0.75, 0.95),
                        s.disc.cy + up * R * rng.uniform(0.30, 0.45)};
      arcade.width0 = w0;
      arcade.width1 = w0 * 0.4;
      s.vessels.push_back(arcade);

      VesselStroke nasal;
      nasal.control = {s.disc.cx,
                       s.disc.cy,
                       s.disc.cx + eye * R * rng.uniform(0.10, 0.20),
                       s.disc.cy + up * R * rng.uniform(0.20, 0.35),
                       s.disc.cx + eye * R * rng.uniform(0.30, 0.45),
                       s.disc.cy + up * R * rng.uniform(0.45, 0.65)};
      nasal.width0 = w0 * 0.8;
      nasal.width1 = w0 * 0.3;
      s.vessels.push_back(nasal);
    }
    const int branches = rng.uniform_int(2, 4);
    for (int b = 0; b < branches; ++b) {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double len = R * rng.uniform(0.3, 0.6);
      const double sx = s.disc.cx + std::cos(a) * rd * 0.3, sy = s.disc.cy + std::sin(a) * rd * 0.3;
      const double bend = rng.uniform(-0.4, 0.4);
      VesselStroke v;
      v.control = {sx,
                   sy,
                   sx + std::cos(a + bend) * len * 0.5,
                   sy + std::sin(a + bend) * len * 0.5,
                   sx + std::cos(a) * len,
                   sy + std::sin(a) * len};
      v.width0 = w0 * 0.6;
      v.width1 = w0 * 0.25;
      s.vessels.push_back(v);
    }
  }

  if (fringe) {
    FringeArc arc;
    arc.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    arc.span = rng.uniform(0.8, 2.0);
    arc.inner = rng.uniform(0.975, 0.985);
    arc.outer = rng.uniform(1.005, 1.015);
    s.fringe.push_back(arc);
  }

  if (reflections) {
    // Spot radii are kept below the default erosion radius at working scale.
    const double to_orig = side / 1500.0;
    const int n = rng.uniform_int(15, 40);
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double d = rd * 3.0 * std::sqrt(rng.unit());
      s.reflections.push_back({s.macula.cx + std::cos(a) * d, s.macula.cy + std::sin(a) * d,
                               rng.uniform(1.5, 3.5) * to_orig});
    }
  }
  s.noise_seed = rng.next();
  return s;
}

/// The same scene drawn on a canvas `factor` times larger in each direction.
inline FundusScene scale_scene(FundusScene s, double factor) {
  const auto scale_circle = [factor](Circle& c) {
    c.cx *= factor;
    c.cy *= factor;
    c.r *= factor;
  };
  s.width = int(std::lround(s.width * factor));
  s.height = int(std::lround(s.height * factor));
  scale_circle(s.retina);
  scale_circle(s.disc);
  scale_circle(s.macula);
  for (auto& c : s.reflections) scale_circle(c);
  for (auto& v : s.vessels) {
    for (auto& c : v.control) c *= factor;
    v.width0 *= factor;
    v.width1 *= factor;
  }
  return s;
}

namespace detail {

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Multiplicative darkening field for the vessel tree, 1 = untouched.
inline std::vector<float> vessel_field(const FundusScene& s) {
  std::vector<float> field(size_t(s.width) * size_t(s.height), 1.0f);
  constexpr int kSegments = 64;
  for (const auto& v : s.vessels) {
    const auto& c = v.control;
    std::array<double, 2 * (kSegments + 1)> pts{};
    for (int i = 0; i <= kSegments; ++i) {
      const double t = double(i) / kSegments, u = 1.0 - t;
      pts[size_t(2 * i)] = u * u * c[0] + 2 * u * t * c[2] + t * t * c[4];
      pts[size_t(2 * i + 1)] = u * u * c[1] + 2 * u * t * c[3] + t * t * c[5];
    }
    for (int i = 0; i < kSegments; ++i) {
      const double ax = pts[size_t(2 * i)], ay = pts[size_t(2 * i + 1)];
      const double bx = pts[size_t(2 * i + 2)], by = pts[size_t(2 * i + 3)];
      const double t0 = double(i) / kSegments, t1 = double(i + 1) / kSegments;
      const double wa = v.width0 + (v.width1 - v.width0) * t0;
      const double wb = v.width0 + (v.width1 - v.width0) * t1;
      const double wmax = std::max(wa, wb);
      const int x0 = std::max(0, int(std::floor(std::min(ax, bx) - wmax - 1)));
      const int x1 = std::min(s.width - 1, int(std::ceil(std::max(ax, bx) + wmax + 1)));
      const int y0 = std::max(0, int(std::floor(std::min(ay, by) - wmax - 1)));
      const int y1 = std::min(s.height - 1, int(std::ceil(std::max(ay, by) + wmax + 1)));
      const double ex = bx - ax, ey = by - ay;
      const double len2 = std::max(ex * ex + ey * ey, 1e-12);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double px = x + 0.5 - ax, py = y + 0.5 - ay;
          const double t = std::clamp((px * ex + py * ey) / len2, 0.0, 1.0);
          const double dx = px - t * ex, dy = py - t * ey;
          const double w = wa + (wb - wa) * t;
          const double d = std::sqrt(dx * dx + dy * dy) / w;
          if (d >= 1.0) continue;
          const float m = float(1.0 - 0.45 * (1.0 - d * d));
          float& f = field[size_t(y) * size_t(s.width) + size_t(x)];
          f = std::min(f, m);
        }
      }
    }
  }
  return field;
}

}  // namespace detail

/// Rasterises a scene to an RGB image. Deterministic in the scene.
inline RasterImage render_fundus(const FundusScene& s) {
  RasterImage img(s.width, s.height, 3);
  const auto vessels = detail::vessel_field(s);
  SeededRng noise(s.noise_seed);

  constexpr double kRetina[3] = {165.0, 75.0, 35.0};
  constexpr double kDisc[3] = {250.0, 225.0, 160.0};
  constexpr double kFringe[3] = {255.0, 245.0, 220.0};
  constexpr double kSpot[3] = {255.0, 248.0, 230.0};
  const double R = s.retina.r;

  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double rx = px - s.retina.cx, ry = py - s.retina.cy;
      const double rr = std::sqrt(rx * rx + ry * ry) / R;
      double rgb[3] = {0.0, 0.0, 0.0};

      // Anti-aliased retina edge.
      const double inside = 1.0 - detail::smoothstep(1.0 - 0.5 / R, 1.0 + 0.5 / R, rr);
      if (inside > 0.0) {
        const double vignette = 1.0 - 0.35 * rr * rr;
        const double mdx = px - s.macula.cx, mdy = py - s.macula.cy;
        const double macula = 1.0 - 0.25 * std::exp(-(mdx * mdx + mdy * mdy) / (s.macula.r * s.macula.r));
        double base[3];
        for (int c = 0; c < 3; ++c) base[c] = kRetina[c] * vignette * macula;

        const double ddx = px - s.disc.cx, ddy = py - s.disc.cy;
        const double du2 = (ddx * ddx + ddy * ddy) / (s.disc.r * s.disc.r);
        const size_t idx = size_t(y) * size_t(s.width) + size_t(x);
        double vessel = vessels[idx];
        if (du2 < 1.0) {
          const double g = 1.0 - du2;
          for (int c = 0; c < 3; ++c) base[c] += (kDisc[c] - base[c]) * g;
          vessel = 1.0 - (1.0 - vessel) * 0.6;  // vessels are paler over the disc
        }
        for (int c = 0; c < 3; ++c) rgb[c] = base[c] * vessel * inside;

        for (const auto& spot : s.reflections) {
          const double sdx = px - spot.cx, sdy = py - spot.cy;
          const double sd = std::sqrt(sdx * sdx + sdy * sdy);
          if (sd < spot.r + 1.0) {
            const double a = 1.0 - detail::smoothstep(spot.r - 0.5, spot.r + 0.5, sd);
            for (int c = 0; c < 3; ++c) rgb[c] += (kSpot[c] - rgb[c]) * a;
          }
        }
      }

      for (const auto& arc : s.fringe) {
        if (rr < arc.inner - 0.01 || rr > arc.outer) continue;
        double da = std::atan2(ry, rx) - arc.angle;
        da = std::remainder(da, 2.0 * std::numbers::pi);
        const double half = arc.span * 0.5;
        if (std::abs(da) > half) continue;
        const double radial = detail::smoothstep(arc.inner - 0.01, arc.inner, rr);
        const double taper = 1.0 - detail::smoothstep(half * 0.85, half, std::abs(da));
        const double a = radial * taper;
        for (int c = 0; c < 3; ++c) rgb[c] += (kFringe[c] - rgb[c]) * a;
      }

      const bool in_retina = inside > 0.5;
      for (int c = 0; c < 3; ++c) {
        const double n = in_retina ? noise.uniform(-3.0, 3.0) : 0.0;
        img.at(x, y, c) = std::uint8_t(std::clamp(std::lround(rgb[c] + n), 0L, 255L));
      }
      if (in_retina && noise.unit() < s.salt_fraction) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = 250;
      }
    }
  }
  return img;
}

/// Generates fundus number `index` of a seeded corpus. Artefact flags are
/// assigned by the caller so corpus-level rates can be exact.
inline SyntheticFundus generate_fundus(std::uint64_t seed, std::size_t index, const SynthParams& p, bool fringe,
                                       bool reflections) {
  SeededRng rng(splitmix64(seed ^ splitmix64(index + 1)));
  const int size = rng.uniform_int(p.min_size, p.max_size);
  SyntheticFundus f;
  char id[32];
  std::snprintf(id, sizeof id, "synth_%04zu", index);
  f.image_id = id;
  f.scene = random_scene(rng, p, size, size, fringe, reflections);
  f.image = render_fundus(f.scene);
  f.gt_box = scene_gt_box(f.scene);
  return f;
}

/// Artefact assignment for an n-image corpus: exactly round(rate * n) images
/// carry each artefact, chosen by a seeded permutation.
struct ArtifactPlan {
  std::vector<bool> fringe;
  std::vector<bool> reflections;
};

inline ArtifactPlan plan_artifacts(std::size_t n, std::uint64_t seed, const SynthParams& p) {
  if (!(p.fringe_rate >= 0.0 && p.fringe_rate <= 1.0 && p.reflection_rate >= 0.0 && p.reflection_rate <= 1.0))
    fail(ErrorCode::InvalidArgument, "artefact rates must lie in [0,1]");
  ArtifactPlan plan{std::vector<bool>(n, false), std::vector<bool>(n, false)};
  const auto pick = [&](std::uint64_t salt, double rate, std::vector<bool>& out) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SeededRng rng(splitmix64(seed ^ salt));
    rng.shuffle(idx);
    const auto k = std::size_t(std::llround(rate * double(n)));
    for (std::size_t i = 0; i < k && i < n; ++i) out[idx[i]] = true;
  };
  pick(0xF417CEULL, p.fringe_rate, plan.fringe);
  pick(0x5B075ULL, p.reflection_rate, plan.reflections);
  return plan;
}

}  // namespace odtk
