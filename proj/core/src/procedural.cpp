#include "wmr/procedural.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace wmr {

namespace {

using Rgb = std::array<double, 3>;

Rgb random_colour(RngStream& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Distance from p to segment ab.
double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Image procedural_base(RngStream rng, int height, int width) {
  Image img(height, width, 3);
  const Rgb corners[4] = {random_colour(rng), random_colour(rng), random_colour(rng),
                          random_colour(rng)};
  struct Blob {
    double cy, cx, ry, rx, strength;
    Rgb colour;
  };
  std::vector<Blob> blobs(static_cast<std::size_t>(rng.uniform_int(2, 5)));
  for (auto& b : blobs) {
    b.cy = rng.uniform(0, height);
    b.cx = rng.uniform(0, width);
    b.ry = rng.uniform(0.1, 0.4) * height;
    b.rx = rng.uniform(0.1, 0.4) * width;
    b.strength = rng.uniform(0.4, 0.9);
    b.colour = random_colour(rng);
  }
  const double fy = rng.uniform(0.5, 3.0) * 2.0 * std::numbers::pi / height;
  const double fx = rng.uniform(0.5, 3.0) * 2.0 * std::numbers::pi / width;
  const double phase = rng.uniform(0, 2.0 * std::numbers::pi);
  const double amp = rng.uniform(0.0, 0.08);

  for (int y = 0; y < height; ++y) {
    const double v = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
    for (int x = 0; x < width; ++x) {
      const double u = width > 1 ? static_cast<double>(x) / (width - 1) : 0.0;
      Rgb px{};
      for (int c = 0; c < 3; ++c) {
        px[static_cast<std::size_t>(c)] =
            (1 - u) * (1 - v) * corners[0][static_cast<std::size_t>(c)] +
            u * (1 - v) * corners[1][static_cast<std::size_t>(c)] +
            (1 - u) * v * corners[2][static_cast<std::size_t>(c)] +
            u * v * corners[3][static_cast<std::size_t>(c)];
      }
      for (const auto& b : blobs) {
        const double dy = (y - b.cy) / b.ry, dx = (x - b.cx) / b.rx;
        const double w = b.strength * std::exp(-0.5 * (dx * dx + dy * dy));
        for (std::size_t c = 0; c < 3; ++c) px[c] = (1 - w) * px[c] + w * b.colour[c];
      }
      const double tex = amp * std::sin(fy * y + phase) * std::sin(fx * x + 0.7 * phase);
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = std::clamp(px[static_cast<std::size_t>(c)] + tex, 0.0, 1.0);
      }
    }
  }
  return img;
}

WatermarkAsset procedural_watermark(RngStream rng, std::string id, int height, int width) {
  Image img(height, width, 4, 0.0);
  // Watermarks are usually light or saturated marks; mix both.
  const bool light = rng.uniform() < 0.5;
  const Rgb primary = light ? Rgb{rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0),
                                  rng.uniform(0.85, 1.0)}
                            : random_colour(rng);
  const Rgb secondary = random_colour(rng);
  const double coverage = rng.uniform(0.75, 1.0);

  struct Stroke {
    double ax, ay, bx, by, half_width;
    bool secondary;
  };
  struct Ring {
    double cx, cy, radius, half_width;
    bool secondary;
  };
  std::vector<Stroke> strokes;
  std::vector<Ring> rings;
  // A row of glyph-like stroke clusters across the middle.
  const int glyphs = static_cast<int>(rng.uniform_int(2, 5));
  const double cell = static_cast<double>(width) / glyphs;
  for (int g = 0; g < glyphs; ++g) {
    const double x0 = g * cell + 0.15 * cell, x1 = (g + 1) * cell - 0.15 * cell;
    const double y0 = 0.2 * height, y1 = 0.8 * height;
    const int n = static_cast<int>(rng.uniform_int(2, 4));
    for (int s = 0; s < n; ++s) {
      strokes.push_back({rng.uniform(x0, x1), rng.uniform(y0, y1), rng.uniform(x0, x1),
                         rng.uniform(y0, y1), rng.uniform(0.6, 1.8), rng.uniform() < 0.25});
    }
  }
  const int n_rings = static_cast<int>(rng.uniform_int(0, 2));
  for (int r = 0; r < n_rings; ++r) {
    const double radius = rng.uniform(0.15, 0.45) * std::min(height, width);
    rings.push_back({rng.uniform(radius, width - radius), rng.uniform(radius, height - radius),
                     radius, rng.uniform(0.6, 1.5), rng.uniform() < 0.5});
  }
  if (rng.uniform() < 0.5) {
    const double y = rng.uniform(0.8, 0.92) * height;
    strokes.push_back({0.05 * width, y, 0.95 * width, y, rng.uniform(0.6, 1.2), true});
  }

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double best = 0.0;
      bool use_secondary = false;
      auto consider = [&](double dist, double half_width, bool sec) {
        const double a = 1.0 - smoothstep(half_width - 0.5, half_width + 0.5, dist);
        if (a > best) {
          best = a;
          use_secondary = sec;
        }
      };
      for (const auto& s : strokes) {
        consider(segment_distance(px, py, s.ax, s.ay, s.bx, s.by), s.half_width, s.secondary);
      }
      for (const auto& r : rings) {
        const double d = std::abs(std::hypot(px - r.cx, py - r.cy) - r.radius);
        consider(d, r.half_width, r.secondary);
      }
      const Rgb& col = use_secondary ? secondary : primary;
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = col[static_cast<std::size_t>(c)];
      img.at(3, y, x) = best * coverage;
    }
  }
  // Guarantee at least one visible pixel.
  img.at(3, height / 2, width / 2) = std::max(img.at(3, height / 2, width / 2), coverage);
  return WatermarkAsset{std::move(id), std::move(img)};
}

}  // namespace wmr
