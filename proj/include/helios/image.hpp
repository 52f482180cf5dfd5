#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "helios/error.hpp"

namespace helios {

/// Single-channel linear-intensity image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Bilinear sample at continuous pixel-centre coordinates, edge pixels extended outward.
inline float sample_bilinear(const Image& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = std::min(static_cast<int>(x), img.width - 1);
  const int y0 = std::min(static_cast<int>(y), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
  const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

}  // namespace helios
