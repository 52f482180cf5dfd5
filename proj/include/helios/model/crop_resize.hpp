#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "helios/error.hpp"

namespace helios::nn {

inline constexpr double kMinCropSidePx = 2.0;

/// Normalized square box: centre (cx * W, cy * H) and side (side * W) in pixel-edge units.
template <typename T>
struct CropBox {
  T cx, cy, side;
};

namespace detail {

template <typename T>
struct ResolvedBox {
  T cx_px, cy_px, side_px;
  // Jacobian of the resolved pixel box w.r.t. the normalized inputs.
  T dcx_dcx, dcx_dside, dcy_dcy, dcy_dside, dside_dside;
};

template <typename T>
ResolvedBox<T> resolve_box(const CropBox<T>& box, int h, int w) {
  require(std::isfinite(static_cast<double>(box.cx)) && std::isfinite(static_cast<double>(box.cy)) &&
              std::isfinite(static_cast<double>(box.side)),
          ErrorCode::kNumeric, "crop box is not finite");
  ResolvedBox<T> r{};
  const T max_side = static_cast<T>(std::min(w, h));
  const T raw_side = box.side * static_cast<T>(w);
  r.side_px = std::clamp(raw_side, static_cast<T>(kMinCropSidePx), max_side);
  r.dside_dside = (raw_side > static_cast<T>(kMinCropSidePx) && raw_side < max_side) ? static_cast<T>(w) : T(0);
  auto place = [&](T centre_norm, int extent, T& pos, T& dpos_dc, T& dpos_dside) {
    const T raw = centre_norm * static_cast<T>(extent);
    const T lo = r.side_px / 2, hi = static_cast<T>(extent) - r.side_px / 2;
    if (raw < lo) {
      pos = lo, dpos_dc = 0, dpos_dside = r.dside_dside / 2;
    } else if (raw > hi) {
      pos = hi, dpos_dc = 0, dpos_dside = -r.dside_dside / 2;
    } else {
      pos = raw, dpos_dc = static_cast<T>(extent), dpos_dside = 0;
    }
  };
  place(box.cx, w, r.cx_px, r.dcx_dcx, r.dcx_dside);
  place(box.cy, h, r.cy_px, r.dcy_dcy, r.dcy_dside);
  return r;
}

}  // namespace detail

/// Bilinear crop of a CHW image to channels x out_res x out_res. Sample coordinates outside
/// the image are clamped to the edge pixels.
template <typename T>
void crop_resize(const T* image, int channels, int h, int w, const CropBox<T>& box, int out_res, T* out) {
  const auto r = detail::resolve_box(box, h, w);
  const T step = r.side_px / static_cast<T>(out_res);
  for (int i = 0; i < out_res; ++i) {
    T y = r.cy_px - r.side_px / 2 + (static_cast<T>(i) + T(0.5)) * step - T(0.5);
    y = std::clamp(y, T(0), static_cast<T>(h - 1));
    const int y0 = std::min(static_cast<int>(y), h - 1), y1 = std::min(y0 + 1, h - 1);
    const T fy = y - static_cast<T>(y0);
    for (int j = 0; j < out_res; ++j) {
      T x = r.cx_px - r.side_px / 2 + (static_cast<T>(j) + T(0.5)) * step - T(0.5);
      x = std::clamp(x, T(0), static_cast<T>(w - 1));
      const int x0 = std::min(static_cast<int>(x), w - 1), x1 = std::min(x0 + 1, w - 1);
      const T fx = x - static_cast<T>(x0);
      for (int c = 0; c < channels; ++c) {
        const T* p = image + static_cast<std::size_t>(c) * h * w;
        const T top = (1 - fx) * p[y0 * w + x0] + fx * p[y0 * w + x1];
        const T bot = (1 - fx) * p[y1 * w + x0] + fx * p[y1 * w + x1];
        out[(static_cast<std::size_t>(c) * out_res + i) * out_res + j] = (1 - fy) * top + fy * bot;
      }
    }
  }
}

/// Gradient of sum(dout * crop) with respect to the normalized box (image held fixed).
template <typename T>
CropBox<T> crop_resize_box_grad(const T* image, int channels, int h, int w, const CropBox<T>& box,
                                int out_res, const T* dout) {
  const auto r = detail::resolve_box(box, h, w);
  T g_cx = 0, g_cy = 0, g_side = 0;  // w.r.t. the resolved pixel box
  for (int i = 0; i < out_res; ++i) {
    const T ty = (static_cast<T>(i) + T(0.5)) / static_cast<T>(out_res) - T(0.5);
    const T y_raw = r.cy_px + r.side_px * ty - T(0.5);
    const bool y_in = y_raw >= 0 && y_raw <= static_cast<T>(h - 1);
    const T y = std::clamp(y_raw, T(0), static_cast<T>(h - 1));
    const int y0 = std::min(static_cast<int>(y), h - 1), y1 = std::min(y0 + 1, h - 1);
    const T fy = y - static_cast<T>(y0);
    for (int j = 0; j < out_res; ++j) {
      const T tx = (static_cast<T>(j) + T(0.5)) / static_cast<T>(out_res) - T(0.5);
      const T x_raw = r.cx_px + r.side_px * tx - T(0.5);
      const bool x_in = x_raw >= 0 && x_raw <= static_cast<T>(w - 1);
      const T x = std::clamp(x_raw, T(0), static_cast<T>(w - 1));
      const int x0 = std::min(static_cast<int>(x), w - 1), x1 = std::min(x0 + 1, w - 1);
      const T fx = x - static_cast<T>(x0);
      T gx = 0, gy = 0;
      for (int c = 0; c < channels; ++c) {
        const T* p = image + static_cast<std::size_t>(c) * h * w;
        const T a = p[y0 * w + x0], b = p[y0 * w + x1], cc = p[y1 * w + x0], d = p[y1 * w + x1];
        const T g = dout[(static_cast<std::size_t>(c) * out_res + i) * out_res + j];
        if (x_in) gx += g * ((1 - fy) * (b - a) + fy * (d - cc));
        if (y_in) gy += g * ((1 - fx) * (cc - a) + fx * (d - b));
      }
      g_cx += gx;
      g_cy += gy;
      g_side += gx * tx + gy * ty;
    }
  }
  return {g_cx * r.dcx_dcx, g_cy * r.dcy_dcy,
          g_side * r.dside_dside + g_cx * r.dcx_dside + g_cy * r.dcy_dside};
}

}  // namespace helios::nn
