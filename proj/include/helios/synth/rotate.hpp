#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "helios/random.hpp"
#include "helios/synth/render.hpp"

namespace helios {

struct RotationConfig {
  double min_deg = 25.0;
  double max_deg = 40.0;
};

/// Magnitude uniform in [min, max] degrees, sign uniform.
inline double draw_rotation_deg(Rng& rng, const RotationConfig& cfg = {}) {
  const double magnitude = uniform(rng, cfg.min_deg, cfg.max_deg);
  return std::bernoulli_distribution(0.5)(rng) ? magnitude : -magnitude;
}

inline Point2 rotate_point(Point2 p, double angle_rad, int width, int height) {
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  const double dx = p.x - cx, dy = p.y - cy;
  return {cx + c * dx - s * dy, cy + s * dx + c * dy};
}

/// Rotates every frame about the image centre (bilinear, edge-extended) and the keypoints by
/// the same transform. Labels are untouched.
inline SynthesizedSequence rotate_sequence_by(const SynthesizedSequence& seq, double angle_deg) {
  SynthesizedSequence out = seq;
  const int w = seq.frames.width, h = seq.frames.height;
  const double a = deg2rad(angle_deg);
  for (std::size_t f = 0; f < seq.frames.frames.size(); ++f) {
    const Image& src = seq.frames.frames[f];
    Image& dst = out.frames.frames[f];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        // Inverse map: the output pixel came from rotating the source by -angle.
        const Point2 p = rotate_point({static_cast<double>(x), static_cast<double>(y)}, -a, w, h);
        dst.at(x, y) = sample_bilinear(src, p.x, p.y);
      }
    for (Point2& j : out.joints[f]) j = rotate_point(j, a, w, h);
    if (!out.joints[f].empty()) out.wrist_y[f] = out.joints[f][kKpWrist].y;
    else out.wrist_y[f] = rotate_point({0.0, seq.wrist_y[f]}, a, w, h).y;
  }
  return out;
}

struct RotatedSequence {
  SynthesizedSequence sequence;
  double angle_deg = 0;
};

inline RotatedSequence rotate_sequence(const SynthesizedSequence& seq, std::uint64_t seed,
                                       const RotationConfig& cfg = {}) {
  Rng rng(seed);
  const double angle = draw_rotation_deg(rng, cfg);
  return {rotate_sequence_by(seq, angle), angle};
}

}  // namespace helios
