#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "helios/image.hpp"
#include "helios/random.hpp"
#include "helios/sim/frames.hpp"
#include "helios/synth/bbox.hpp"
#include "helios/synth/kinematics.hpp"
#include "helios/synth/markov.hpp"

namespace helios {

struct SceneConfig {
  int width = 64;
  int height = 64;
  int texture_id = 0;                // 0 smooth blobs, 1 floor tiles, 2 plain
  std::uint64_t texture_seed = 0;    // per-pixel intensity map is generated from this
  double brightness_factor = 1.0;    // [0.5, 4.0] of nominal
  std::uint64_t camera_path_seed = 0;
  bool camera_motion = true;

  void validate() const {
    require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "scene needs positive size");
    require(brightness_factor >= 0.5 && brightness_factor <= 4.0, ErrorCode::kInvalidArgument,
            "brightness factor must lie in [0.5, 4.0]");
    require(texture_id >= 0 && texture_id <= 2, ErrorCode::kInvalidArgument, "unknown texture id");
  }
};

struct SynthConfig {
  double frame_rate = 90.0;
  Nanos blend_ns = 50 * kNsPerMs;
  bool blending = true;
  double jitter_sigma_deg = 1.0;    // per joint, per frame, clipped at 3 sigma
  double root_drift_px = 1.0;       // slow hand drift amplitude
  double camera_radius_px = 6.0;    // safe-zone disc for camera waypoints
  double camera_speed_px_s = 6.0;
  double max_yaw_rate_deg_s = 10.0;  // capped at 30
  double hand_intensity = 0.85;
  double velocity_cap_px = 6.0;     // max joint displacement per frame across transitions
};

/// Rendered frames plus per-frame labels and 2D keypoints (empty when the hand is off-frame).
struct SynthesizedSequence {
  FrameSequence frames;
  std::vector<GestureClass> labels;
  std::vector<std::vector<Point2>> joints;
  std::vector<double> wrist_y;  // wrist row per frame (meaningful when joints are non-empty)
};

inline std::optional<BBox> frame_bbox(const SynthesizedSequence& seq, std::size_t frame) {
  return bbox_from_joints(seq.joints[frame], seq.frames.width, seq.frames.height,
                          seq.wrist_y[frame]);
}

namespace detail {

inline HandPose rest_pose(Point2 root, double scale) {
  HandPose p;
  p.joint_angles = {deg2rad(-90), deg2rad(-35), deg2rad(-55), deg2rad(-35), deg2rad(15), deg2rad(-55)};
  p.root = root;
  p.scale = scale;
  return p;
}

inline HandPose offset_pose(const HandPose& base, std::array<double, kHandJointCount> delta_deg) {
  HandPose p = base;
  for (int j = 0; j < kHandJointCount; ++j) p.joint_angles[j] += deg2rad(delta_deg[j]);
  clamp_to_limits(p);
  return p;
}

// Keyposes of the command gestures, relative to rest.
inline HandPose swipe_left_pose(const HandPose& rest) { return offset_pose(rest, {0, 0, 0, 0, -45, -30}); }
inline HandPose swipe_right_pose(const HandPose& rest) { return offset_pose(rest, {0, 0, 0, 0, 30, 25}); }
inline HandPose pinch_pose(const HandPose& rest) { return offset_pose(rest, {0, -10, -25, -35, -20, -25}); }

inline double double_pinch_progress(double t, double m) {
  if (t < 0.4) return sigmoid_profile(t / 0.4, m);
  if (t < 0.7) return 1.0 - 0.65 * sigmoid_profile((t - 0.4) / 0.3, m);
  return 0.35 + 0.65 * sigmoid_profile((t - 0.7) / 0.3, m);
}

// Out-and-back progress with a hold at the far end.
inline double excursion_progress(double t, double m, double ramp) {
  if (t < ramp) return sigmoid_profile(t / ramp, m);
  if (t > 1.0 - ramp) return sigmoid_profile((1.0 - t) / ramp, m);
  return 1.0;
}

/// Per-entry trajectory. `start` is the pose reached at the end of the previous entry.
struct EntryMotion {
  GestureClass gesture;
  HandPose start;
  HandPose target;
  double m;
};

inline HandPose evaluate_motion(const EntryMotion& mo, double t, double rest_blend_fraction) {
  switch (mo.gesture) {
    case GestureClass::Rest: {
      const double a = rest_blend_fraction <= 0 ? 1.0 : std::min(1.0, t / rest_blend_fraction);
      return blend_poses(mo.start, mo.target, a);
    }
    case GestureClass::DoublePinch:
      return blend_poses(mo.start, mo.target, double_pinch_progress(t, mo.m));
    case GestureClass::Unknown:
      return blend_poses(mo.start, mo.target, excursion_progress(t, mo.m, 0.5));
    case GestureClass::Untracked:
      return blend_poses(mo.start, mo.target, excursion_progress(t, mo.m, 0.35));
    default:
      return blend_poses(mo.start, mo.target, sigmoid_profile(t, mo.m));
  }
}

inline bool blends_from_rest(GestureClass g) {
  return g == GestureClass::Pinch || g == GestureClass::DoublePinch || g == GestureClass::SwipeLeft ||
         g == GestureClass::SwipeRight || g == GestureClass::Unknown;
}

inline Image make_texture(const SceneConfig& scene) {
  // Texture covers twice the sensor so camera motion never runs off it.
  const int tw = scene.width * 2;
  const int th = scene.height * 2;
  Image tex(tw, th);
  Rng rng(derive_seed(scene.texture_seed, 0x7e47));
  const double base = uniform(rng, 0.15, 0.35);
  if (scene.texture_id == 2) {
    std::fill(tex.pixels.begin(), tex.pixels.end(), static_cast<float>(base));
    return tex;
  }
  if (scene.texture_id == 1) {
    const double tile = uniform(rng, 8.0, 14.0);
    const double contrast = uniform(rng, 0.04, 0.10);
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x) {
        const int cell = static_cast<int>(std::floor(x / tile)) + static_cast<int>(std::floor(y / tile));
        const double grout = (std::fmod(x, tile) < 1.0 || std::fmod(y, tile) < 1.0) ? -0.05 : 0.0;
        tex.at(x, y) = static_cast<float>(base + (cell % 2 ? contrast : 0.0) + grout);
      }
    return tex;
  }
  // Smooth blobs: bilinear upsampling of a coarse random grid.
  const int gw = 9, gh = 9;
  Image grid(gw, gh);
  for (float& v : grid.pixels) v = static_cast<float>(base + uniform(rng, -0.08, 0.08));
  for (int y = 0; y < th; ++y)
    for (int x = 0; x < tw; ++x)
      tex.at(x, y) = sample_bilinear(grid, x * (gw - 1.0) / (tw - 1.0), y * (gh - 1.0) / (th - 1.0));
  return tex;
}

struct CameraState {
  Point2 offset;
  double yaw = 0;
};

// Constant-speed traversal between waypoints sampled in a disc, with constant yaw rate.
inline std::vector<CameraState> camera_path(const SceneConfig& scene, const SynthConfig& cfg,
                                            std::size_t frames) {
  std::vector<CameraState> path(frames);
  if (!scene.camera_motion) return path;
  Rng rng(scene.camera_path_seed);
  auto waypoint = [&] {
    const double r = cfg.camera_radius_px * std::sqrt(uniform(rng, 0.0, 1.0));
    const double a = uniform(rng, 0.0, 2 * std::numbers::pi);
    return Point2{r * std::cos(a), r * std::sin(a)};
  };
  const double max_yaw = deg2rad(std::min(30.0, cfg.max_yaw_rate_deg_s));
  const double yaw_rate = uniform(rng, -max_yaw, max_yaw);
  Point2 pos = waypoint();
  Point2 goal = waypoint();
  const double step = cfg.camera_speed_px_s / cfg.frame_rate;
  for (std::size_t i = 0; i < frames; ++i) {
    path[i].offset = pos;
    path[i].yaw = yaw_rate * static_cast<double>(i) / cfg.frame_rate;
    double remaining = step;
    while (remaining > 0) {
      const double dx = goal.x - pos.x, dy = goal.y - pos.y;
      const double d = std::hypot(dx, dy);
      if (d <= remaining) {
        pos = goal;
        remaining -= d;
        goal = waypoint();
        if (d == 0 && remaining == step) break;
      } else {
        pos.x += dx / d * remaining;
        pos.y += dy / d * remaining;
        remaining = 0;
      }
    }
  }
  return path;
}

inline double segment_distance(Point2 p, Point2 a, Point2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double len2 = vx * vx + vy * vy;
  const double t = len2 > 0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  return std::hypot(wx - t * vx, wy - t * vy);
}

struct Capsule {
  Point2 a;
  Point2 b;
  double radius;
  double shade;
};

inline std::vector<Capsule> hand_capsules(const std::array<Point2, kKeypointCount>& k, double scale) {
  return {
      {k[kKpElbow], k[kKpWrist], 3.2 * scale, 0.92},
      {k[kKpWrist], k[kKpIndexBase], 3.8 * scale, 0.78},
      {k[kKpIndexBase], k[kKpIndexMiddle], 1.4 * scale, 1.0},
      {k[kKpIndexMiddle], k[kKpIndexDistal], 1.3 * scale, 1.0},
      {k[kKpIndexDistal], k[kKpIndexTip], 1.2 * scale, 1.0},
      {k[kKpThumbBase], k[kKpThumbMiddle], 1.8 * scale, 1.12},
      {k[kKpThumbMiddle], k[kKpThumbTip], 1.6 * scale, 1.12},
  };
}

inline void render_frame(Image& frame, const Image& texture, const CameraState& cam,
                         const std::vector<Capsule>& capsules, double hand_intensity,
                         double brightness) {
  const double cx = (frame.width - 1) / 2.0, cy = (frame.height - 1) / 2.0;
  const double c = std::cos(cam.yaw), s = std::sin(cam.yaw);
  const double margin_x = frame.width / 2.0, margin_y = frame.height / 2.0;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double tx = c * dx - s * dy + cx + cam.offset.x + margin_x;
      const double ty = s * dx + c * dy + cy + cam.offset.y + margin_y;
      double v = sample_bilinear(texture, tx, ty);
      for (const Capsule& cap : capsules) {
        const double d = segment_distance({static_cast<double>(x), static_cast<double>(y)}, cap.a, cap.b);
        const double cover = std::clamp(cap.radius + 0.5 - d, 0.0, 1.0);
        if (cover > 0) v = v * (1.0 - cover) + hand_intensity * cap.shade * cover;
      }
      frame.at(x, y) = static_cast<float>(v * brightness);
    }
  }
}

inline bool hand_visible(const std::array<Point2, kKeypointCount>& k, int width, int height) {
  for (int i = 0; i < kKpElbow; ++i)
    if (k[i].x >= -0.5 && k[i].x <= width - 0.5 && k[i].y >= -0.5 && k[i].y <= height - 0.5) return true;
  return false;
}

}  // namespace detail

/// Renders a scripted sequence of the hand proxy over a moving textured background.
inline SynthesizedSequence synthesize_sequence(const GestureScript& script, const SceneConfig& scene,
                                               const SynthConfig& cfg, std::uint64_t seed) {
  scene.validate();
  validate(script);
  require(script.entries.empty() || script.entries.back().end() <= script.total_length,
          ErrorCode::kInvalidArgument, "script exceeds sequence length");
  Rng rng(seed);
  const auto frame_count =
      static_cast<std::size_t>(std::llround(cfg.frame_rate * static_cast<double>(script.total_length) / kNsPerSec));
  const double px = scene.width / 64.0;  // geometry is authored for a 64 px sensor

  const double scale = uniform(rng, 0.85, 1.15) * px;
  const Point2 home{scene.width * 0.5 + uniform(rng, -6.0, 6.0) * px,
                    scene.height * 0.66 + uniform(rng, -4.0, 4.0) * px};
  const HandPose rest = detail::rest_pose(home, scale);

  // Build one motion per entry; each starts where the previous one ended.
  std::vector<detail::EntryMotion> motions;
  HandPose cursor = rest;
  for (const auto& e : script.entries) {
    detail::EntryMotion mo{e.gesture, cursor, rest, e.profile_m > 0 ? e.profile_m : 8.0};
    switch (e.gesture) {
      case GestureClass::SwipeLeft: mo.target = detail::swipe_left_pose(rest); break;
      case GestureClass::SwipeRight: mo.target = detail::swipe_right_pose(rest); break;
      case GestureClass::Pinch:
      case GestureClass::DoublePinch: mo.target = detail::pinch_pose(rest); break;
      case GestureClass::Unknown: {
        mo.target = detail::offset_pose(cursor, {uniform(rng, -20, 20), uniform(rng, -15, 15),
                                                 uniform(rng, -15, 15), 0, uniform(rng, -10, 10), 0});
        mo.target.root.x += uniform(rng, -3.0, 3.0) * px;
        mo.target.root.y += uniform(rng, -3.0, 3.0) * px;
        break;
      }
      case GestureClass::Untracked: {
        mo.target = cursor;
        const double dir = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        mo.target.root.x += dir * scene.width * 0.85;
        break;
      }
      default: break;  // Rest and returns head back to rest
    }
    const bool ends_displaced = e.gesture == GestureClass::SwipeLeft ||
                                e.gesture == GestureClass::SwipeRight ||
                                e.gesture == GestureClass::Pinch || e.gesture == GestureClass::DoublePinch;
    motions.push_back(mo);
    cursor = ends_displaced ? mo.target : (e.gesture == GestureClass::Unknown ||
                                           e.gesture == GestureClass::Untracked ? mo.start : rest);
  }

  const Image texture = detail::make_texture(scene);
  const auto cams = detail::camera_path(scene, cfg, frame_count);
  const double drift_phase = uniform(rng, 0.0, 2 * std::numbers::pi);
  const double drift_freq = uniform(rng, 0.2, 0.6);
  std::normal_distribution<double> jitter(0.0, deg2rad(cfg.jitter_sigma_deg));
  const double jitter_clip = 3.0 * deg2rad(cfg.jitter_sigma_deg);

  SynthesizedSequence out;
  out.frames.width = scene.width;
  out.frames.height = scene.height;
  for (std::size_t i = 0; i < frame_count; ++i) {
    const auto t = static_cast<Nanos>(std::llround(static_cast<double>(i) * kNsPerSec / cfg.frame_rate));
    std::size_t k = 0;
    while (k + 1 < script.entries.size() && t >= script.entries[k].end()) ++k;
    const auto& entry = script.entries[k];
    const double tn = static_cast<double>(t - entry.start) / static_cast<double>(entry.duration);
    const double rest_blend = static_cast<double>(cfg.blend_ns) / static_cast<double>(entry.duration);
    HandPose pose = detail::evaluate_motion(motions[k], tn, cfg.blending ? rest_blend : 0.0);
    if (cfg.blending && k > 0 && script.entries[k - 1].gesture == GestureClass::Rest &&
        detail::blends_from_rest(entry.gesture) && t - entry.start < cfg.blend_ns) {
      const double a = static_cast<double>(t - entry.start) / static_cast<double>(cfg.blend_ns);
      pose = blend_poses(motions[k].start, pose, a);
    }
    for (double& angle : pose.joint_angles)
      if (cfg.jitter_sigma_deg > 0) angle += std::clamp(jitter(rng), -jitter_clip, jitter_clip);
    clamp_to_limits(pose);
    const double phase = 2 * std::numbers::pi * drift_freq * static_cast<double>(t) / kNsPerSec + drift_phase;
    pose.root.x += cfg.root_drift_px * px * std::sin(phase);
    pose.root.y += 0.5 * cfg.root_drift_px * px * std::cos(1.3 * phase);

    const auto keypoints = forward_kinematics(pose);
    Image frame(scene.width, scene.height);
    detail::render_frame(frame, texture, cams[i], detail::hand_capsules(keypoints, pose.scale),
                         cfg.hand_intensity, scene.brightness_factor);
    out.frames.frames.push_back(std::move(frame));
    out.frames.timestamps.push_back(t);
    out.labels.push_back(entry.gesture);
    if (detail::hand_visible(keypoints, scene.width, scene.height)) {
      out.joints.emplace_back(keypoints.begin(), keypoints.end());
    } else {
      out.joints.emplace_back();
    }
    out.wrist_y.push_back(keypoints[kKpWrist].y);
  }
  return out;
}

}  // namespace helios
