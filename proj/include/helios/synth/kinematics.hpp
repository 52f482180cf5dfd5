#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "helios/error.hpp"

namespace helios {

struct Point2 {
  double x = 0;
  double y = 0;
};

inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Joint-angle layout of the 2D hand proxy. The wrist angle is absolute (image frame, y down,
/// -pi/2 points up); every other angle is relative to its parent segment.
enum HandJoint : int { kWrist = 0, kIndex1, kIndex2, kIndex3, kThumb1, kThumb2, kHandJointCount };

/// Keypoints returned by forward kinematics, in this order.
enum HandKeypoint : int {
  kKpWrist = 0,
  kKpIndexBase,
  kKpIndexMiddle,
  kKpIndexDistal,
  kKpIndexTip,
  kKpThumbBase,
  kKpThumbMiddle,
  kKpThumbTip,
  kKpElbow,
  kKeypointCount
};

struct HandPose {
  std::vector<double> joint_angles = std::vector<double>(kHandJointCount, 0.0);
  Point2 root;  // wrist position in pixels
  double scale = 1.0;
};

struct JointLimit {
  double lo;
  double hi;
};

inline const std::array<JointLimit, kHandJointCount>& joint_limits() {
  static const std::array<JointLimit, kHandJointCount> limits = {{
      {deg2rad(-160), deg2rad(-20)},
      {deg2rad(-100), deg2rad(40)},
      {deg2rad(-110), deg2rad(20)},
      {deg2rad(-100), deg2rad(20)},
      {deg2rad(-80), deg2rad(90)},
      {deg2rad(-80), deg2rad(70)},
  }};
  return limits;
}

inline void clamp_to_limits(HandPose& pose) {
  const auto& lim = joint_limits();
  for (int j = 0; j < kHandJointCount; ++j)
    pose.joint_angles[j] = std::clamp(pose.joint_angles[j], lim[j].lo, lim[j].hi);
}

/// Segment lengths at scale 1, in pixels of a 64 px wide sensor.
struct HandGeometry {
  double forearm = 34;
  double palm = 11;
  std::array<double, 3> index = {8.0, 6.0, 4.5};
  std::array<double, 2> thumb = {8.0, 6.5};
  double thumb_base_along = 3.0;   // from wrist along the palm
  double thumb_base_across = 4.5;  // to the right of the palm axis
};

inline std::array<Point2, kKeypointCount> forward_kinematics(const HandPose& pose,
                                                             const HandGeometry& geo = {}) {
  require(pose.joint_angles.size() == kHandJointCount, ErrorCode::kShape,
          "hand pose has the wrong joint count");
  const double s = pose.scale;
  const auto& a = pose.joint_angles;
  std::array<Point2, kKeypointCount> k{};
  auto step = [&](Point2 p, double angle, double len) {
    return Point2{p.x + s * len * std::cos(angle), p.y + s * len * std::sin(angle)};
  };
  const double palm_dir = a[kWrist];
  k[kKpWrist] = pose.root;
  k[kKpElbow] = step(pose.root, palm_dir + std::numbers::pi, geo.forearm);
  k[kKpIndexBase] = step(pose.root, palm_dir, geo.palm);
  double dir = palm_dir + a[kIndex1];
  k[kKpIndexMiddle] = step(k[kKpIndexBase], dir, geo.index[0]);
  dir += a[kIndex2];
  k[kKpIndexDistal] = step(k[kKpIndexMiddle], dir, geo.index[1]);
  dir += a[kIndex3];
  k[kKpIndexTip] = step(k[kKpIndexDistal], dir, geo.index[2]);
  const Point2 along = step(pose.root, palm_dir, geo.thumb_base_along);
  k[kKpThumbBase] = step(along, palm_dir + std::numbers::pi / 2, geo.thumb_base_across);
  dir = palm_dir + a[kThumb1];
  k[kKpThumbMiddle] = step(k[kKpThumbBase], dir, geo.thumb[0]);
  dir += a[kThumb2];
  k[kKpThumbTip] = step(k[kKpThumbMiddle], dir, geo.thumb[1]);
  return k;
}

/// Rescaled logistic S(m(2t-1)) so that progress(0) = 0 and progress(1) = 1.
inline double sigmoid_profile(double t_norm, double m) {
  t_norm = std::clamp(t_norm, 0.0, 1.0);
  if (m <= 0) return t_norm;
  auto s = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double lo = s(-m);
  const double hi = s(m);
  return (s(m * (2.0 * t_norm - 1.0)) - lo) / (hi - lo);
}

/// Linear interpolation in angle space; root and scale interpolate too.
inline HandPose blend_poses(const HandPose& a, const HandPose& b, double alpha) {
  require(a.joint_angles.size() == b.joint_angles.size(), ErrorCode::kShape,
          "cannot blend poses of different skeletons");
  HandPose out = a;
  for (std::size_t j = 0; j < a.joint_angles.size(); ++j)
    out.joint_angles[j] = (1.0 - alpha) * a.joint_angles[j] + alpha * b.joint_angles[j];
  out.root = {(1.0 - alpha) * a.root.x + alpha * b.root.x, (1.0 - alpha) * a.root.y + alpha * b.root.y};
  out.scale = (1.0 - alpha) * a.scale + alpha * b.scale;
  return out;
}

}  // namespace helios
