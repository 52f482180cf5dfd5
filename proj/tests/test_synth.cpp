#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "helios/synth/bbox.hpp"
#include "helios/synth/label_io.hpp"
#include "helios/synth/markov.hpp"
#include "helios/synth/render.hpp"
#include "helios/synth/rotate.hpp"
#include "oracles.hpp"

using namespace helios;

TEST(Markov, DefaultChainRowsMatchSamples) {
  const auto chain = default_markov_chain();
  const auto st = oracle::transition_stats(chain, 2000, 1);
  EXPECT_EQ(st.forbidden, 0);
  EXPECT_EQ(st.not_starting_at_rest, 0);
  EXPECT_EQ(st.overlong_gestures, 0);
  EXPECT_EQ(st.too_many_gestures, 0);
  for (GestureClass from : kAllClasses) {
    double sum = 0;
    for (double c : st.counts[class_index(from)]) sum += c;
    if (sum < 200) continue;
    EXPECT_LT(oracle::l1(st.row(from), chain.row(from)), 0.05) << class_name(from);
  }
}

TEST(Markov, DegenerateChainIsDeterministicInClass) {
  MarkovChain c = default_markov_chain();
  for (GestureClass from : {GestureClass::Rest, GestureClass::SwipeRight, GestureClass::SwipeRightReturn})
    for (GestureClass to : kAllClasses) c.weight(from, to) = 0.0;
  c.weight(GestureClass::Rest, GestureClass::SwipeRight) = 1.0;
  c.weight(GestureClass::SwipeRight, GestureClass::SwipeRightReturn) = 1.0;
  c.weight(GestureClass::SwipeRightReturn, GestureClass::Rest) = 1.0;
  const auto s = sample_script(c, 3);
  const GestureClass cycle[] = {GestureClass::Rest, GestureClass::SwipeRight, GestureClass::SwipeRightReturn};
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    // The cap forces trailing Rest once six gestures exist.
    if (s.entries[i].gesture == GestureClass::Rest) continue;
    EXPECT_EQ(s.entries[i].gesture, cycle[i % 3]) << i;
  }
}

TEST(Markov, NoSwipeLeftDirectlyFollowedBySwipeRight) {
  const auto chain = default_markov_chain();
  for (int i = 0; i < 500; ++i) {
    const auto s = sample_script(chain, derive_seed(2, i));
    for (std::size_t k = 1; k < s.entries.size(); ++k)
      EXPECT_FALSE(s.entries[k - 1].gesture == GestureClass::SwipeLeft &&
                   s.entries[k].gesture == GestureClass::SwipeRight);
  }
}

TEST(Markov, ScriptsTileTheSequence) {
  const auto chain = default_markov_chain();
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_script(chain, derive_seed(3, i));
    EXPECT_NO_THROW(validate(s));
    EXPECT_EQ(s.entries.back().end(), s.total_length);
    EXPECT_EQ(s.active_at(0), GestureClass::Rest);
  }
}

TEST(Markov, RejectsForbiddenOrInvalidWeights) {
  auto c = default_markov_chain();
  c.weight(GestureClass::SwipeLeft, GestureClass::SwipeRight) = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = default_markov_chain();
  c.weight(GestureClass::Rest, GestureClass::Pinch) = -1;
  EXPECT_THROW(c.validate(), Error);
  MarkovChain empty;
  EXPECT_THROW(empty.validate(), Error);
}

TEST(Sigmoid, EndpointsAndSymmetry) {
  for (double m : {1.0, 4.0, 8.0, 12.0}) {
    EXPECT_NEAR(sigmoid_profile(0.5, m), 0.5, 1e-15);
    EXPECT_NEAR(sigmoid_profile(0.0, m), 0.0, 1e-15);
    EXPECT_NEAR(sigmoid_profile(1.0, m), 1.0, 1e-15);
  }
  const double s = 1 / (1 + std::exp(-8 * 0.5)), lo = 1 / (1 + std::exp(8.0)), hi = 1 / (1 + std::exp(-8.0));
  EXPECT_NEAR(sigmoid_profile(0.75, 8), (s - lo) / (hi - lo), 1e-12);
}

TEST(BlendPoses, EndpointsMidpointAndContinuity) {
  HandPose a, b;
  a.joint_angles[1] = 0;
  b.joint_angles[1] = std::numbers::pi / 2;
  b.root = {10, 4};
  EXPECT_EQ(blend_poses(a, b, 0).joint_angles, a.joint_angles);
  EXPECT_EQ(blend_poses(a, b, 1).joint_angles, b.joint_angles);
  EXPECT_NEAR(blend_poses(a, b, 0.5).joint_angles[1], std::numbers::pi / 4, 1e-15);
  a.joint_angles[0] = b.joint_angles[0] = -std::numbers::pi / 2;
  for (double alpha = 0; alpha < 1; alpha += 0.1) {
    const auto k0 = forward_kinematics(blend_poses(a, b, alpha));
    const auto k1 = forward_kinematics(blend_poses(a, b, alpha + 1e-3));
    for (int j = 0; j < kKeypointCount; ++j)
      EXPECT_LT(std::hypot(k0[j].x - k1[j].x, k0[j].y - k1[j].y), 0.1);
  }
}

namespace {

GestureScript rest_only() {
  GestureScript s;
  s.entries.push_back({GestureClass::Rest, 0, 2 * kNsPerSec, 0});
  return s;
}

GestureScript with_swipe() {
  GestureScript s;
  s.entries.push_back({GestureClass::Rest, 0, 500 * kNsPerMs, 0});
  s.entries.push_back({GestureClass::SwipeRight, 500 * kNsPerMs, 300 * kNsPerMs, 8});
  s.entries.push_back({GestureClass::SwipeRightReturn, 800 * kNsPerMs, 300 * kNsPerMs, 8});
  s.entries.push_back({GestureClass::Rest, 1100 * kNsPerMs, 900 * kNsPerMs, 0});
  return s;
}

}  // namespace

TEST(Synthesize, StaticDegenerateCase) {
  SceneConfig scene;
  scene.camera_motion = false;
  SynthConfig cfg;
  cfg.jitter_sigma_deg = 0;
  cfg.root_drift_px = 0;
  const auto seq = synthesize_sequence(rest_only(), scene, cfg, 4);
  ASSERT_EQ(seq.frames.frames.size(), 180u);
  for (const auto& f : seq.frames.frames) EXPECT_EQ(f.pixels, seq.frames.frames[0].pixels);
  for (auto l : seq.labels) EXPECT_EQ(l, GestureClass::Rest);
}

TEST(Synthesize, LabelsFollowScriptSpans) {
  const auto script = with_swipe();
  const auto seq = synthesize_sequence(script, SceneConfig{}, SynthConfig{}, 5);
  ASSERT_EQ(seq.labels.size(), 180u);
  for (std::size_t i = 0; i < seq.labels.size(); ++i) {
    const Nanos t = seq.frames.timestamps[i];
    const bool in_swipe = t >= 500 * kNsPerMs && t < 800 * kNsPerMs;
    EXPECT_EQ(seq.labels[i] == GestureClass::SwipeRight, in_swipe) << i;
    EXPECT_EQ(seq.labels[i], script.active_at(t));
  }
}

TEST(Synthesize, DeterministicForSeed) {
  const auto a = synthesize_sequence(with_swipe(), SceneConfig{}, SynthConfig{}, 6);
  const auto b = synthesize_sequence(with_swipe(), SceneConfig{}, SynthConfig{}, 6);
  for (std::size_t i = 0; i < a.frames.frames.size(); ++i) ASSERT_EQ(a.frames.frames[i].pixels, b.frames.frames[i].pixels);
}

TEST(BBox, RectangleIsSquaredAboutCentre) {
  const std::vector<Point2> j{{10, 10}, {19, 29}};
  const auto b = bbox_from_joints(j, 64, 64, 40);
  ASSERT_TRUE(b);
  EXPECT_DOUBLE_EQ(b->side, 20);
  EXPECT_DOUBLE_EQ(b->cx(), 15);
  EXPECT_DOUBLE_EQ(b->cy(), 20);
}

TEST(BBox, SingleJointIsUnitBox) {
  const std::vector<Point2> j{{7, 9}};
  const auto b = bbox_from_joints(j, 64, 64, 20);
  ASSERT_TRUE(b);
  EXPECT_DOUBLE_EQ(b->side, 1);
  EXPECT_DOUBLE_EQ(b->x_min, 7);
  EXPECT_DOUBLE_EQ(b->y_min, 9);
}

TEST(BBox, OutOfBoundsJointsHugBorder) {
  const std::vector<Point2> j{{-5, 10}, {-9, 14}};
  const auto b = bbox_from_joints(j, 64, 64, 40);
  ASSERT_TRUE(b);
  EXPECT_DOUBLE_EQ(b->x_min, 0);
  EXPECT_DOUBLE_EQ(b->side, 5);
}

TEST(BBox, PointsBelowWristDroppedAndEmptyIsNone) {
  const std::vector<Point2> j{{10, 10}, {30, 50}};
  const auto b = bbox_from_joints(j, 64, 64, 20);
  ASSERT_TRUE(b);
  EXPECT_DOUBLE_EQ(b->side, 1);
  EXPECT_FALSE(bbox_from_joints({}, 64, 64, 20));
}

TEST(BBox, AlwaysSquareAndInside) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    std::vector<Point2> j(5);
    for (auto& p : j) p = {uniform(rng, -20, 84), uniform(rng, -20, 84)};
    const auto b = bbox_from_joints(j, 64, 48, 100);
    ASSERT_TRUE(b);
    EXPECT_GE(b->x_min, 0);
    EXPECT_GE(b->y_min, 0);
    EXPECT_LE(b->x_min + b->side, 64);
    EXPECT_LE(b->y_min + b->side, 48);
  }
}

TEST(Rotation, AnglesInRange) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double a = std::abs(draw_rotation_deg(rng));
    ASSERT_GE(a, 25.0);
    ASSERT_LE(a, 40.0);
  }
}

TEST(Rotation, JointsMatchRotationMatrix) {
  const auto seq = synthesize_sequence(with_swipe(), SceneConfig{}, SynthConfig{}, 10);
  const auto rot = rotate_sequence(seq, 11);
  const double a = deg2rad(rot.angle_deg), c = std::cos(a), s = std::sin(a), cx = 31.5, cy = 31.5;
  for (std::size_t f = 0; f < seq.joints.size(); ++f)
    for (std::size_t k = 0; k < seq.joints[f].size(); ++k) {
      const Point2 p = seq.joints[f][k], q = rot.sequence.joints[f][k];
      EXPECT_NEAR(q.x, cx + c * (p.x - cx) - s * (p.y - cy), 1e-9);
      EXPECT_NEAR(q.y, cy + s * (p.x - cx) + c * (p.y - cy), 1e-9);
    }
  EXPECT_EQ(rot.sequence.labels, seq.labels);
}

TEST(Rotation, FullTurnReproducesFrames) {
  const auto seq = synthesize_sequence(with_swipe(), SceneConfig{}, SynthConfig{}, 12);
  const auto rot = rotate_sequence_by(seq, 360.0);
  double err = 0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < seq.frames.frames.size(); ++f)
    for (std::size_t i = 0; i < seq.frames.frames[f].pixels.size(); ++i, ++n)
      err += std::abs(seq.frames.frames[f].pixels[i] - rot.frames.frames[f].pixels[i]);
  EXPECT_LT(err / static_cast<double>(n), 1e-3);
}

TEST(LabelJsonl, RoundTrip) {
  const auto seq = synthesize_sequence(with_swipe(), SceneConfig{}, SynthConfig{}, 13);
  const auto labels = frame_labels(seq);
  std::istringstream in(encode_label_jsonl(labels));
  const auto back = decode_label_jsonl(in);
  ASSERT_EQ(back.size(), labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_EQ(back[i].t_ns, labels[i].t_ns);
    EXPECT_EQ(back[i].gesture, labels[i].gesture);
    ASSERT_EQ(back[i].joints.size(), labels[i].joints.size());
    for (std::size_t k = 0; k < labels[i].joints.size(); ++k) EXPECT_EQ(back[i].joints[k].x, labels[i].joints[k].x);
    EXPECT_EQ(back[i].bbox.has_value(), labels[i].bbox.has_value());
  }
  std::istringstream bad("{\"t_ns\": 1}\n");
  EXPECT_THROW(decode_label_jsonl(bad), Error);
}
