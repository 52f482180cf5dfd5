#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "helios/core/event_io.hpp"
#include "helios/core/labels.hpp"
#include "helios/core/time_surface.hpp"
#include "oracles.hpp"

using namespace helios;

namespace {

EventStream single_event(Nanos t, int x = 1, int y = 2, int pol = 1) {
  EventStream s;
  s.width = 4;
  s.height = 4;
  s.duration = 2 * kNsPerSec;
  s.events.push_back({t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), static_cast<std::uint8_t>(pol)});
  return s;
}

std::vector<GestureClass> labels_of(int rest, int other, GestureClass g) {
  std::vector<GestureClass> v(rest, GestureClass::Rest);
  v.insert(v.end(), other, g);
  return v;
}

}  // namespace

TEST(TimeSurface, ZeroAgeEventIsOne) {
  const WindowConfig cfg;
  const auto ts = build_time_surface(single_event(500 * kNsPerMs), 500 * kNsPerMs, cfg);
  EXPECT_EQ(ts.at(1, 2, 1), 1.0f);
  EXPECT_EQ(ts.at(1, 2, 0), 0.0f);
}

TEST(TimeSurface, AgeEqualToWindowIsExcluded) {
  const WindowConfig cfg;
  const auto ts = build_time_surface(single_event(260 * kNsPerMs), 500 * kNsPerMs, cfg);
  EXPECT_EQ(ts.at(1, 2, 1), 0.0f);
}

TEST(TimeSurface, HalfWindowAgeDecays) {
  const WindowConfig cfg;
  const auto ts = build_time_surface(single_event(380 * kNsPerMs), 500 * kNsPerMs, cfg);
  EXPECT_NEAR(ts.at(1, 2, 1), 0.082085, 1e-6);
}

TEST(TimeSurface, NegativePolarityUsesLowerPlane) {
  const WindowConfig cfg;
  const auto ts = build_time_surface(single_event(500 * kNsPerMs, 3, 0, 0), 500 * kNsPerMs, cfg);
  EXPECT_EQ(ts.values[static_cast<std::size_t>(4) * 4 + 3], 1.0f);
  EXPECT_EQ(ts.at(3, 0, 1), 0.0f);
}

TEST(TimeSurface, FutureEventsIgnored) {
  const WindowConfig cfg;
  const auto ts = build_time_surface(single_event(501 * kNsPerMs), 500 * kNsPerMs, cfg);
  EXPECT_EQ(ts.at(1, 2, 1), 0.0f);
}

TEST(TimeSurface, BatchAndStreamingMatchBruteForce) {
  const WindowConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = oracle::random_stream(seed, 8, 6, 1500, 2 * kNsPerSec);
    StreamingTimeSurface stream(s.width, s.height, cfg);
    std::size_t next = 0;
    for (const auto& w : slice_windows(s.duration, cfg)) {
      const auto expected = oracle::brute_force_surface(s, w.end, cfg);
      const auto batch = build_time_surface(s, w.end, cfg, w.index);
      while (next < s.events.size() && s.events[next].t <= w.end) stream.push(s.events[next++]);
      const auto streamed = stream.read(w.end, w.index);
      ASSERT_EQ(batch.values, expected) << "seed " << seed << " window " << w.index;
      ASSERT_EQ(streamed.values, expected) << "seed " << seed << " window " << w.index;
      for (float v : batch.values) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
    }
  }
}

TEST(TimeSurface, RejectsUnsortedStream) {
  auto s = single_event(10);
  s.events.push_back({5, 0, 0, 1});
  EXPECT_THROW(build_time_surface(s, 300 * kNsPerMs, WindowConfig{}), Error);
  StreamingTimeSurface st(4, 4, WindowConfig{});
  st.push({10, 0, 0, 1});
  EXPECT_THROW(st.push({5, 0, 0, 1}), Error);
}

TEST(SliceWindows, DefaultSequenceHas23Windows) {
  const auto w = slice_windows(2 * kNsPerSec, WindowConfig{});
  ASSERT_EQ(w.size(), 23u);
  EXPECT_EQ(w[0].start, 0u);
  EXPECT_EQ(w[0].end, 240 * kNsPerMs);
  EXPECT_EQ(w[1].start, 80 * kNsPerMs);
  EXPECT_EQ(w[1].end, 320 * kNsPerMs);
  EXPECT_EQ(w.back().end, 2 * kNsPerSec);
}

TEST(SliceWindows, LengthEqualToWindowGivesOne) {
  EXPECT_EQ(slice_windows(240 * kNsPerMs, WindowConfig{}).size(), 1u);
}

TEST(SliceWindows, ShorterThanWindowIsEmptyInput) {
  try {
    slice_windows(100 * kNsPerMs, WindowConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

TEST(StackChannels, FirstWindowPadsWithZeros) {
  const auto s = oracle::random_stream(3, 5, 4, 200, 2 * kNsPerSec);
  const WindowConfig cfg;
  const TimeSurface ts = build_time_surface(s, cfg.window_ns, cfg, 0);
  const auto st = stack_channels(std::span<const TimeSurface>(&ts, 1));
  ASSERT_EQ(st.values.size(), ts.values.size() * 3);
  EXPECT_TRUE(std::equal(ts.values.begin(), ts.values.end(), st.values.begin()));
  for (std::size_t i = ts.values.size(); i < st.values.size(); ++i) EXPECT_EQ(st.values[i], 0.0f);
}

TEST(StackChannels, MatchesIndependentBuildsNewestFirst) {
  const auto s = oracle::random_stream(4, 5, 4, 800, 2 * kNsPerSec);
  const WindowConfig cfg;
  const auto windows = slice_windows(s.duration, cfg);
  std::vector<TimeSurface> hist;
  for (int k = 5; k >= 3; --k) hist.push_back(build_time_surface(s, windows[k].end, cfg, k));
  const auto st = stack_channels(hist);
  std::vector<float> expected;
  for (const auto& h : hist) expected.insert(expected.end(), h.values.begin(), h.values.end());
  EXPECT_EQ(st.values, expected);
  EXPECT_EQ(st.planes, 6);
}

TEST(StackChannels, IdenticalSurfacesGiveIdenticalPairs) {
  TimeSurface a(3, 2, 0, 2);
  a.values.assign(a.values.size(), 0.5f);
  TimeSurface b = a, c = a;
  b.window_index = 1;
  c.window_index = 0;
  const std::vector<TimeSurface> hist{a, b, c};
  const auto st = stack_channels(hist);
  for (float v : st.values) EXPECT_EQ(v, 0.5f);
}

TEST(StackChannels, RejectsNonConsecutive) {
  TimeSurface a(3, 2, 0, 5), b(3, 2, 0, 3), c(3, 2, 0, 2);
  const std::vector<TimeSurface> hist{a, b, c};
  EXPECT_THROW(stack_channels(hist), Error);
}

TEST(WindowLabel, FirstWindowTakesMajority) {
  const auto l = labels_of(6, 4, GestureClass::SwipeRight);
  EXPECT_EQ(aggregate_window_label(l, 0.6, std::nullopt), GestureClass::Rest);
}

TEST(WindowLabel, SixtyPercentSwitches) {
  const auto l = labels_of(4, 6, GestureClass::SwipeRight);
  EXPECT_EQ(aggregate_window_label(l, 0.6, GestureClass::Rest), GestureClass::SwipeRight);
}

TEST(WindowLabel, FiftyNinePercentRetainsPrevious) {
  const auto l = labels_of(41, 59, GestureClass::SwipeRight);
  EXPECT_EQ(aggregate_window_label(l, 0.6, GestureClass::Rest), GestureClass::Rest);
}

TEST(WindowLabel, FirstWindowTieGoesToLowestEncoding) {
  const auto l = labels_of(5, 5, GestureClass::Pinch);
  EXPECT_EQ(aggregate_window_label(l, 0.6, std::nullopt), GestureClass::Pinch);
}

TEST(WindowLabel, RejectsBadInput) {
  EXPECT_THROW(aggregate_window_label({}, 0.6, std::nullopt), Error);
  const auto l = labels_of(1, 1, GestureClass::Pinch);
  EXPECT_THROW(aggregate_window_label(l, 0.0, std::nullopt), Error);
  EXPECT_THROW(aggregate_window_label(l, 1.5, std::nullopt), Error);
}

TEST(WindowLabelProperty, Idempotent) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto f = oracle::random_track(rng, 180);
    const double thr = uniform(rng, 0.3, 1.0);
    EXPECT_EQ(oracle::label_track(f, 22, 7, thr), oracle::label_track(f, 22, 7, thr));
    // A window labelled entirely with one class always yields that class.
    const GestureClass g = f[0];
    const std::vector<GestureClass> uniform_window(22, g);
    EXPECT_EQ(aggregate_window_label(uniform_window, thr, std::nullopt), g);
    EXPECT_EQ(aggregate_window_label(uniform_window, thr, GestureClass::Rest), g);
  }
}

TEST(WindowLabelProperty, RaisingThresholdNeverAddsTransitions) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const auto f = oracle::random_track(rng, 180);
    const double lo = uniform(rng, 0.05, 0.95);
    const double hi = uniform(rng, lo, 1.0);
    EXPECT_LE(oracle::transitions(oracle::label_track(f, 22, 7, hi)), oracle::transitions(oracle::label_track(f, 22, 7, lo)));
  }
}

TEST(Evt2, RoundTripPreservesEverything) {
  const auto s = oracle::random_stream(9, 64, 48, 5000, 2 * kNsPerSec);
  EXPECT_EQ(decode_evt2(encode_evt2(s)), s);
  const auto path = std::filesystem::temp_directory_path() / "helios_test_roundtrip.evt2";
  write_evt2(path, s);
  EXPECT_EQ(read_evt2(path), s);
  std::filesystem::remove(path);
}

TEST(Evt2, HeaderLayout) {
  EventStream s;
  s.width = 0x0102;
  s.height = 0x0304;
  s.duration = 0x050607;
  s.events.push_back({0x1122, 3, 4, 1});
  const auto b = encode_evt2(s);
  ASSERT_EQ(b.size(), kEvt2HeaderBytes + kEvt2RecordBytes);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "EVT2");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[6], 0x02);
  EXPECT_EQ(b[7], 0x01);
  EXPECT_EQ(b[10], 0x07);
  EXPECT_EQ(b[16], 0x22);
  EXPECT_EQ(b[28], 1);
}

TEST(Evt2, RejectsCorruptInput) {
  const auto s = oracle::random_stream(1, 8, 8, 10, kNsPerSec);
  auto b = encode_evt2(s);
  auto bad_magic = b;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_evt2(bad_magic), Error);
  auto truncated = b;
  truncated.pop_back();
  EXPECT_THROW(decode_evt2(truncated), Error);
  auto bad_version = b;
  bad_version[4] = 9;
  EXPECT_THROW(decode_evt2(bad_version), Error);
  // Swap two records so timestamps go backwards.
  auto unsorted = s;
  unsorted.events.front().t = unsorted.events.back().t + 1;
  unsorted.duration = unsorted.events.front().t;
  try {
    decode_evt2(encode_evt2(unsorted));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSortedness);
  }
}

TEST(Evt2, OutOfBoundsEventRejected) {
  auto s = oracle::random_stream(2, 8, 8, 10, kNsPerSec);
  auto b = encode_evt2(s);
  b[kEvt2HeaderBytes + 8] = 200;  // x of the first record
  EXPECT_THROW(decode_evt2(b), Error);
}

TEST(GestureClassCodec, StableEncoding) {
  EXPECT_EQ(encode(GestureClass::Unknown), 1);
  EXPECT_EQ(encode(GestureClass::Rest), 10);
  for (GestureClass g : kAllClasses) {
    EXPECT_EQ(decode_class(encode(g)), g);
    EXPECT_EQ(class_from_name(class_name(g)), g);
    EXPECT_EQ(class_from_index(class_index(g)), g);
  }
  EXPECT_THROW(decode_class(0), Error);
  EXPECT_THROW(decode_class(11), Error);
}
