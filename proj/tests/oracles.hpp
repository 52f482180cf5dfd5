#pragma once

// Independent reference implementations used by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "helios/core/event.hpp"
#include "helios/core/gesture_class.hpp"
#include "helios/core/labels.hpp"
#include "helios/core/time_surface.hpp"
#include "helios/random.hpp"
#include "helios/sim/frames.hpp"

namespace helios::oracle {

/// Exhaustive scan over every event: newest in-window event per pixel and polarity.
inline std::vector<float> brute_force_surface(const EventStream& s, Nanos window_end, const WindowConfig& cfg) {
  const std::size_t plane = static_cast<std::size_t>(s.width) * s.height;
  std::vector<std::int64_t> newest(2 * plane, -1);
  for (const Event& e : s.events) {
    if (e.t > window_end || window_end - e.t >= cfg.window_ns) continue;
    std::int64_t& slot = newest[(e.polarity == 1 ? 0 : plane) + static_cast<std::size_t>(e.y) * s.width + e.x];
    slot = std::max(slot, static_cast<std::int64_t>(e.t));
  }
  std::vector<float> out(2 * plane, 0.0f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (newest[i] < 0) continue;
    const double age = static_cast<double>(window_end - static_cast<Nanos>(newest[i]));
    out[i] = static_cast<float>(std::exp(-cfg.decay * age / static_cast<double>(cfg.window_ns)));
  }
  return out;
}

/// Sorted random stream with clustered pixels so that overwrites are common.
inline EventStream random_stream(std::uint64_t seed, int width, int height, std::size_t count, Nanos duration) {
  Rng rng(seed);
  EventStream s;
  s.width = width;
  s.height = height;
  s.duration = duration;
  std::uniform_int_distribution<int> px(0, width - 1), py(0, height - 1), pol(0, 1);
  std::uniform_int_distribution<Nanos> pt(0, duration);
  for (std::size_t i = 0; i < count; ++i)
    s.events.push_back({pt(rng), static_cast<std::uint16_t>(px(rng)), static_cast<std::uint16_t>(py(rng)),
                        static_cast<std::uint8_t>(pol(rng))});
  s.sort();
  return s;
}

/// Dense-time threshold-crossing scan at `step_ns` resolution over a piecewise-linear log
/// intensity. Returns (time, polarity) per crossing, stamped at the first grid point at or
/// after the crossing.
struct Crossing {
  Nanos t;
  int polarity;
};

inline std::vector<Crossing> dense_crossings(const std::vector<double>& log_levels, const std::vector<Nanos>& stamps,
                                             double c_pos, double c_neg, Nanos step_ns) {
  std::vector<Crossing> out;
  double ref = log_levels.front();
  for (std::size_t f = 1; f < log_levels.size(); ++f) {
    const double t0 = static_cast<double>(stamps[f - 1]);
    const double dt = static_cast<double>(stamps[f] - stamps[f - 1]);
    for (Nanos t = stamps[f - 1] + step_ns; t <= stamps[f]; t += step_ns) {
      const double frac = (static_cast<double>(t) - t0) / dt;
      const double level = log_levels[f - 1] + frac * (log_levels[f] - log_levels[f - 1]);
      while (level - ref >= c_pos - 1e-9) ref += c_pos, out.push_back({t, 1});
      while (ref - level >= c_neg - 1e-9) ref -= c_neg, out.push_back({t, 0});
    }
  }
  return out;
}

/// Single-pixel-per-column ramp: column x's intensity moves geometrically from `base` by
/// `log_delta[x]` over the sequence, frame by frame.
inline FrameSequence ramp_frames(const std::vector<double>& log_delta, int frames, Nanos frame_ns, double base,
                                 double log_eps) {
  FrameSequence seq;
  seq.width = static_cast<int>(log_delta.size());
  seq.height = 1;
  for (int f = 0; f < frames; ++f) {
    Image img(seq.width, 1);
    for (int x = 0; x < seq.width; ++x) {
      const double frac = static_cast<double>(f) / (frames - 1);
      img.at(x, 0) = static_cast<float>(std::exp(std::log(base + log_eps) + frac * log_delta[x]) - log_eps);
    }
    seq.frames.push_back(std::move(img));
    seq.timestamps.push_back(static_cast<Nanos>(f) * frame_ns);
  }
  return seq;
}

/// Labels for consecutive windows of `window` frames every `step` frames over a per-frame track.
inline std::vector<GestureClass> label_track(const std::vector<GestureClass>& frames, int window, int step, double thr) {
  std::vector<GestureClass> out;
  std::optional<GestureClass> prev;
  for (std::size_t s = 0; s + window <= frames.size(); s += step) {
    const auto l = aggregate_window_label(std::span(frames.data() + s, window), thr, prev);
    out.push_back(l);
    prev = l;
  }
  return out;
}

inline std::vector<GestureClass> random_track(Rng& rng, int n) {
  std::vector<GestureClass> f;
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1), len(3, 30);
  while (static_cast<int>(f.size()) < n) f.insert(f.end(), len(rng), class_from_index(cls(rng)));
  f.resize(n);
  return f;
}

/// Number of label transitions in a sequence of window labels.
inline int transitions(const std::vector<GestureClass>& labels) {
  int n = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) n += labels[i] != labels[i - 1];
  return n;
}

}  // namespace helios::oracle

#include "helios/synth/markov.hpp"

namespace helios::oracle {

/// Empirical successor distribution per state, counted over unforced transitions only: once a
/// script holds `max_gestures` gestures the sampler forces Rest, so later steps are skipped.
struct TransitionStats {
  std::array<std::array<double, kNumClasses>, kNumClasses> counts{};
  int forbidden = 0;
  int not_starting_at_rest = 0;
  int overlong_gestures = 0;
  int too_many_gestures = 0;

  std::array<double, kNumClasses> row(GestureClass from) const {
    auto r = counts[class_index(from)];
    double sum = 0;
    for (double c : r) sum += c;
    if (sum > 0)
      for (double& c : r) c /= sum;
    return r;
  }
};

inline TransitionStats transition_stats(const MarkovChain& chain, int scripts, std::uint64_t seed,
                                        const ScriptConfig& cfg = {}) {
  TransitionStats st;
  for (int i = 0; i < scripts; ++i) {
    const auto s = sample_script(chain, derive_seed(seed, static_cast<std::uint64_t>(i)), cfg);
    if (s.entries.empty() || s.entries.front().gesture != GestureClass::Rest) ++st.not_starting_at_rest;
    int gestures = 0;
    for (std::size_t k = 0; k < s.entries.size(); ++k) {
      const auto& e = s.entries[k];
      if (k > 0) {
        const GestureClass from = s.entries[k - 1].gesture;
        if (!transition_allowed(from, e.gesture)) ++st.forbidden;
        if (gestures < cfg.max_gestures) st.counts[class_index(from)][class_index(e.gesture)] += 1;
      }
      if (e.gesture != GestureClass::Rest) {
        ++gestures;
        if (e.duration > cfg.gesture_max_ns) ++st.overlong_gestures;
      }
    }
    if (gestures > cfg.max_gestures) ++st.too_many_gestures;
  }
  return st;
}

inline double l1(const std::array<double, kNumClasses>& a, const std::array<double, kNumClasses>& b) {
  double d = 0;
  for (int i = 0; i < kNumClasses; ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace helios::oracle
