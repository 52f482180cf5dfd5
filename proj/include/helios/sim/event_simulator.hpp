#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "helios/core/event.hpp"
#include "helios/parallel.hpp"
#include "helios/random.hpp"
#include "helios/sim/frames.hpp"

namespace helios {

struct SimConfig {
  double contrast_threshold_pos = 0.2;
  double contrast_threshold_neg = 0.2;
  double log_eps = 1e-3;
  double noise_rate = 0.0;  // background-activity events per pixel per second
  // Log-intensity slack when testing a crossing, so that a change of exactly k*C emits k events.
  double crossing_tolerance = 1e-9;

  void validate() const {
    require(contrast_threshold_pos > 0 && contrast_threshold_neg > 0, ErrorCode::kInvalidArgument,
            "contrast thresholds must be positive");
    require(log_eps > 0, ErrorCode::kInvalidArgument, "log_eps must be positive");
    require(noise_rate >= 0, ErrorCode::kInvalidArgument, "noise_rate must be non-negative");
  }
};

namespace detail {

// Emits the threshold crossings of one pixel. Log intensity is piecewise linear between frames;
// the reference level starts at frame 0 and moves by exactly one threshold per event.
inline void simulate_pixel(const FrameSequence& seq, const SimConfig& cfg, int x, int y,
                           std::vector<Event>& out) {
  const std::size_t idx = static_cast<std::size_t>(y) * seq.width + x;
  double ref = std::log(static_cast<double>(seq.frames[0].pixels[idx]) + cfg.log_eps);
  double prev = ref;
  for (std::size_t f = 1; f < seq.frames.size(); ++f) {
    const double cur = std::log(static_cast<double>(seq.frames[f].pixels[idx]) + cfg.log_eps);
    const double t0 = static_cast<double>(seq.timestamps[f - 1]);
    const double dt = static_cast<double>(seq.timestamps[f] - seq.timestamps[f - 1]);
    const double delta = cur - prev;
    auto emit = [&](double level, std::uint8_t polarity) {
      const double frac = std::clamp((level - prev) / delta, 0.0, 1.0);
      out.push_back({static_cast<Nanos>(std::llround(t0 + frac * dt)), static_cast<std::uint16_t>(x),
                     static_cast<std::uint16_t>(y), polarity});
    };
    if (delta > 0) {
      while (ref + cfg.contrast_threshold_pos <= cur + cfg.crossing_tolerance) {
        ref += cfg.contrast_threshold_pos;
        emit(ref, 1);
      }
    } else if (delta < 0) {
      while (ref - cfg.contrast_threshold_neg >= cur - cfg.crossing_tolerance) {
        ref -= cfg.contrast_threshold_neg;
        emit(ref, 0);
      }
    }
    prev = cur;
  }
}

}  // namespace detail

/// Adds background activity: Poisson(noise_rate * w * h * seconds) events, uniform over pixels
/// and time with random polarity. Deterministic for a given seed.
inline EventStream inject_noise(const EventStream& stream, const SimConfig& config,
                                std::uint64_t seed) {
  require(config.noise_rate >= 0, ErrorCode::kInvalidArgument, "noise_rate must be non-negative");
  EventStream out = stream;
  if (config.noise_rate == 0 || stream.width == 0 || stream.height == 0) return out;
  Rng rng(seed);
  const double seconds = static_cast<double>(stream.duration) / static_cast<double>(kNsPerSec);
  const double mean = config.noise_rate * stream.width * stream.height * seconds;
  const auto count = std::poisson_distribution<std::uint64_t>(mean)(rng);
  std::uniform_int_distribution<int> px(0, stream.width - 1);
  std::uniform_int_distribution<int> py(0, stream.height - 1);
  std::uniform_int_distribution<Nanos> pt(0, stream.duration);
  std::bernoulli_distribution pp(0.5);
  out.events.reserve(out.events.size() + count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const Nanos t = pt(rng);
    const auto x = static_cast<std::uint16_t>(px(rng));
    const auto y = static_cast<std::uint16_t>(py(rng));
    out.events.push_back({t, x, y, static_cast<std::uint8_t>(pp(rng) ? 1 : 0)});
  }
  out.sort();
  return out;
}

/// Converts rendered frames into a sorted event stream spanning [t_first, t_last].
/// Rows are partitioned across `threads`; output is identical for any thread count.
inline EventStream generate_events(const FrameSequence& frames, const SimConfig& config,
                                   std::uint64_t seed, unsigned threads = 1) {
  config.validate();
  validate(frames);
  std::vector<std::vector<Event>> rows(static_cast<std::size_t>(frames.height));
  parallel_for(rows.size(), threads, [&](std::size_t y) {
    for (int x = 0; x < frames.width; ++x)
      detail::simulate_pixel(frames, config, x, static_cast<int>(y), rows[y]);
  });
  EventStream s;
  s.width = frames.width;
  s.height = frames.height;
  s.duration = frames.timestamps.back();
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  s.events.reserve(total);
  for (auto& r : rows) s.events.insert(s.events.end(), r.begin(), r.end());
  s.sort();
  if (config.noise_rate > 0) return inject_noise(s, config, seed);
  return s;
}

struct EventRate {
  double total = 0;
  double positive = 0;
  double negative = 0;
};

inline EventRate compute_event_rate(const EventStream& stream) {
  require(stream.duration > 0, ErrorCode::kInvalidArgument, "zero-duration stream has no rate");
  const double seconds = static_cast<double>(stream.duration) / static_cast<double>(kNsPerSec);
  std::size_t pos = 0;
  for (const Event& e : stream.events) pos += e.polarity;
  const double n = static_cast<double>(stream.events.size());
  return {n / seconds, static_cast<double>(pos) / seconds,
          (n - static_cast<double>(pos)) / seconds};
}

}  // namespace helios
