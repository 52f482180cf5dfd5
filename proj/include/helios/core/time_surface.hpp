#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "helios/core/event.hpp"

namespace helios {

struct WindowConfig {
  Nanos window_ns = 240 * kNsPerMs;   // T_s
  Nanos step_ns = 80 * kNsPerMs;
  double decay = 5.0;                 // lambda
  Nanos sequence_ns = 2 * kNsPerSec;  // L

  void validate() const {
    require(step_ns > 0 && step_ns <= window_ns && window_ns <= sequence_ns,
            ErrorCode::kInvalidArgument, "window config requires 0 < step <= T_s <= L");
    require(decay > 0.0, ErrorCode::kInvalidArgument, "decay constant must be positive");
  }
};

/// Polarity-separated surface of shape (w, 2h): positive plane in rows [0, h), negative
/// plane in rows [h, 2h). Stored row-major, `width` floats per row.
struct TimeSurface {
  int width = 0;
  int height = 0;  // per polarity plane
  Nanos window_end = 0;
  int window_index = 0;
  std::vector<float> values;

  TimeSurface() = default;
  TimeSurface(int w, int h, Nanos end, int index)
      : width(w), height(h), window_end(end), window_index(index),
        values(static_cast<std::size_t>(w) * 2 * h, 0.0f) {}

  static std::size_t offset(int width, int height, int x, int y, int polarity) {
    const int row = polarity == 1 ? y : y + height;
    return static_cast<std::size_t>(row) * width + x;
  }
  float at(int x, int y, int polarity) const { return values[offset(width, height, x, y, polarity)]; }
};

/// Eq. value for an event of age `age_ns` at the window's upper edge; zero once age >= T_s.
inline float surface_value(Nanos age_ns, const WindowConfig& config) {
  if (age_ns >= config.window_ns) return 0.0f;
  return static_cast<float>(std::exp(-config.decay * static_cast<double>(age_ns) /
                                     static_cast<double>(config.window_ns)));
}

/// Batch construction for the window ending at `window_end`. Events with
/// 0 <= window_end - t < T_s contribute; the newest one per pixel and polarity wins.
inline TimeSurface build_time_surface(const EventStream& stream, Nanos window_end,
                                      const WindowConfig& config, int window_index = 0) {
  config.validate();
  require(window_end >= config.window_ns, ErrorCode::kInvalidArgument,
          "window end precedes the first full window");
  require(stream.is_sorted(), ErrorCode::kSortedness, "event stream is not sorted by time");
  TimeSurface ts(stream.width, stream.height, window_end, window_index);
  const Nanos oldest = window_end - config.window_ns;  // excluded: age == T_s
  auto first = std::upper_bound(stream.events.begin(), stream.events.end(), oldest,
                                [](Nanos t, const Event& e) { return t < e.t; });
  auto last = std::upper_bound(first, stream.events.end(), window_end,
                               [](Nanos t, const Event& e) { return t < e.t; });
  for (auto it = first; it != last; ++it) {
    ts.values[TimeSurface::offset(ts.width, ts.height, it->x, it->y, it->polarity)] =
        surface_value(window_end - it->t, config);
  }
  return ts;
}

/// Incremental builder: keeps the latest timestamp per pixel and polarity and renders a
/// surface on demand, zeroing pixels older than T_s at read time.
class StreamingTimeSurface {
 public:
  StreamingTimeSurface(int width, int height, WindowConfig config)
      : width_(width), height_(height), config_(config),
        last_(static_cast<std::size_t>(width) * 2 * height, kNever) {
    config_.validate();
  }

  void push(const Event& e) {
    require(e.t >= now_, ErrorCode::kSortedness, "streaming events must arrive in time order");
    now_ = e.t;
    last_[TimeSurface::offset(width_, height_, e.x, e.y, e.polarity)] = static_cast<std::int64_t>(e.t);
  }

  /// Requires every pushed event to have t <= window_end.
  TimeSurface read(Nanos window_end, int window_index = 0) const {
    require(window_end >= now_, ErrorCode::kSortedness, "read precedes already-pushed events");
    TimeSurface ts(width_, height_, window_end, window_index);
    for (std::size_t i = 0; i < last_.size(); ++i) {
      if (last_[i] == kNever) continue;
      ts.values[i] = surface_value(window_end - static_cast<Nanos>(last_[i]), config_);
    }
    return ts;
  }

 private:
  static constexpr std::int64_t kNever = -1;
  int width_;
  int height_;
  WindowConfig config_;
  Nanos now_ = 0;
  std::vector<std::int64_t> last_;
};

struct Window {
  Nanos start = 0;
  Nanos end = 0;  // exclusive for slicing, T_max for the surface
  int index = 0;
};

/// Full windows [k*step, k*step + T_s) with k*step + T_s <= duration.
inline std::vector<Window> slice_windows(Nanos duration, const WindowConfig& config) {
  config.validate();
  require(duration >= config.window_ns, ErrorCode::kEmptyInput,
          "stream shorter than one window: no windows");
  std::vector<Window> out;
  for (Nanos k = 0; k * config.step_ns + config.window_ns <= duration; ++k) {
    out.push_back({k * config.step_ns, k * config.step_ns + config.window_ns, static_cast<int>(k)});
  }
  return out;
}

/// Model input planes stacked along rows: shape (w, planes*h).
struct StackedInput {
  int planes = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;
};

inline StackedInput as_input(const TimeSurface& ts) {
  return {2, ts.height, ts.width, ts.values};
}

/// Stacks [I_k, I_{k-1}, I_{k-2}] newest first into a (w, 6h) input. `newest_first` holds
/// min(3, k+1) surfaces; missing history at sequence start becomes all-zero planes.
inline StackedInput stack_channels(std::span<const TimeSurface> newest_first) {
  require(!newest_first.empty() && newest_first.size() <= 3, ErrorCode::kShape,
          "stack_channels takes one to three surfaces");
  const TimeSurface& head = newest_first.front();
  const std::size_t expected = static_cast<std::size_t>(std::min(3, head.window_index + 1));
  require(newest_first.size() == expected, ErrorCode::kShape,
          "stack_channels needs min(3, k+1) consecutive surfaces");
  const std::size_t plane_size = static_cast<std::size_t>(head.width) * 2 * head.height;
  StackedInput out{6, head.height, head.width, std::vector<float>(plane_size * 3, 0.0f)};
  for (std::size_t i = 0; i < newest_first.size(); ++i) {
    const TimeSurface& s = newest_first[i];
    require(s.width == head.width && s.height == head.height && s.values.size() == plane_size,
            ErrorCode::kShape, "stacked surfaces differ in shape");
    require(s.window_index == head.window_index - static_cast<int>(i), ErrorCode::kShape,
            "stacked surfaces are not consecutive windows");
    std::copy(s.values.begin(), s.values.end(), out.values.begin() + i * plane_size);
  }
  return out;
}

}  // namespace helios
