#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "helios/error.hpp"

namespace helios {

using Nanos = std::uint64_t;

inline constexpr Nanos kNsPerMs = 1'000'000ULL;
inline constexpr Nanos kNsPerSec = 1'000'000'000ULL;

struct Event {
  Nanos t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint8_t polarity = 0;  // 1 = brighter, 0 = darker

  friend bool operator==(const Event&, const Event&) = default;
};

/// Canonical order: time, then (y, x, polarity).
inline bool event_less(const Event& a, const Event& b) {
  return std::tie(a.t, a.y, a.x, a.polarity) < std::tie(b.t, b.y, b.x, b.polarity);
}

struct EventStream {
  int width = 0;
  int height = 0;
  Nanos duration = 0;
  std::vector<Event> events;

  bool is_sorted() const {
    return std::is_sorted(events.begin(), events.end(),
                          [](const Event& a, const Event& b) { return a.t < b.t; });
  }

  void sort() { std::sort(events.begin(), events.end(), event_less); }

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

inline void validate(const EventStream& s) {
  require(s.width > 0 && s.height > 0, ErrorCode::kShape, "event stream has empty sensor");
  for (const Event& e : s.events) {
    require(e.x < s.width && e.y < s.height, ErrorCode::kInvalidArgument,
            "event out of sensor bounds at t=" + std::to_string(e.t));
    require(e.polarity <= 1, ErrorCode::kInvalidArgument, "polarity must be 0 or 1");
    require(e.t <= s.duration, ErrorCode::kInvalidArgument, "event after stream duration");
  }
  require(s.is_sorted(), ErrorCode::kSortedness, "event timestamps are not non-decreasing");
}

}  // namespace helios
