#pragma once

#include <array>
#include <optional>
#include <span>

#include "helios/core/gesture_class.hpp"

namespace helios {

inline constexpr double kDefaultGestureThreshold = 0.6;

/// Window label from per-frame labels. The first window of a sequence takes the majority
/// label (ties to the lowest encoding). Later windows switch away from `previous` only when
/// another label covers at least `threshold` of the frames.
inline GestureClass aggregate_window_label(std::span<const GestureClass> frame_labels,
                                           double threshold,
                                           std::optional<GestureClass> previous) {
  require(!frame_labels.empty(), ErrorCode::kEmptyInput, "window has no frame labels");
  require(threshold > 0.0 && threshold <= 1.0, ErrorCode::kInvalidArgument,
          "gesture threshold must lie in (0, 1]");
  std::array<int, kNumClasses> counts{};
  for (GestureClass g : frame_labels) ++counts[class_index(g)];

  int best = -1;
  for (int c = 0; c < kNumClasses; ++c) {
    if (previous && c == class_index(*previous)) continue;
    if (best < 0 || counts[c] > counts[best]) best = c;
  }
  if (!previous) return class_from_index(best);
  const double n = static_cast<double>(frame_labels.size());
  if (counts[best] > 0 && counts[best] / n >= threshold) return class_from_index(best);
  return *previous;
}

}  // namespace helios
