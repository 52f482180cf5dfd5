#pragma once

#include <array>
#include <functional>
#include <vector>

#include "helios/core/event.hpp"
#include "helios/core/gesture_class.hpp"
#include "helios/core/time_surface.hpp"

namespace helios::eval {

inline constexpr double kDefaultSoftmaxThreshold = 0.65;
inline constexpr Nanos kDefaultDebounceNs = 240 * kNsPerMs;

/// Maps one (planes x H x W) input to combined class probabilities. Implementations may wrap
/// the float, fake-quant or integer model.
using Classifier = std::function<std::array<double, kNumClasses>(const float* input)>;

struct PredictionEvent {
  GestureClass gesture = GestureClass::Rest;
  Nanos time = 0;
  double confidence = 0;
};

struct WindowProbabilities {
  Window window;
  std::array<double, kNumClasses> probs{};
};

/// Model inputs for every full window of `stream`: the window's surface (2 planes) or the
/// newest three surfaces stacked newest first (6 planes).
inline std::vector<std::vector<float>> window_inputs(const EventStream& stream, const WindowConfig& cfg, int planes,
                                                     std::vector<Window>* windows_out = nullptr) {
  require(planes == 2 || planes == 6, ErrorCode::kInvalidArgument, "input planes must be 2 or 6");
  std::vector<std::vector<float>> inputs;
  if (stream.duration < cfg.window_ns) {
    if (windows_out) windows_out->clear();
    return inputs;
  }
  const std::vector<Window> windows = slice_windows(stream.duration, cfg);
  std::vector<TimeSurface> surfaces;
  surfaces.reserve(windows.size());
  for (const Window& w : windows) surfaces.push_back(build_time_surface(stream, w.end, cfg, w.index));
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (planes == 2) {
      inputs.push_back(surfaces[k].values);
      continue;
    }
    std::vector<TimeSurface> history;
    for (std::size_t i = 0; i < 3 && i <= k; ++i) history.push_back(surfaces[k - i]);
    inputs.push_back(stack_channels(history).values);
  }
  if (windows_out) *windows_out = windows;
  return inputs;
}

inline std::vector<WindowProbabilities> window_probabilities(const EventStream& stream, const Classifier& model,
                                                             const WindowConfig& cfg, int planes) {
  std::vector<Window> windows;
  const auto inputs = window_inputs(stream, cfg, planes, &windows);
  std::vector<WindowProbabilities> out(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) out[k] = {windows[k], model(inputs[k].data())};
  return out;
}

/// A window is a candidate when its top class is a command gesture with probability strictly
/// above `threshold`. Rest, Unknown, Untracked and return classes never emit.
inline std::vector<PredictionEvent> window_candidates(const std::vector<WindowProbabilities>& windows,
                                                      double threshold = kDefaultSoftmaxThreshold) {
  std::vector<PredictionEvent> out;
  for (const auto& w : windows) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (w.probs[c] > w.probs[best]) best = c;
    const GestureClass g = class_from_index(best);
    if (w.probs[best] > threshold && is_command(g)) out.push_back({g, w.window.end, w.probs[best]});
  }
  return out;
}

/// Chains same-class candidates whose gap to the previous chain member is at most `horizon`
/// and emits one event per chain at the first member's time. A candidate of another class
/// always ends the chain.
inline std::vector<PredictionEvent> debounce(const std::vector<PredictionEvent>& candidates,
                                             Nanos horizon = kDefaultDebounceNs) {
  std::vector<PredictionEvent> out;
  Nanos chain_last = 0;
  for (const auto& c : candidates) {
    if (!out.empty() && out.back().gesture == c.gesture && c.time >= chain_last && c.time - chain_last <= horizon) {
      chain_last = c.time;
      continue;
    }
    out.push_back(c);
    chain_last = c.time;
  }
  return out;
}

inline std::vector<PredictionEvent> sliding_inference(const EventStream& stream, const Classifier& model,
                                                      const WindowConfig& cfg, int planes,
                                                      double threshold = kDefaultSoftmaxThreshold,
                                                      Nanos debounce_ns = kDefaultDebounceNs) {
  return debounce(window_candidates(window_probabilities(stream, model, cfg, planes), threshold), debounce_ns);
}

}  // namespace helios::eval
