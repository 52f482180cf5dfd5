#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "helios/core/event.hpp"
#include "helios/core/gesture_class.hpp"
#include "helios/random.hpp"

namespace helios {


/// Edges the procedural animator can realize. A command gesture is followed by its own
/// return (or a blend back to rest), returns and one-shot motions go back to rest.
inline bool transition_allowed(GestureClass from, GestureClass to) {
  switch (from) {
    case GestureClass::Rest:
      return !is_return(to);
    case GestureClass::Pinch:
    case GestureClass::DoublePinch:
      return to == GestureClass::PinchReturn || to == GestureClass::Rest;
    case GestureClass::SwipeLeft:
      return to == GestureClass::SwipeLeftReturn || to == GestureClass::Rest;
    case GestureClass::SwipeRight:
      return to == GestureClass::SwipeRightReturn || to == GestureClass::Rest;
    default:
      return to == GestureClass::Rest;
  }
}

/// Transition weights rooted at Rest. Row r holds successor weights for state r (class index).
struct MarkovChain {
  std::array<std::array<double, kNumClasses>, kNumClasses> weights{};

  double& weight(GestureClass from, GestureClass to) {
    return weights[class_index(from)][class_index(to)];
  }
  double weight(GestureClass from, GestureClass to) const {
    return weights[class_index(from)][class_index(to)];
  }

  void validate() const {
    for (GestureClass from : kAllClasses) {
      double sum = 0;
      for (GestureClass to : kAllClasses) {
        const double w = weight(from, to);
        require(std::isfinite(w) && w >= 0, ErrorCode::kInvalidArgument,
                "Markov weights must be finite and non-negative");
        require(w == 0 || transition_allowed(from, to), ErrorCode::kInvalidArgument,
                std::string("disallowed transition ") + std::string(class_name(from)) + " -> " +
                    std::string(class_name(to)));
        sum += w;
      }
      require(sum > 0, ErrorCode::kInvalidArgument,
              "Markov row for " + std::string(class_name(from)) + " cannot be normalized");
      require(weight(from, GestureClass::Rest) > 0 || from == GestureClass::Rest || [&] {
                // Rest must stay reachable: through the return class otherwise.
                for (GestureClass to : kAllClasses)
                  if (weight(from, to) > 0 && is_return(to)) return true;
                return false;
              }(),
              ErrorCode::kInvalidArgument, "Rest is unreachable from " + std::string(class_name(from)));
    }
  }

  std::array<double, kNumClasses> row(GestureClass from) const {
    auto r = weights[class_index(from)];
    double sum = 0;
    for (double w : r) sum += w;
    for (double& w : r) w /= sum;
    return r;
  }
};

/// Balanced default: every command or one-shot motion is entered from Rest with similar
/// weight; commands return through their return class.
inline MarkovChain default_markov_chain() {
  MarkovChain c;
  c.weight(GestureClass::Rest, GestureClass::Rest) = 0.10;
  c.weight(GestureClass::Rest, GestureClass::Pinch) = 0.16;
  c.weight(GestureClass::Rest, GestureClass::DoublePinch) = 0.14;
  c.weight(GestureClass::Rest, GestureClass::SwipeLeft) = 0.17;
  c.weight(GestureClass::Rest, GestureClass::SwipeRight) = 0.17;
  c.weight(GestureClass::Rest, GestureClass::Unknown) = 0.14;
  c.weight(GestureClass::Rest, GestureClass::Untracked) = 0.12;
  c.weight(GestureClass::Pinch, GestureClass::PinchReturn) = 1.0;
  c.weight(GestureClass::DoublePinch, GestureClass::PinchReturn) = 1.0;
  c.weight(GestureClass::SwipeLeft, GestureClass::SwipeLeftReturn) = 1.0;
  c.weight(GestureClass::SwipeRight, GestureClass::SwipeRightReturn) = 1.0;
  for (GestureClass g : {GestureClass::PinchReturn, GestureClass::SwipeLeftReturn, GestureClass::SwipeRightReturn, GestureClass::Unknown, GestureClass::Untracked})
    c.weight(g, GestureClass::Rest) = 1.0;
  return c;
}

struct ScriptEntry {
  GestureClass gesture = GestureClass::Rest;
  Nanos start = 0;
  Nanos duration = 0;
  double profile_m = 0;  // sigmoid steepness; 0 for Rest

  Nanos end() const { return start + duration; }
};

struct ScriptConfig {
  Nanos total_ns = 2 * kNsPerSec;
  Nanos gesture_min_ns = 250 * kNsPerMs;
  Nanos gesture_max_ns = 333 * kNsPerMs;
  Nanos rest_min_ns = 80 * kNsPerMs;
  Nanos rest_max_ns = 400 * kNsPerMs;
  int max_gestures = 6;
  std::array<double, 4> profile_steepness = {4.0, 6.0, 8.0, 12.0};
};

/// Chronological, non-overlapping entries that tile [0, total_length).
struct GestureScript {
  std::vector<ScriptEntry> entries;
  Nanos total_length = 2 * kNsPerSec;

  GestureClass active_at(Nanos t) const {
    for (const auto& e : entries)
      if (t >= e.start && t < e.end()) return e.gesture;
    return GestureClass::Rest;
  }
};

inline void validate(const GestureScript& script, const ScriptConfig& config = {}) {
  Nanos cursor = 0;
  int gestures = 0;
  for (std::size_t i = 0; i < script.entries.size(); ++i) {
    const auto& e = script.entries[i];
    require(e.start == cursor && e.duration > 0, ErrorCode::kInvalidArgument,
            "script entries must be contiguous and non-empty");
    if (i == 0)
      require(e.gesture == GestureClass::Rest, ErrorCode::kInvalidArgument, "scripts start at Rest");
    else
      require(transition_allowed(script.entries[i - 1].gesture, e.gesture),
              ErrorCode::kInvalidArgument, "script contains a disallowed transition");
    if (e.gesture != GestureClass::Rest) {
      ++gestures;
      require(e.duration <= config.gesture_max_ns, ErrorCode::kInvalidArgument,
              "gesture longer than the maximum duration");
    }
    cursor = e.end();
  }
  require(gestures <= config.max_gestures, ErrorCode::kInvalidArgument, "too many gestures");
  require(cursor <= script.total_length, ErrorCode::kInvalidArgument,
          "script exceeds the sequence length");
}

namespace detail {

inline GestureClass sample_successor(const MarkovChain& chain, GestureClass from, Rng& rng) {
  const auto row = chain.weights[class_index(from)];
  std::discrete_distribution<int> pick(row.begin(), row.end());
  return class_from_index(pick(rng));
}

inline Nanos uniform_ns(Rng& rng, Nanos lo, Nanos hi) {
  return std::uniform_int_distribution<Nanos>(lo, hi)(rng);
}

}  // namespace detail

/// Samples a script that starts at Rest and walks the chain until the sequence is full.
/// Once `max_gestures` non-Rest entries exist the walk is forced back to Rest.
inline GestureScript sample_script(const MarkovChain& chain, std::uint64_t seed,
                                   const ScriptConfig& config = {}) {
  chain.validate();
  Rng rng(seed);
  GestureScript script;
  script.total_length = config.total_ns;
  GestureClass state = GestureClass::Rest;
  Nanos t = 0;
  int gestures = 0;
  std::uniform_int_distribution<std::size_t> pick_m(0, config.profile_steepness.size() - 1);
  while (t < config.total_ns) {
    if (!script.entries.empty()) {
      state = detail::sample_successor(chain, state, rng);
      if (state != GestureClass::Rest && gestures >= config.max_gestures) state = GestureClass::Rest;
    }
    ScriptEntry e;
    e.gesture = state;
    e.start = t;
    if (state == GestureClass::Rest) {
      e.duration = detail::uniform_ns(rng, config.rest_min_ns, config.rest_max_ns);
    } else {
      e.duration = detail::uniform_ns(rng, config.gesture_min_ns, config.gesture_max_ns);
      e.profile_m = config.profile_steepness[pick_m(rng)];
      ++gestures;
    }
    e.duration = std::min(e.duration, config.total_ns - t);
    script.entries.push_back(e);
    t = e.end();
  }
  return script;
}

}  // namespace helios
