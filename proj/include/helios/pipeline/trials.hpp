#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "helios/eval/metrics.hpp"
#include "helios/pipeline/dataset.hpp"

namespace helios::pipeline {

inline constexpr Nanos kPromptLeadNs = 100 * kNsPerMs;  // prompt appears this long into a segment
inline constexpr Nanos kTrialRestMinNs = 300 * kNsPerMs;
inline constexpr Nanos kTrialRestMaxNs = 700 * kNsPerMs;

inline GestureClass return_of(GestureClass g) {
  switch (g) {
    case GestureClass::Pinch: return GestureClass::PinchReturn;
    case GestureClass::SwipeLeft: return GestureClass::SwipeLeftReturn;
    case GestureClass::SwipeRight: return GestureClass::SwipeRightReturn;
    default: fail(ErrorCode::kInvalidArgument, "only prompted gestures have a return motion");
  }
}

/// One prompted trial: Rest, the gesture, its return, then Rest until the segment ends.
inline GestureScript trial_script(GestureClass prompted, const PipelineConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const ScriptConfig sc = cfg.script();
  const Nanos segment = static_cast<Nanos>(cfg.trial_segment_ms) * kNsPerMs;
  auto dur = [&](Nanos lo, Nanos hi) { return std::uniform_int_distribution<Nanos>(lo, hi)(rng); };
  auto steep = [&] {
    return sc.profile_steepness[std::uniform_int_distribution<std::size_t>(0, sc.profile_steepness.size() - 1)(rng)];
  };
  GestureScript s;
  s.total_length = segment;
  Nanos t = 0;
  auto push = [&](GestureClass g, Nanos d, double m) {
    s.entries.push_back({g, t, d, m});
    t += d;
  };
  push(GestureClass::Rest, dur(kTrialRestMinNs, kTrialRestMaxNs), 0);
  push(prompted, dur(sc.gesture_min_ns, sc.gesture_max_ns), steep());
  push(return_of(prompted), dur(sc.gesture_min_ns, sc.gesture_max_ns), steep());
  push(GestureClass::Rest, segment - t, 0);
  validate(s, sc);
  return s;
}

/// A stream of consecutive trial segments (one evaluation unit) with its trial records.
struct TrialUnit {
  EventStream events;
  std::vector<eval::TrialRecord> trials;
  std::vector<double> rotations_deg;  // per segment, 0 when unrotated
};

/// Unit `unit` of the trial protocol. Prompted classes are balanced within the unit and shuffled.
inline TrialUnit make_trial_unit(const PipelineConfig& cfg, int unit, bool rotated) {
  const std::uint64_t unit_seed = derive_seed(cfg.seed, rotated ? 0x54524f54ull : 0x5452ull, static_cast<std::uint64_t>(unit));
  const GestureClass prompts[] = {GestureClass::SwipeRight, GestureClass::SwipeLeft, GestureClass::Pinch};
  std::vector<GestureClass> order;
  for (int i = 0; i < cfg.trials_per_unit; ++i) order.push_back(prompts[i % 3]);
  Rng rng(derive_seed(unit_seed, 0));
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

  const Nanos segment = static_cast<Nanos>(cfg.trial_segment_ms) * kNsPerMs;
  TrialUnit out;
  out.events.width = cfg.width;
  out.events.height = cfg.height;
  out.events.duration = segment * static_cast<Nanos>(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::uint64_t seed = derive_seed(unit_seed, 1 + k);
    const GestureScript script = trial_script(order[k], cfg, derive_seed(seed, 0));
    const SimulatedSequence seq = simulate_script(cfg, script, seed, rotated);
    const Nanos offset = segment * static_cast<Nanos>(k);
    for (Event e : seq.events.events) {
      e.t += offset;
      out.events.events.push_back(e);
    }
    const Nanos prompt = offset + kPromptLeadNs;
    out.trials.push_back({order[k], prompt, prompt + static_cast<Nanos>(cfg.match_window_ms) * kNsPerMs});
    out.rotations_deg.push_back(seq.rotation_deg);
  }
  require(out.events.is_sorted(), ErrorCode::kSortedness, "trial unit events are not sorted");
  eval::validate_trials(out.trials);
  return out;
}

inline int trial_unit_count(const PipelineConfig& cfg) { return cfg.trials / cfg.trials_per_unit; }

inline nlohmann::json to_json(const std::vector<eval::TrialRecord>& trials) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : trials)
    a.push_back({{"prompted", std::string(class_name(t.prompted))},
                 {"prompt_time_ns", t.prompt_time},
                 {"response_deadline_ns", t.response_deadline}});
  return a;
}

inline std::vector<eval::TrialRecord> trials_from_json(const nlohmann::json& a) {
  std::vector<eval::TrialRecord> out;
  try {
    for (const auto& t : a)
      out.push_back({class_from_name(t.at("prompted").get<std::string>()), t.at("prompt_time_ns").get<Nanos>(),
                     t.at("response_deadline_ns").get<Nanos>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad trial record: ") + e.what());
  }
  eval::validate_trials(out);
  return out;
}

}  // namespace helios::pipeline
