#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "helios/core/event.hpp"
#include "helios/core/gesture_class.hpp"
#include "helios/eval/inference.hpp"

namespace helios::eval {

inline constexpr Nanos kDefaultMatchWindowNs = 2 * kNsPerSec;

struct TrialRecord {
  GestureClass prompted = GestureClass::Pinch;
  Nanos prompt_time = 0;
  Nanos response_deadline = 0;  // prompt_time + match window
};

inline bool is_promptable(GestureClass g) {
  return g == GestureClass::SwipeRight || g == GestureClass::SwipeLeft || g == GestureClass::Pinch;
}

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  /// 2TP / (2TP + FP + FN), 0 when every count is 0.
  double f1() const {
    const long d = 2 * tp + fp + fn;
    return d == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(d);
  }
  bool empty() const { return tp == 0 && fp == 0 && fn == 0; }
  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// The three prompted groups: right swipe, left swipe and combined pinch (Pinch + DoublePinch).
enum class PromptGroup { kSwipeRight = 0, kSwipeLeft = 1, kCombinedPinch = 2 };
inline constexpr int kNumPromptGroups = 3;
inline constexpr const char* kPromptGroupNames[kNumPromptGroups] = {"RS", "LS", "CP"};

inline std::optional<PromptGroup> prompt_group(GestureClass g) {
  switch (g) {
    case GestureClass::SwipeRight: return PromptGroup::kSwipeRight;
    case GestureClass::SwipeLeft: return PromptGroup::kSwipeLeft;
    case GestureClass::Pinch:
    case GestureClass::DoublePinch: return PromptGroup::kCombinedPinch;
    default: return std::nullopt;
  }
}

inline bool satisfies(GestureClass predicted, GestureClass prompted) {
  if (prompted == GestureClass::Pinch) return predicted == GestureClass::Pinch || predicted == GestureClass::DoublePinch;
  return predicted == prompted;
}

/// Scores of one evaluation unit (a user, or a group of synthetic trials).
struct UnitScore {
  std::array<Counts, kNumClasses> per_class{};
  std::array<Counts, kNumPromptGroups> groups{};

  /// Mean F1 over the prompt groups that saw any trial or prediction.
  double mean_group_f1() const {
    double sum = 0;
    int n = 0;
    for (const auto& g : groups)
      if (!g.empty()) {
        sum += g.f1();
        ++n;
      }
    return n == 0 ? 0.0 : sum / n;
  }
};

inline void validate_trials(const std::vector<TrialRecord>& trials) {
  std::vector<TrialRecord> sorted = trials;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.prompt_time < b.prompt_time; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    require(is_promptable(sorted[i].prompted), ErrorCode::kInvalidArgument, "trials prompt SwipeRight, SwipeLeft or Pinch");
    require(sorted[i].response_deadline > sorted[i].prompt_time, ErrorCode::kInvalidArgument,
            "trial deadline must follow its prompt");
    if (i > 0)
      require(sorted[i].prompt_time > sorted[i - 1].response_deadline, ErrorCode::kInvalidArgument,
              "trials overlap");
  }
}

/// Every prediction becomes exactly one TP or FP; every trial exactly one TP or FN. A
/// prediction inside [prompt, deadline] that satisfies the prompt consumes the trial as a TP;
/// any other prediction is an FP of its own class.
inline UnitScore match_and_score(const std::vector<PredictionEvent>& predictions, const std::vector<TrialRecord>& trials) {
  validate_trials(trials);
  UnitScore s;
  std::vector<bool> consumed(trials.size(), false);
  std::vector<PredictionEvent> preds = predictions;
  std::stable_sort(preds.begin(), preds.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  auto add = [&](GestureClass cls, long Counts::*field) {
    ++(s.per_class[class_index(cls)].*field);
    if (auto g = prompt_group(cls)) ++(s.groups[static_cast<int>(*g)].*field);
  };
  for (const auto& p : preds) {
    bool matched = false;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const auto& t = trials[i];
      if (!consumed[i] && p.time >= t.prompt_time && p.time <= t.response_deadline && satisfies(p.gesture, t.prompted)) {
        consumed[i] = true;
        matched = true;
        add(t.prompted, &Counts::tp);
        break;
      }
    }
    if (!matched) add(p.gesture, &Counts::fp);
  }
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (!consumed[i]) add(trials[i].prompted, &Counts::fn);
  return s;
}

struct MetricsReport {
  std::array<Counts, kNumClasses> per_class{};    // pooled over units
  std::array<Counts, kNumPromptGroups> groups{};  // pooled over units
  std::vector<double> unit_f1;
  double mean_f1 = 0;
  double median_f1 = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// F1 per unit, then mean and median across units; counts are also pooled for the tables.
inline MetricsReport aggregate_units(const std::vector<UnitScore>& units) {
  MetricsReport r;
  for (const auto& u : units) {
    for (int c = 0; c < kNumClasses; ++c) r.per_class[c] += u.per_class[c];
    for (int g = 0; g < kNumPromptGroups; ++g) r.groups[g] += u.groups[g];
    r.unit_f1.push_back(u.mean_group_f1());
  }
  if (!r.unit_f1.empty()) {
    double sum = 0;
    for (double f : r.unit_f1) sum += f;
    r.mean_f1 = sum / static_cast<double>(r.unit_f1.size());
  }
  r.median_f1 = median(r.unit_f1);
  return r;
}

struct ConfusionMatrix {
  std::array<std::array<long, kNumClasses>, kNumClasses> counts{};  // [true][predicted]

  std::optional<double> class_precision(int c) const {
    long col = 0;
    for (int t = 0; t < kNumClasses; ++t) col += counts[t][c];
    if (col == 0) return std::nullopt;
    return static_cast<double>(counts[c][c]) / static_cast<double>(col);
  }

  /// Mean of diag / column sum over classes that were predicted at least once.
  double average_precision() const {
    double sum = 0;
    int n = 0;
    for (int c = 0; c < kNumClasses; ++c)
      if (auto p = class_precision(c)) {
        sum += *p;
        ++n;
      }
    return n == 0 ? 0.0 : sum / n;
  }

  long row_sum(int t) const {
    long s = 0;
    for (long v : counts[t]) s += v;
    return s;
  }
};

/// Rows are true window labels, columns the argmax class (no softmax threshold).
inline ConfusionMatrix confusion_matrix(const std::vector<GestureClass>& predicted, const std::vector<GestureClass>& labels) {
  require(predicted.size() == labels.size(), ErrorCode::kShape, "prediction and label counts differ");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) ++m.counts[class_index(labels[i])][class_index(predicted[i])];
  return m;
}

}  // namespace helios::eval
