#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "helios/core/event.hpp"
#include "helios/core/labels.hpp"
#include "helios/core/time_surface.hpp"
#include "helios/eval/inference.hpp"
#include "helios/model/train.hpp"
#include "helios/pipeline/config.hpp"
#include "helios/random.hpp"
#include "helios/sim/event_simulator.hpp"
#include "helios/synth/label_io.hpp"
#include "helios/synth/markov.hpp"
#include "helios/synth/render.hpp"
#include "helios/synth/rotate.hpp"
#include "json.hpp"

namespace helios::pipeline {

/// Dataset splits. Each split draws its sequence seeds from its own stream.
enum class Split { kTrain, kVal, kTrainRotated };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTrainRotated: return "train_rot";
  }
  return "?";
}

inline std::uint64_t split_tag(Split s) { return 0x53504c4954ull + static_cast<std::uint64_t>(s); }

inline int split_size(const PipelineConfig& cfg, Split s) {
  switch (s) {
    case Split::kTrain: return cfg.train_sequences();
    case Split::kVal: return cfg.val_sequences();
    case Split::kTrainRotated: return cfg.rotated_train_sequences();
  }
  return 0;
}

/// Randomized scene for one sequence: background texture, brightness and camera path.
inline SceneConfig sample_scene(const PipelineConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  SceneConfig scene;
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.texture_id = std::uniform_int_distribution<int>(0, 2)(rng);
  scene.texture_seed = rng();
  // Log-uniform so dim and bright scenes are equally common.
  scene.brightness_factor = std::exp(uniform(rng, std::log(cfg.brightness_min), std::log(cfg.brightness_max)));
  scene.camera_path_seed = rng();
  return scene;
}

struct SimulatedSequence {
  EventStream events;
  std::vector<FrameLabel> labels;
  double rotation_deg = 0;
};

/// Renders, optionally rotates, and converts one scripted sequence to events.
inline SimulatedSequence simulate_script(const PipelineConfig& cfg, const GestureScript& script, std::uint64_t seed,
                                         bool rotate) {
  const SceneConfig scene = sample_scene(cfg, derive_seed(seed, 1));
  SynthesizedSequence seq = synthesize_sequence(script, scene, cfg.synth(), derive_seed(seed, 2));
  SimulatedSequence out;
  if (rotate) {
    RotatedSequence r = rotate_sequence(seq, derive_seed(seed, 3), cfg.rotation());
    seq = std::move(r.sequence);
    out.rotation_deg = r.angle_deg;
  }
  out.events = generate_events(seq.frames, cfg.sim(), derive_seed(seed, 4));
  out.events.duration = script.total_length;
  out.labels = frame_labels(seq);
  return out;
}

/// Sequence `index` of a split: Markov script plus scene, seeded by (global seed, split, index).
inline SimulatedSequence simulate_split_sequence(const PipelineConfig& cfg, Split split, int index) {
  const std::uint64_t seed = derive_seed(cfg.seed, split_tag(split), static_cast<std::uint64_t>(index));
  const GestureScript script = sample_script(cfg.markov(), derive_seed(seed, 0), cfg.script());
  return simulate_script(cfg, script, seed, split == Split::kTrainRotated);
}

/// Supervision for one window.
struct WindowRecord {
  int sequence = 0;
  int window = 0;
  Nanos end = 0;
  GestureClass label = GestureClass::Rest;
  bool hand_present = true;
  bool bbox_valid = false;
  std::array<double, 3> bbox{0.5, 0.5, 0.5};  // normalized (cx, cy, side)

  Target target() const { return {label, hand_present, bbox_valid, bbox}; }
};

/// Window labels via aggregate_window_label over the frames inside [start, end), chained
/// through the previous window's label. The bbox target comes from the window's last frame.
inline std::vector<WindowRecord> window_records(const std::vector<FrameLabel>& frames, Nanos duration, int width,
                                                int height, const WindowConfig& wcfg, double gesture_threshold,
                                                int sequence_index = 0) {
  std::vector<WindowRecord> out;
  if (duration < wcfg.window_ns) return out;
  std::optional<GestureClass> previous;
  for (const Window& w : slice_windows(duration, wcfg)) {
    std::vector<GestureClass> in_window;
    const FrameLabel* last = nullptr;
    for (const auto& f : frames)
      if (f.t_ns >= w.start && f.t_ns < w.end) {
        in_window.push_back(f.gesture);
        last = &f;
      }
    require(last != nullptr, ErrorCode::kEmptyInput, "window without frames");
    WindowRecord r;
    r.sequence = sequence_index;
    r.window = w.index;
    r.end = w.end;
    r.label = aggregate_window_label(in_window, gesture_threshold, previous);
    previous = r.label;
    r.hand_present = r.label != GestureClass::Untracked;
    if (last->bbox) {
      r.bbox_valid = true;
      r.bbox = {last->bbox->cx() / width, last->bbox->cy() / height, last->bbox->side / width};
    }
    out.push_back(r);
  }
  return out;
}

inline nlohmann::json to_json(const WindowRecord& r) {
  return {{"sequence", r.sequence},
          {"window", r.window},
          {"t_end_ns", r.end},
          {"class", std::string(class_name(r.label))},
          {"hand_present", r.hand_present},
          {"bbox", r.bbox_valid ? nlohmann::json(r.bbox) : nlohmann::json(nullptr)}};
}

inline WindowRecord window_record_from_json(const nlohmann::json& j) {
  WindowRecord r;
  try {
    r.sequence = j.at("sequence").get<int>();
    r.window = j.at("window").get<int>();
    r.end = j.at("t_end_ns").get<Nanos>();
    r.label = class_from_name(j.at("class").get<std::string>());
    r.hand_present = j.at("hand_present").get<bool>();
    if (!j.at("bbox").is_null()) {
      r.bbox_valid = true;
      r.bbox = j.at("bbox").get<std::array<double, 3>>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad window record: ") + e.what());
  }
  return r;
}

/// Event streams plus their window records; surfaces are built on demand.
struct WindowDataset {
  std::vector<EventStream> streams;
  std::vector<WindowRecord> records;  // record.sequence indexes `streams`
  WindowConfig window;
  int planes = 2;

  void append(EventStream stream, std::vector<WindowRecord> recs) {
    const int index = static_cast<int>(streams.size());
    streams.push_back(std::move(stream));
    for (auto& r : recs) {
      r.sequence = index;
      records.push_back(r);
    }
  }

  /// Model input for record `i`: its surface, or the newest three surfaces stacked.
  void input(std::size_t i, std::vector<float>& out) const {
    const WindowRecord& r = records[i];
    const EventStream& s = streams[r.sequence];
    if (planes == 2) {
      out = build_time_surface(s, r.end, window, r.window).values;
      return;
    }
    std::vector<TimeSurface> history;
    for (int k = 0; k < 3 && k <= r.window; ++k)
      history.push_back(build_time_surface(s, r.end - static_cast<Nanos>(k) * window.step_ns, window, r.window - k));
    out = stack_channels(history).values;
  }

  SampleSource source() const {
    return {records.size(), [this](std::size_t i, std::vector<float>& in, Target& t) {
              input(i, in);
              t = records[i].target();
            }};
  }
};

/// Concatenation of datasets (e.g. original plus rotated for fine-tuning).
inline SampleSource concat_sources(std::vector<SampleSource> parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size;
  return {total, [parts](std::size_t i, std::vector<float>& in, Target& t) {
            for (const auto& p : parts) {
              if (i < p.size) return p.get(i, in, t);
              i -= p.size;
            }
            fail(ErrorCode::kInvalidArgument, "sample index out of range");
          }};
}

}  // namespace helios::pipeline
