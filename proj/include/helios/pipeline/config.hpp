#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "helios/core/labels.hpp"
#include "helios/core/time_surface.hpp"
#include "helios/error.hpp"
#include "helios/eval/inference.hpp"
#include "helios/eval/metrics.hpp"
#include "helios/model/train.hpp"
#include "helios/sim/event_simulator.hpp"
#include "helios/synth/markov.hpp"
#include "helios/synth/render.hpp"
#include "helios/synth/rotate.hpp"
#include "json.hpp"

namespace helios::pipeline {

inline constexpr const char* kOutDirEnv = "HELIOS_OUT_DIR";

/// Every tunable of the pipeline. Loaded from an INI file with [section] key = value lines;
/// anything not given keeps the default below.
struct PipelineConfig {
  // [general]
  std::uint64_t seed = 7;
  std::string output_dir = "helios_out";
  int threads = 1;
  double dataset_multiplier = 0.05;
  int samples_per_class_1x = 25000;
  double val_fraction = 0.2;  // held-out sequences relative to the training split

  // [window]
  int window_ms = 240;
  int step_ms = 80;
  double decay = 5.0;
  int sequence_ms = 2000;
  double gesture_threshold = kDefaultGestureThreshold;

  // [sim]
  double contrast_threshold_pos = 0.2;
  double contrast_threshold_neg = 0.2;
  double log_eps = 1e-3;
  double noise_rate = 0.0;

  // [synth]
  int width = 64;
  int height = 64;
  double frame_rate = 90.0;
  int blend_ms = 50;
  bool blending = true;
  double jitter_sigma_deg = 1.0;
  double root_drift_px = 1.0;
  double camera_radius_px = 6.0;
  double camera_speed_px_s = 6.0;
  double max_yaw_rate_deg_s = 10.0;
  double brightness_min = 0.5;
  double brightness_max = 4.0;
  int gesture_min_ms = 250;
  int gesture_max_ms = 333;
  int rest_min_ms = 80;
  int rest_max_ms = 400;
  int max_gestures = 6;

  // [markov] successor weights of the Rest root state
  double rest_to_rest = 0.10;
  double rest_to_pinch = 0.16;
  double rest_to_double_pinch = 0.14;
  double rest_to_swipe_left = 0.17;
  double rest_to_swipe_right = 0.17;
  double rest_to_unknown = 0.14;
  double rest_to_untracked = 0.12;

  // [model]
  int input_planes = 2;
  int crop_res = 32;
  int stage2_dense = 64;
  int stage4_dense = 64;
  double dropout = 0.2;

  // [train]
  int epochs = 10;
  int batch_size = 64;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_hold_fraction = 0.3;
  int group_size = 8;

  // [qat]
  int qat_epochs = 3;
  double qat_lr_factor = 0.2;
  double observer_momentum = 0.99;
  int calibration_samples = 256;

  // [finetune]
  int finetune_epochs = 3;
  double finetune_lr_factor = 0.1;
  double rotation_min_deg = 25.0;
  double rotation_max_deg = 40.0;
  double rotated_train_fraction = 0.5;

  // [eval]
  double softmax_threshold = eval::kDefaultSoftmaxThreshold;
  int debounce_ms = 240;
  int match_window_ms = 2000;
  int trials = 200;
  int trials_per_unit = 20;
  int trial_segment_ms = 2500;
  int bench_iterations = 200;

  WindowConfig window() const {
    return {static_cast<Nanos>(window_ms) * kNsPerMs, static_cast<Nanos>(step_ms) * kNsPerMs, decay,
            static_cast<Nanos>(sequence_ms) * kNsPerMs};
  }
  SimConfig sim() const {
    SimConfig c;
    c.contrast_threshold_pos = contrast_threshold_pos;
    c.contrast_threshold_neg = contrast_threshold_neg;
    c.log_eps = log_eps;
    c.noise_rate = noise_rate;
    return c;
  }
  SynthConfig synth() const {
    SynthConfig c;
    c.frame_rate = frame_rate;
    c.blend_ns = static_cast<Nanos>(blend_ms) * kNsPerMs;
    c.blending = blending;
    c.jitter_sigma_deg = jitter_sigma_deg;
    c.root_drift_px = root_drift_px;
    c.camera_radius_px = camera_radius_px;
    c.camera_speed_px_s = camera_speed_px_s;
    c.max_yaw_rate_deg_s = max_yaw_rate_deg_s;
    return c;
  }
  ScriptConfig script() const {
    ScriptConfig c;
    c.total_ns = static_cast<Nanos>(sequence_ms) * kNsPerMs;
    c.gesture_min_ns = static_cast<Nanos>(gesture_min_ms) * kNsPerMs;
    c.gesture_max_ns = static_cast<Nanos>(gesture_max_ms) * kNsPerMs;
    c.rest_min_ns = static_cast<Nanos>(rest_min_ms) * kNsPerMs;
    c.rest_max_ns = static_cast<Nanos>(rest_max_ms) * kNsPerMs;
    c.max_gestures = max_gestures;
    return c;
  }
  MarkovChain markov() const {
    MarkovChain chain = default_markov_chain();
    const std::pair<GestureClass, double> row[] = {
        {GestureClass::Rest, rest_to_rest},           {GestureClass::Pinch, rest_to_pinch},
        {GestureClass::DoublePinch, rest_to_double_pinch}, {GestureClass::SwipeLeft, rest_to_swipe_left},
        {GestureClass::SwipeRight, rest_to_swipe_right},   {GestureClass::Unknown, rest_to_unknown},
        {GestureClass::Untracked, rest_to_untracked}};
    for (const auto& [g, w] : row) chain.weight(GestureClass::Rest, g) = w;
    chain.validate();
    return chain;
  }
  RotationConfig rotation() const { return {rotation_min_deg, rotation_max_deg}; }
  ModelConfig model() const {
    ModelConfig m;
    m.input_planes = input_planes;
    m.width = width;
    m.height = height;
    m.crop_res = crop_res;
    m.stage2_dense = stage2_dense;
    m.stage4_dense = stage4_dense;
    m.dropout = dropout;
    return m;
  }
  TrainConfig train() const {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.adam = {lr, beta1, beta2, adam_eps};
    t.hold_fraction = lr_hold_fraction;
    t.seed = derive_seed(seed, 0x545241494eull);
    t.threads = static_cast<unsigned>(threads);
    t.group_size = group_size;
    return t;
  }

  /// Training sequences: ceil(multiplier * samples_per_class_1x * classes / windows per sequence).
  int train_sequences() const {
    const auto windows = slice_windows(static_cast<Nanos>(sequence_ms) * kNsPerMs, window()).size();
    return static_cast<int>(std::ceil(dataset_multiplier * samples_per_class_1x * kNumClasses /
                                      static_cast<double>(windows)));
  }
  int val_sequences() const { return std::max(1, static_cast<int>(std::lround(val_fraction * train_sequences()))); }
  int rotated_train_sequences() const {
    return static_cast<int>(std::lround(rotated_train_fraction * train_sequences()));
  }

  void validate() const;
};

/// Calls f(name, field) for every key, in a fixed order.
template <typename Config, typename F>
void visit_fields(Config& c, F&& f) {
  f("general.seed", c.seed);
  f("general.output_dir", c.output_dir);
  f("general.threads", c.threads);
  f("general.dataset_multiplier", c.dataset_multiplier);
  f("general.samples_per_class_1x", c.samples_per_class_1x);
  f("general.val_fraction", c.val_fraction);
  f("window.window_ms", c.window_ms);
  f("window.step_ms", c.step_ms);
  f("window.decay", c.decay);
  f("window.sequence_ms", c.sequence_ms);
  f("window.gesture_threshold", c.gesture_threshold);
  f("sim.contrast_threshold_pos", c.contrast_threshold_pos);
  f("sim.contrast_threshold_neg", c.contrast_threshold_neg);
  f("sim.log_eps", c.log_eps);
  f("sim.noise_rate", c.noise_rate);
  f("synth.width", c.width);
  f("synth.height", c.height);
  f("synth.frame_rate", c.frame_rate);
  f("synth.blend_ms", c.blend_ms);
  f("synth.blending", c.blending);
  f("synth.jitter_sigma_deg", c.jitter_sigma_deg);
  f("synth.root_drift_px", c.root_drift_px);
  f("synth.camera_radius_px", c.camera_radius_px);
  f("synth.camera_speed_px_s", c.camera_speed_px_s);
  f("synth.max_yaw_rate_deg_s", c.max_yaw_rate_deg_s);
  f("synth.brightness_min", c.brightness_min);
  f("synth.brightness_max", c.brightness_max);
  f("synth.gesture_min_ms", c.gesture_min_ms);
  f("synth.gesture_max_ms", c.gesture_max_ms);
  f("synth.rest_min_ms", c.rest_min_ms);
  f("synth.rest_max_ms", c.rest_max_ms);
  f("synth.max_gestures", c.max_gestures);
  f("markov.rest_to_rest", c.rest_to_rest);
  f("markov.rest_to_pinch", c.rest_to_pinch);
  f("markov.rest_to_double_pinch", c.rest_to_double_pinch);
  f("markov.rest_to_swipe_left", c.rest_to_swipe_left);
  f("markov.rest_to_swipe_right", c.rest_to_swipe_right);
  f("markov.rest_to_unknown", c.rest_to_unknown);
  f("markov.rest_to_untracked", c.rest_to_untracked);
  f("model.input_planes", c.input_planes);
  f("model.crop_res", c.crop_res);
  f("model.stage2_dense", c.stage2_dense);
  f("model.stage4_dense", c.stage4_dense);
  f("model.dropout", c.dropout);
  f("train.epochs", c.epochs);
  f("train.batch_size", c.batch_size);
  f("train.lr", c.lr);
  f("train.beta1", c.beta1);
  f("train.beta2", c.beta2);
  f("train.adam_eps", c.adam_eps);
  f("train.lr_hold_fraction", c.lr_hold_fraction);
  f("train.group_size", c.group_size);
  f("qat.epochs", c.qat_epochs);
  f("qat.lr_factor", c.qat_lr_factor);
  f("qat.observer_momentum", c.observer_momentum);
  f("qat.calibration_samples", c.calibration_samples);
  f("finetune.epochs", c.finetune_epochs);
  f("finetune.lr_factor", c.finetune_lr_factor);
  f("finetune.rotation_min_deg", c.rotation_min_deg);
  f("finetune.rotation_max_deg", c.rotation_max_deg);
  f("finetune.rotated_train_fraction", c.rotated_train_fraction);
  f("eval.softmax_threshold", c.softmax_threshold);
  f("eval.debounce_ms", c.debounce_ms);
  f("eval.match_window_ms", c.match_window_ms);
  f("eval.trials", c.trials);
  f("eval.trials_per_unit", c.trials_per_unit);
  f("eval.trial_segment_ms", c.trial_segment_ms);
  f("eval.bench_iterations", c.bench_iterations);
}

namespace detail {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
      if (text == "false" || text == "0" || text == "no" || text == "off") return false;
      throw std::invalid_argument("not a boolean");
    } else if constexpr (std::is_same_v<T, int>) {
      std::size_t used = 0;
      const int v = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      std::size_t used = 0;
      if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } else {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
  } catch (const std::exception&) {
    fail(ErrorCode::kConfig, "invalid value '" + text + "' for " + key);
  }
}

}  // namespace detail

/// Applies "section.key=value" assignments; unknown keys are rejected.
inline void apply_assignment(PipelineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos, ErrorCode::kConfig, "expected section.key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), value = assignment.substr(eq + 1);
  bool found = false;
  visit_fields(cfg, [&](const char* name, auto& field) {
    if (key == name) {
      field = detail::parse_value<std::decay_t<decltype(field)>>(key, value);
      found = true;
    }
  });
  require(found, ErrorCode::kConfig, "unknown config key '" + key + "'");
}

inline PipelineConfig parse_config_ini(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::kConfig, std::string("config: ") + e.what());
  }
  PipelineConfig cfg;
  for (const auto& [section, keys] : tree) {
    require(!keys.empty() || keys.data().empty(), ErrorCode::kConfig, "config keys must live in a [section]");
    for (const auto& [key, value] : keys) apply_assignment(cfg, section + "." + key + "=" + value.data());
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot read config " + path.string());
  return parse_config_ini(in);
}

inline nlohmann::json to_json(const PipelineConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(const_cast<PipelineConfig&>(cfg), [&](const char* name, auto& field) {
    const std::string key = name;
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = field;
  });
  return j;
}

/// INI text that reproduces `cfg`.
inline std::string to_ini(const PipelineConfig& cfg) {
  std::string out, current;
  visit_fields(const_cast<PipelineConfig&>(cfg), [&](const char* name, auto& field) {
    const std::string key = name;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != current) {
      current = key.substr(0, dot);
      out += (out.empty() ? "[" : "\n[") + current + "]\n";
    }
    out += key.substr(dot + 1) + " = " + nlohmann::json(field).dump() + "\n";
  });
  // JSON quoting suits every value except strings, which INI keeps bare.
  std::string cleaned;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] != '"') cleaned += out[i];
  return cleaned;
}

inline void PipelineConfig::validate() const {
  require(threads >= 1, ErrorCode::kConfig, "general.threads must be >= 1");
  require(dataset_multiplier > 0 && samples_per_class_1x > 0, ErrorCode::kConfig, "dataset size must be positive");
  require(val_fraction > 0, ErrorCode::kConfig, "general.val_fraction must be positive");
  require(gesture_threshold > 0 && gesture_threshold <= 1, ErrorCode::kConfig, "gesture threshold must lie in (0, 1]");
  require(brightness_min >= 0.5 && brightness_max <= 4.0 && brightness_min <= brightness_max, ErrorCode::kConfig,
          "brightness range must lie within [0.5, 4.0]");
  require(softmax_threshold > 0 && softmax_threshold < 1, ErrorCode::kConfig, "softmax threshold must lie in (0, 1)");
  require(trials > 0 && trials_per_unit > 0 && trials % trials_per_unit == 0, ErrorCode::kConfig,
          "eval.trials must be a positive multiple of eval.trials_per_unit");
  require(trial_segment_ms > match_window_ms, ErrorCode::kConfig,
          "trial segments must be longer than the match window so trials never overlap");
  require(bench_iterations >= 100, ErrorCode::kConfig, "eval.bench_iterations must be >= 100");
  require(qat_epochs >= 1 && finetune_epochs >= 1, ErrorCode::kConfig, "epoch counts must be >= 1");
  require(rotation_min_deg >= 0 && rotation_min_deg <= rotation_max_deg, ErrorCode::kConfig, "invalid rotation range");
  window().validate();
  model().validate();
  train().validate();
  markov();
}

}  // namespace helios::pipeline
