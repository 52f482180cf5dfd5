#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "helios/core/event_io.hpp"
#include "helios/core/npy.hpp"
#include "helios/eval/bench.hpp"
#include "helios/eval/inference.hpp"
#include "helios/eval/metrics.hpp"
#include "helios/eval/report.hpp"
#include "helios/model/container.hpp"
#include "helios/model/train.hpp"
#include "helios/parallel.hpp"
#include "helios/pipeline/config.hpp"
#include "helios/pipeline/dataset.hpp"
#include "helios/pipeline/manifest.hpp"
#include "helios/pipeline/trials.hpp"
#include "helios/quant/integer.hpp"
#include "helios/quant/quant_io.hpp"

namespace helios::pipeline {

namespace fs = std::filesystem;

/// Where every artifact lives below the output root.
struct Layout {
  fs::path root;

  fs::path simulate() const { return root / "simulate"; }
  fs::path split_dir(Split s) const { return simulate() / split_name(s); }
  fs::path events(Split s, int i) const { return split_dir(s) / seq_name(i, ".evt2"); }
  fs::path labels(Split s, int i) const { return split_dir(s) / seq_name(i, ".labels.jsonl"); }
  fs::path trials_dir(bool rotated) const { return simulate() / (rotated ? "trials_rot" : "trials"); }
  fs::path unit_events(bool rotated, int u) const { return trials_dir(rotated) / unit_name(u, ".evt2"); }
  fs::path unit_trials(bool rotated, int u) const { return trials_dir(rotated) / unit_name(u, ".trials.json"); }

  fs::path encode() const { return root / "encode"; }
  fs::path windows(Split s) const { return encode() / split_name(s) / "windows.jsonl"; }

  fs::path train() const { return root / "train"; }
  fs::path float_model() const { return train() / "model_float.hlsc"; }
  fs::path qat() const { return root / "qat"; }
  fs::path qat_model() const { return qat() / "model_qat.hlsc"; }
  fs::path int8_model() const { return qat() / "model_int8.hlsc"; }
  fs::path finetune() const { return root / "finetune"; }
  fs::path finetuned_model() const { return finetune() / "model_finetuned.hlsc"; }
  fs::path evaluate(const std::string& model) const { return root / "evaluate" / model; }
  fs::path bench() const { return root / "bench"; }
  fs::path report() const { return root / "report"; }

  static std::string seq_name(int i, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "seq_%05d%s", i, ext);
    return buf;
  }
  static std::string unit_name(int u, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "unit_%03d%s", u, ext);
    return buf;
  }
};

inline const fs::path& require_artifact(const fs::path& p) {
  require(fs::exists(p), ErrorCode::kMissingArtifact, "missing upstream artifact " + p.string());
  return p;
}

inline void write_text_file(const fs::path& p, const std::string& text) { eval::write_text(p, text); }

inline nlohmann::json read_json_file(const fs::path& p) {
  const auto bytes = read_file_bytes(require_artifact(p));
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, p.string() + ": " + e.what());
  }
}

struct StageContext {
  PipelineConfig cfg;
  Layout layout;
  std::ostream* log = &std::cerr;

  explicit StageContext(PipelineConfig c, std::ostream* l = &std::cerr) : cfg(std::move(c)), layout{cfg.output_dir}, log(l) {}
  void say(const std::string& s) const {
    if (log) *log << s << std::endl;
  }
};

inline constexpr Split kAllSplits[] = {Split::kTrain, Split::kVal, Split::kTrainRotated};

// ---------------------------------------------------------------- simulate

inline void run_simulate(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  Manifest m{"simulate", L.root};
  for (Split s : kAllSplits) {
    const int n = split_size(cfg, s);
    ctx.say(std::string("simulate ") + split_name(s) + ": " + std::to_string(n) + " sequences");
    std::vector<double> rotations(n, 0.0);
    parallel_for(static_cast<std::size_t>(n), static_cast<unsigned>(cfg.threads), [&](std::size_t i) {
      const SimulatedSequence seq = simulate_split_sequence(cfg, s, static_cast<int>(i));
      write_evt2(L.events(s, static_cast<int>(i)), seq.events);
      write_label_jsonl(L.labels(s, static_cast<int>(i)), seq.labels);
      rotations[i] = seq.rotation_deg;
    });
    const fs::path index = L.split_dir(s) / "split.json";
    eval::write_json(index, {{"split", split_name(s)}, {"sequences", n}, {"rotations_deg", rotations}});
    m.output(index);
    for (int i = 0; i < n; ++i) {
      m.output(L.events(s, i));
      m.output(L.labels(s, i));
    }
  }
  for (bool rotated : {false, true}) {
    const int units = trial_unit_count(cfg);
    ctx.say(std::string("simulate ") + (rotated ? "trials_rot" : "trials") + ": " + std::to_string(units) + " units");
    parallel_for(static_cast<std::size_t>(units), static_cast<unsigned>(cfg.threads), [&](std::size_t u) {
      const TrialUnit unit = make_trial_unit(cfg, static_cast<int>(u), rotated);
      write_evt2(L.unit_events(rotated, static_cast<int>(u)), unit.events);
      eval::write_json(L.unit_trials(rotated, static_cast<int>(u)),
                       {{"trials", to_json(unit.trials)}, {"rotations_deg", unit.rotations_deg}});
    });
    for (int u = 0; u < units; ++u) {
      m.output(L.unit_events(rotated, u));
      m.output(L.unit_trials(rotated, u));
    }
  }
  m.write(L.simulate() / "manifest.json", cfg);
}

// ---------------------------------------------------------------- encode

inline int split_sequences_on_disk(const Layout& L, Split s) {
  return read_json_file(L.split_dir(s) / "split.json").at("sequences").get<int>();
}

/// Window records for every sequence of a split; optionally dumps each sequence's surfaces as NPY.
inline void run_encode(const StageContext& ctx, bool dump_npy = false) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  const WindowConfig wcfg = cfg.window();
  Manifest m{"encode", L.root};
  for (Split s : kAllSplits) {
    const int n = split_sequences_on_disk(L, s);
    std::vector<std::vector<WindowRecord>> recs(n);
    parallel_for(static_cast<std::size_t>(n), static_cast<unsigned>(cfg.threads), [&](std::size_t i) {
      const EventStream events = read_evt2(require_artifact(L.events(s, static_cast<int>(i))));
      const auto labels = read_label_jsonl(require_artifact(L.labels(s, static_cast<int>(i))));
      recs[i] = window_records(labels, events.duration, events.width, events.height, wcfg, cfg.gesture_threshold,
                               static_cast<int>(i));
      if (dump_npy) {
        const auto inputs = eval::window_inputs(events, wcfg, cfg.input_planes);
        std::vector<float> flat;
        for (const auto& x : inputs) flat.insert(flat.end(), x.begin(), x.end());
        const std::size_t rows = static_cast<std::size_t>(cfg.input_planes / 2) * 2 * events.height;
        write_npy_f32(L.encode() / split_name(s) / "surfaces" / Layout::seq_name(static_cast<int>(i), ".npy"), flat,
                      {inputs.size(), rows, static_cast<std::size_t>(events.width)});
      }
    });
    std::string text;
    for (const auto& seq : recs)
      for (const auto& r : seq) text += to_json(r).dump() + "\n";
    write_text_file(L.windows(s), text);
    m.output(L.windows(s));
    if (dump_npy)
      for (int i = 0; i < n; ++i) m.output(L.encode() / split_name(s) / "surfaces" / Layout::seq_name(i, ".npy"));
    for (int i = 0; i < n; ++i) m.input(L.labels(s, i));
    ctx.say(std::string("encode ") + split_name(s) + ": " + std::to_string(n) + " sequences");
  }
  m.write(L.encode() / "manifest.json", cfg);
}

/// Loads a split's event streams and encoded window records into memory.
inline WindowDataset load_dataset(const StageContext& ctx, Split s, Manifest* m = nullptr) {
  const Layout& L = ctx.layout;
  WindowDataset d;
  d.window = ctx.cfg.window();
  d.planes = ctx.cfg.input_planes;
  const int n = split_sequences_on_disk(L, s);
  std::vector<std::vector<WindowRecord>> recs(n);
  std::ifstream in(require_artifact(L.windows(s)));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    WindowRecord r;
    try {
      r = window_record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, L.windows(s).string() + ": " + e.what());
    }
    require(r.sequence >= 0 && r.sequence < n, ErrorCode::kFormat, "window record for an unknown sequence");
    recs[r.sequence].push_back(r);
  }
  for (int i = 0; i < n; ++i) d.append(read_evt2(require_artifact(L.events(s, i))), std::move(recs[i]));
  if (m) {
    m->input(L.windows(s));
    for (int i = 0; i < n; ++i) m->input(L.events(s, i));
  }
  return d;
}

inline nlohmann::json to_json(const EpochMetrics& e) {
  return {{"epoch", e.epoch},           {"loss_bbox", e.loss_bbox}, {"loss_gesture", e.loss_gesture},
          {"loss_presence", e.loss_presence}, {"loss_total", e.loss_total}, {"accuracy", e.accuracy},
          {"lr_last", e.lr_last}};
}

inline std::function<void(const EpochMetrics&)> epoch_logger(const StageContext& ctx, const std::string& tag) {
  return [&ctx, tag](const EpochMetrics& e) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s epoch %d: loss %.4f (bbox %.4f, gesture %.4f, presence %.4f) acc %.3f", tag.c_str(),
                  e.epoch + 1, e.loss_total, e.loss_bbox, e.loss_gesture, e.loss_presence, e.accuracy);
    ctx.say(buf);
  };
}

// ---------------------------------------------------------------- train

inline void run_train(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  Manifest m{"train", L.root};
  const WindowDataset data = load_dataset(ctx, Split::kTrain, &m);
  ctx.say("train: " + std::to_string(data.records.size()) + " windows");
  Parameters<float> params = init_parameters<float>(cfg.model(), derive_seed(cfg.seed, 0x494e4954ull));
  const auto history = train(params, data.source(), cfg.train(), nullptr, epoch_logger(ctx, "train"));
  save_parameters(L.float_model(), params);
  nlohmann::json metrics{{"windows", data.records.size()},
                         {"parameters", params.count()},
                         {"quantizable_fraction", quantizable_parameter_fraction(params)},
                         {"epochs", nlohmann::json::array()}};
  for (const auto& e : history) metrics["epochs"].push_back(to_json(e));
  eval::write_json(L.train() / "metrics.json", metrics);
  m.output(L.float_model());
  m.output(L.train() / "metrics.json");
  m.write(L.train() / "manifest.json", cfg);
}

// ---------------------------------------------------------------- qat

inline quant::QatState load_qat_state(const fs::path& path) {
  const Container c = read_container(require_artifact(path));
  require(c.header.contains("qat_state"), ErrorCode::kFormat, path.string() + " has no quantization state");
  return quant::qat_state_from_json(c.header["qat_state"]);
}

inline void run_qat(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  Manifest m{"qat", L.root};
  const WindowDataset data = load_dataset(ctx, Split::kTrain, &m);
  const WindowDataset val = load_dataset(ctx, Split::kVal, &m);
  Parameters<float> params = load_parameters(require_artifact(L.float_model()));
  m.input(L.float_model());
  const EpochMetrics float_val = evaluate_loss(params, val.source(), nullptr, static_cast<unsigned>(cfg.threads));

  quant::QatState state = quant::QatState::for_model(params.config, cfg.observer_momentum);
  calibrate(params, data.source(), state, static_cast<std::size_t>(cfg.calibration_samples),
            static_cast<unsigned>(cfg.threads));
  TrainConfig tc = cfg.train();
  tc.epochs = cfg.qat_epochs;
  tc.lr_factor = cfg.qat_lr_factor;
  tc.seed = derive_seed(cfg.seed, 0x514154ull);
  const auto history = train(params, data.source(), tc, &state, epoch_logger(ctx, "qat"));

  const FakeQuant<float> fq = quant::make_fake_quant(params, state);
  const EpochMetrics qat_val = evaluate_loss(params, val.source(), &fq, static_cast<unsigned>(cfg.threads));
  const quant::QuantizedModel qm = quant::quantize_model(params, state);

  // Integer path against fake quantization on the validation windows.
  const Topology topo(params.config);
  const SampleSource vs = val.source();
  std::vector<int> agree(vs.size, 0);
  std::vector<double> dev(vs.size, 0.0);
  parallel_for(vs.size, static_cast<unsigned>(cfg.threads), [&](std::size_t i) {
    std::vector<float> x;
    Target t;
    vs.get(i, x, t);
    Trace<float> tr;
    quant::IntegerWorkspace ws;
    const auto a = forward(params, topo, x.data(), ForwardOptions{}, tr, &fq);
    const auto b = quant::integer_forward(qm, topo, x.data(), ws, true);
    agree[i] = argmax_class(a.class_probs) == argmax_class(b.class_probs);
    for (int c = 0; c < kNumClasses; ++c) dev[i] = std::max(dev[i], std::abs(a.class_probs[c] - b.class_probs[c]));
  });
  double agreement = 0, max_dev = 0;
  for (std::size_t i = 0; i < vs.size; ++i) {
    agreement += agree[i];
    max_dev = std::max(max_dev, dev[i]);
  }
  agreement /= static_cast<double>(vs.size);

  save_parameters(L.qat_model(), params, {{"kind", "qat"}, {"qat_state", quant::to_json(state)}});
  quant::save_quantized(L.int8_model(), qm);
  nlohmann::json metrics{{"float_val_loss", float_val.loss_total},
                         {"qat_val_loss", qat_val.loss_total},
                         {"float_val_accuracy", float_val.accuracy},
                         {"qat_val_accuracy", qat_val.accuracy},
                         {"int8_vs_fake_quant_argmax_agreement", agreement},
                         {"int8_vs_fake_quant_max_prob_deviation", max_dev},
                         {"epochs", nlohmann::json::array()}};
  for (const auto& e : history) metrics["epochs"].push_back(to_json(e));
  eval::write_json(L.qat() / "metrics.json", metrics);
  ctx.say("qat: int8 vs fake-quant argmax agreement " + std::to_string(agreement));
  for (const auto& p : {L.qat_model(), L.int8_model(), L.qat() / "metrics.json"}) m.output(p);
  m.write(L.qat() / "manifest.json", cfg);
}

// ---------------------------------------------------------------- finetune

inline void run_finetune(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  Manifest m{"finetune", L.root};
  const WindowDataset original = load_dataset(ctx, Split::kTrain, &m);
  const WindowDataset rotated = load_dataset(ctx, Split::kTrainRotated, &m);
  Parameters<float> params = load_parameters(require_artifact(L.float_model()));
  m.input(L.float_model());
  const unsigned threads = static_cast<unsigned>(cfg.threads);
  const EpochMetrics before = evaluate_loss(params, original.source(), nullptr, threads);

  TrainConfig tc = cfg.train();
  tc.epochs = cfg.finetune_epochs;
  tc.lr_factor = cfg.finetune_lr_factor;
  tc.seed = derive_seed(cfg.seed, 0x46494e45ull);
  const auto history = finetune(params, concat_sources({original.source(), rotated.source()}), tc,
                                epoch_logger(ctx, "finetune"));
  const EpochMetrics after = evaluate_loss(params, original.source(), nullptr, threads);
  save_parameters(L.finetuned_model(), params, {{"kind", "finetuned"}});
  nlohmann::json metrics{{"train_accuracy_before", before.accuracy},
                         {"train_accuracy_after", after.accuracy},
                         {"rotated_windows", rotated.records.size()},
                         {"epochs", nlohmann::json::array()}};
  for (const auto& e : history) metrics["epochs"].push_back(to_json(e));
  eval::write_json(L.finetune() / "metrics.json", metrics);
  m.output(L.finetuned_model());
  m.output(L.finetune() / "metrics.json");
  m.write(L.finetune() / "manifest.json", cfg);
}

// ---------------------------------------------------------------- models for evaluation

inline const std::vector<std::string>& model_kinds() {
  static const std::vector<std::string> kinds{"float", "qat", "int8", "finetuned"};
  return kinds;
}

/// Produces independent classifiers (one per worker) for a stored model.
struct ModelHandle {
  std::string kind;
  fs::path path;
  std::function<eval::Classifier()> make;
  ModelConfig config;
};

inline ModelHandle open_model(const Layout& L, const std::string& kind) {
  ModelHandle h;
  h.kind = kind;
  if (kind == "float" || kind == "finetuned") {
    h.path = kind == "float" ? L.float_model() : L.finetuned_model();
    auto params = std::make_shared<Parameters<float>>(load_parameters(require_artifact(h.path)));
    h.config = params->config;
    h.make = [params] {
      auto topo = std::make_shared<Topology>(params->config);
      auto tr = std::make_shared<Trace<float>>();
      return eval::Classifier([params, topo, tr](const float* x) {
        return forward(*params, *topo, x, ForwardOptions{}, *tr).class_probs;
      });
    };
  } else if (kind == "qat") {
    h.path = L.qat_model();
    auto params = std::make_shared<Parameters<float>>(load_parameters(require_artifact(h.path)));
    auto fq = std::make_shared<FakeQuant<float>>(quant::make_fake_quant(*params, load_qat_state(h.path)));
    h.config = params->config;
    h.make = [params, fq] {
      auto topo = std::make_shared<Topology>(params->config);
      auto tr = std::make_shared<Trace<float>>();
      return eval::Classifier([params, fq, topo, tr](const float* x) {
        return forward(*params, *topo, x, ForwardOptions{}, *tr, fq.get()).class_probs;
      });
    };
  } else if (kind == "int8") {
    h.path = L.int8_model();
    auto qm = std::make_shared<quant::QuantizedModel>(quant::load_quantized(require_artifact(h.path)));
    h.config = qm->float_params.config;
    h.make = [qm] {
      auto topo = std::make_shared<Topology>(qm->float_params.config);
      auto ws = std::make_shared<quant::IntegerWorkspace>();
      return eval::Classifier([qm, topo, ws](const float* x) {
        return quant::integer_forward(*qm, *topo, x, *ws).class_probs;
      });
    };
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown model kind '" + kind + "' (float, qat, int8, finetuned)");
  }
  return h;
}

// ---------------------------------------------------------------- evaluate

struct TrialEvaluation {
  eval::MetricsReport report;
  std::vector<std::vector<eval::PredictionEvent>> predictions;  // per unit
};

inline TrialEvaluation evaluate_trials(const StageContext& ctx, const ModelHandle& model, bool rotated,
                                       Manifest* m = nullptr) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  const int units = trial_unit_count(cfg);
  TrialEvaluation out;
  out.predictions.resize(units);
  std::vector<eval::UnitScore> scores(units);
  parallel_for(static_cast<std::size_t>(units), static_cast<unsigned>(cfg.threads), [&](std::size_t u) {
    const EventStream events = read_evt2(require_artifact(L.unit_events(rotated, static_cast<int>(u))));
    const auto trials =
        trials_from_json(read_json_file(L.unit_trials(rotated, static_cast<int>(u))).at("trials"));
    const eval::Classifier classify = model.make();
    out.predictions[u] = eval::sliding_inference(events, classify, cfg.window(), model.config.input_planes,
                                                 cfg.softmax_threshold,
                                                 static_cast<Nanos>(cfg.debounce_ms) * kNsPerMs);
    scores[u] = eval::match_and_score(out.predictions[u], trials);
  });
  if (m)
    for (int u = 0; u < units; ++u) {
      m->input(L.unit_events(rotated, u));
      m->input(L.unit_trials(rotated, u));
    }
  out.report = eval::aggregate_units(scores);
  return out;
}

inline eval::ConfusionMatrix evaluate_confusion(const StageContext& ctx, const ModelHandle& model,
                                                const WindowDataset& val) {
  const SampleSource vs = val.source();
  std::vector<GestureClass> predicted(vs.size), labels(vs.size);
  const unsigned threads = static_cast<unsigned>(ctx.cfg.threads);
  const std::size_t blocks = std::max<std::size_t>(1, threads);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const eval::Classifier classify = model.make();
    std::vector<float> x;
    Target t;
    for (std::size_t i = b * vs.size / blocks; i < (b + 1) * vs.size / blocks; ++i) {
      vs.get(i, x, t);
      predicted[i] = class_from_index(argmax_class(classify(x.data())));
      labels[i] = t.gesture;
    }
  });
  return eval::confusion_matrix(predicted, labels);
}

inline nlohmann::json predictions_json(const std::vector<std::vector<eval::PredictionEvent>>& per_unit) {
  nlohmann::json a = nlohmann::json::array();
  for (std::size_t u = 0; u < per_unit.size(); ++u)
    for (const auto& p : per_unit[u])
      a.push_back({{"unit", u}, {"class", std::string(class_name(p.gesture))}, {"time_ns", p.time}, {"confidence", p.confidence}});
  return a;
}

inline nlohmann::json run_evaluate(const StageContext& ctx, const std::string& kind) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  const fs::path dir = L.evaluate(kind);
  Manifest m{"evaluate", L.root};
  const ModelHandle model = open_model(L, kind);
  m.input(model.path);
  require(model.config.input_planes == cfg.input_planes, ErrorCode::kConfig,
          "model input planes differ from model.input_planes in the config");
  const WindowDataset val = load_dataset(ctx, Split::kVal, &m);
  const eval::ConfusionMatrix cm = evaluate_confusion(ctx, model, val);
  const TrialEvaluation trials = evaluate_trials(ctx, model, false, &m);
  const TrialEvaluation rotated = evaluate_trials(ctx, model, true, &m);

  const nlohmann::json report{{"model", kind},
                              {"softmax_threshold", cfg.softmax_threshold},
                              {"match_window_ms", cfg.match_window_ms},
                              {"debounce_ms", cfg.debounce_ms},
                              {"trials", eval::to_json(trials.report)},
                              {"trials_rotated", eval::to_json(rotated.report)},
                              {"confusion", eval::to_json(cm)}};
  eval::write_json(dir / "report.json", report);
  write_text_file(dir / "per_class.csv", eval::metrics_csv(trials.report));
  write_text_file(dir / "per_class_rotated.csv", eval::metrics_csv(rotated.report));
  write_text_file(dir / "confusion.csv", eval::confusion_csv(cm));
  write_text_file(dir / "f1_plot.csv", eval::f1_plot_csv(trials.report));
  eval::write_json(dir / "predictions.json", predictions_json(trials.predictions));
  for (const char* f : {"report.json", "per_class.csv", "per_class_rotated.csv", "confusion.csv", "f1_plot.csv",
                        "predictions.json"})
    m.output(dir / f);
  m.write(dir / "manifest.json", cfg);
  char buf[200];
  std::snprintf(buf, sizeof buf, "evaluate %s: mean F1 %.3f, median F1 %.3f, rotated mean F1 %.3f, avg precision %.3f",
                kind.c_str(), trials.report.mean_f1, trials.report.median_f1, rotated.report.mean_f1,
                cm.average_precision());
  ctx.say(buf);
  return report;
}

// ---------------------------------------------------------------- bench

inline nlohmann::json run_bench(const StageContext& ctx, const std::vector<std::string>& kinds = {"float", "int8"}) {
  const auto& cfg = ctx.cfg;
  const Layout& L = ctx.layout;
  const WindowDataset val = load_dataset(ctx, Split::kVal);
  const SampleSource vs = val.source();
  std::vector<std::vector<float>> inputs(std::min<std::size_t>(32, vs.size));
  Target t;
  for (std::size_t i = 0; i < inputs.size(); ++i) vs.get(i * vs.size / inputs.size(), inputs[i], t);
  nlohmann::json out{{"iterations", cfg.bench_iterations}, {"warmup", eval::kBenchWarmup}, {"paths", nlohmann::json::object()}};
  for (const auto& kind : kinds) {
    const ModelHandle model = open_model(L, kind);
    const eval::Classifier classify = model.make();
    volatile double sink = 0;
    const auto stats = eval::bench_latency([&](int i) { sink = sink + classify(inputs[i % inputs.size()].data())[0]; },
                                           cfg.bench_iterations);
    out["paths"][kind] = eval::to_json(stats);
    char buf[160];
    std::snprintf(buf, sizeof buf, "bench %s: mean %.3f ms, p50 %.3f ms, p99 %.3f ms", kind.c_str(), stats.mean_ms,
                  stats.p50_ms, stats.p99_ms);
    ctx.say(buf);
  }
  eval::write_json(L.bench() / "latency.json", out);
  return out;
}

// ---------------------------------------------------------------- report

/// Collects every available evaluation and benchmark into one JSON and one CSV table.
inline nlohmann::json run_report(const StageContext& ctx) {
  const Layout& L = ctx.layout;
  nlohmann::json summary{{"models", nlohmann::json::object()}};
  std::string csv = "model,mean_f1,median_f1,rs_f1,ls_f1,cp_f1,rotated_mean_f1,average_precision\n";
  int found = 0;
  for (const auto& kind : model_kinds()) {
    const fs::path p = L.evaluate(kind) / "report.json";
    if (!fs::exists(p)) continue;
    ++found;
    const nlohmann::json r = read_json_file(p);
    const auto& tr = r.at("trials");
    const nlohmann::json row{{"mean_f1", tr.at("mean_f1")},
                             {"median_f1", tr.at("median_f1")},
                             {"RS", tr.at("groups").at("RS").at("f1")},
                             {"LS", tr.at("groups").at("LS").at("f1")},
                             {"CP", tr.at("groups").at("CP").at("f1")},
                             {"rotated_mean_f1", r.at("trials_rotated").at("mean_f1")},
                             {"average_precision", r.at("confusion").at("average_precision")}};
    summary["models"][kind] = row;
    csv += kind;
    for (const char* k : {"mean_f1", "median_f1", "RS", "LS", "CP", "rotated_mean_f1", "average_precision"})
      csv += "," + eval::detail::fixed(row.at(k).get<double>());
    csv += "\n";
  }
  require(found > 0, ErrorCode::kMissingArtifact, "no evaluation reports found; run evaluate first");
  if (fs::exists(L.bench() / "latency.json")) summary["latency"] = read_json_file(L.bench() / "latency.json");
  eval::write_json(L.report() / "summary.json", summary);
  write_text_file(L.report() / "summary.csv", csv);
  ctx.say("report: " + (L.report() / "summary.json").string());
  return summary;
}

}  // namespace helios::pipeline
