#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "helios/error.hpp"
#include "helios/model/adam.hpp"
#include "helios/model/network.hpp"
#include "helios/parallel.hpp"
#include "helios/quant/quantize.hpp"
#include "helios/random.hpp"

namespace helios {

/// Random-access training set. `get` must be safe to call concurrently.
struct SampleSource {
  std::size_t size = 0;
  std::function<void(std::size_t index, std::vector<float>& input, Target& target)> get;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  AdamConfig adam;
  double hold_fraction = 0.3;
  double lr_factor = 1.0;             // 0.1 for fine-tuning
  bool freeze_early_stages = false;   // fine-tuning: stages 1-3 fixed
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int group_size = 8;                 // gradient reduction unit; results do not depend on threads

  void validate() const {
    require(epochs >= 1, ErrorCode::kConfig, "epochs must be >= 1");
    require(batch_size >= 1 && group_size >= 1, ErrorCode::kConfig, "batch and group sizes must be >= 1");
    require(adam.lr > 0 && lr_factor > 0, ErrorCode::kConfig, "learning rate must be positive");
    require(hold_fraction >= 0 && hold_fraction <= 1, ErrorCode::kConfig, "hold fraction must lie in [0, 1]");
  }
};

struct EpochMetrics {
  int epoch = 0;
  double loss_bbox = 0;
  double loss_gesture = 0;
  double loss_presence = 0;
  double loss_total = 0;
  double accuracy = 0;
  double lr_last = 0;
};

inline int argmax_class(const std::array<double, kNumClasses>& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace detail {

struct Accum {
  double bbox = 0, gesture = 0, presence = 0, total = 0;
  std::size_t correct = 0, count = 0;

  void add(const LossBreakdown& l, bool ok) {
    bbox += l.bbox;
    gesture += l.gesture;
    presence += l.presence;
    total += l.total;
    correct += ok;
    ++count;
  }
  void merge(const Accum& o) {
    bbox += o.bbox;
    gesture += o.gesture;
    presence += o.presence;
    total += o.total;
    correct += o.correct;
    count += o.count;
  }
  EpochMetrics metrics(int epoch) const {
    const double n = count ? static_cast<double>(count) : 1.0;
    return {epoch, bbox / n, gesture / n, presence / n, total / n, static_cast<double>(correct) / n, 0.0};
  }
};

inline void merge_ranges(std::vector<std::array<double, 2>>& into, const std::vector<std::array<double, 2>>& r,
                         bool first) {
  if (first) {
    into = r;
    return;
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    into[i][0] = std::min(into[i][0], r[i][0]);
    into[i][1] = std::max(into[i][1], r[i][1]);
  }
}

}  // namespace detail

/// Minibatch Adam over `data`. With `qat` the forward pass fake-quantizes stages 2 and 4 and the
/// activation observers keep updating after every batch. Bit-identical for a fixed seed and
/// any thread count: samples are processed in fixed groups whose gradients are summed in order.
inline std::vector<EpochMetrics> train(Parameters<float>& params, const SampleSource& data, const TrainConfig& cfg,
                                       quant::QatState* qat = nullptr,
                                       const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  cfg.validate();
  require(data.size > 0, ErrorCode::kEmptyInput, "training set is empty");
  const Topology topo(params.config);
  const std::size_t n = data.size;
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  LrSchedule schedule{cfg.adam.lr * cfg.lr_factor, cfg.hold_fraction,
                      static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs};
  AdamState<float> adam = AdamState<float>::like(params);
  std::vector<bool> frozen(topo.layers.size(), false);
  if (cfg.freeze_early_stages)
    for (std::size_t i = 0; i < topo.layers.size(); ++i) frozen[i] = topo.layers[i].stage <= 3;

  std::vector<std::size_t> order(n);
  std::vector<EpochMetrics> history;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5348554646ull, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng() % (i + 1)]);

    detail::Accum epoch_acc;
    double lr = 0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b, ++step) {
      const std::size_t begin = b * cfg.batch_size, end = std::min(n, begin + cfg.batch_size);
      const std::size_t count = end - begin;
      const std::size_t groups = (count + cfg.group_size - 1) / cfg.group_size;
      std::optional<FakeQuant<float>> fq;
      if (qat) fq = quant::make_fake_quant(params, *qat);
      const float weight = 1.0f / static_cast<float>(count);

      std::vector<Parameters<float>> grads(groups);
      std::vector<detail::Accum> accs(groups);
      std::vector<std::vector<std::array<double, 2>>> ranges(groups);
      parallel_for(groups, cfg.threads, [&](std::size_t g) {
        grads[g] = Parameters<float>::zeros(params.config);
        Trace<float> tr;
        std::vector<float> input;
        Target target;
        const std::size_t g0 = begin + g * cfg.group_size, g1 = std::min(end, g0 + cfg.group_size);
        for (std::size_t k = g0; k < g1; ++k) {
          const std::size_t idx = order[k];
          data.get(idx, input, target);
          ForwardOptions opt{true, derive_seed(cfg.seed, static_cast<std::uint64_t>(step), idx)};
          const ForwardOutput out = forward(params, topo, input.data(), opt, tr, fq ? &*fq : nullptr);
          accs[g].add(compute_loss(out, target), argmax_class(out.class_probs) == class_index(target.gesture));
          backward(params, topo, tr, target, weight, grads[g], cfg.freeze_early_stages, fq ? &*fq : nullptr);
          detail::merge_ranges(ranges[g], tr.observed, k == g0);
        }
      });
      for (std::size_t g = 1; g < groups; ++g)
        for (std::size_t i = 0; i < grads[0].weights.size(); ++i) {
          for (std::size_t j = 0; j < grads[0].weights[i].size(); ++j) grads[0].weights[i][j] += grads[g].weights[i][j];
          for (std::size_t j = 0; j < grads[0].biases[i].size(); ++j) grads[0].biases[i][j] += grads[g].biases[i][j];
        }
      lr = schedule.at(step);
      adam_step(params, grads[0], adam, cfg.adam, lr, frozen);
      for (std::size_t g = 0; g < groups; ++g) {
        epoch_acc.merge(accs[g]);
        if (g > 0) detail::merge_ranges(ranges[0], ranges[g], false);
      }
      if (qat) qat->observe(topo, ranges[0]);
    }
    EpochMetrics m = epoch_acc.metrics(epoch);
    m.lr_last = lr;
    for (const auto& w : params.weights)
      nn::check_finite(w.data(), w.size(), "parameters after update");
    history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return history;
}

/// Rotation fine-tuning: stages 1-3 frozen, learning rate scaled by `lr_factor` (0.1 by default).
inline std::vector<EpochMetrics> finetune(Parameters<float>& params, const SampleSource& data, TrainConfig cfg,
                                          const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  cfg.freeze_early_stages = true;
  return train(params, data, cfg, nullptr, on_epoch);
}

/// Seeds the activation observers from `samples` forward passes (float weights, no dropout).
inline void calibrate(const Parameters<float>& params, const SampleSource& data, quant::QatState& state,
                      std::size_t samples, unsigned threads = 1) {
  require(data.size > 0 && samples > 0, ErrorCode::kEmptyInput, "calibration set is empty");
  const Topology topo(params.config);
  samples = std::min(samples, data.size);
  std::vector<std::vector<std::array<double, 2>>> ranges(samples);
  parallel_for(samples, threads, [&](std::size_t k) {
    Trace<float> tr;
    std::vector<float> input;
    Target target;
    data.get(k * data.size / samples, input, target);
    forward(params, topo, input.data(), ForwardOptions{}, tr);
    ranges[k] = tr.observed;
  });
  for (const auto& r : ranges) state.observe(topo, r);
}

/// Mean losses and accuracy over a dataset in inference mode.
inline EpochMetrics evaluate_loss(const Parameters<float>& params, const SampleSource& data,
                                  const FakeQuant<float>* fq = nullptr, unsigned threads = 1) {
  require(data.size > 0, ErrorCode::kEmptyInput, "evaluation set is empty");
  const Topology topo(params.config);
  std::vector<detail::Accum> accs(data.size);
  parallel_for(data.size, threads, [&](std::size_t i) {
    Trace<float> tr;
    std::vector<float> input;
    Target target;
    data.get(i, input, target);
    const ForwardOutput out = forward(params, topo, input.data(), ForwardOptions{}, tr, fq);
    accs[i].add(compute_loss(out, target), argmax_class(out.class_probs) == class_index(target.gesture));
  });
  detail::Accum total;
  for (const auto& a : accs) total.merge(a);
  return total.metrics(0);
}

}  // namespace helios
