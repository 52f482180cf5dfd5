#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "helios/error.hpp"
#include "helios/model/network.hpp"

namespace helios::quant {

constexpr int kWeightQMax = 127;
constexpr int kActivationQMax = 255;

inline double round_half_away(double v) { return std::round(v); }

/// Per-output-channel symmetric int8 weights; zero point is always 0.
struct WeightQuant {
  int channels = 0;
  int per_channel = 0;
  std::vector<std::int8_t> q;
  std::vector<double> scales;
  static constexpr int zero_point = 0;

  double dequantize(std::size_t i) const { return scales[i / per_channel] * q[i]; }
};

template <typename T>
WeightQuant quantize_weights(const T* w, int channels, int per_channel) {
  require(channels > 0 && per_channel > 0, ErrorCode::kShape, "weight tensor must be non-empty");
  WeightQuant out;
  out.channels = channels;
  out.per_channel = per_channel;
  out.q.resize(static_cast<std::size_t>(channels) * per_channel);
  out.scales.resize(channels);
  for (int c = 0; c < channels; ++c) {
    const T* row = w + static_cast<std::size_t>(c) * per_channel;
    double mx = 0;
    for (int j = 0; j < per_channel; ++j) {
      require(std::isfinite(static_cast<double>(row[j])), ErrorCode::kNumeric, "non-finite weight");
      mx = std::max(mx, std::abs(static_cast<double>(row[j])));
    }
    const double scale = mx > 0 ? mx / kWeightQMax : 1.0;
    out.scales[c] = scale;
    for (int j = 0; j < per_channel; ++j) {
      const double q = std::clamp(round_half_away(static_cast<double>(row[j]) / scale), double(-kWeightQMax),
                                  double(kWeightQMax));
      out.q[static_cast<std::size_t>(c) * per_channel + j] = static_cast<std::int8_t>(q);
    }
  }
  return out;
}

inline std::uint8_t quantize_activation(double a, const ActivationQuant& aq) {
  require(aq.scale > 0, ErrorCode::kInvalidArgument, "activation scale must be positive");
  const double q = round_half_away(a / aq.scale) + aq.zero_point;
  return static_cast<std::uint8_t>(std::clamp(q, 0.0, double(kActivationQMax)));
}

inline double dequantize_activation(std::uint8_t q, const ActivationQuant& aq) {
  return (static_cast<int>(q) - aq.zero_point) * aq.scale;
}

/// Range [lo, hi] widened to contain 0; the zero point is an integer so real 0 is exact.
inline ActivationQuant activation_quant_from_range(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, ErrorCode::kNumeric, "invalid activation range");
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  ActivationQuant aq;
  aq.scale = hi > lo ? (hi - lo) / kActivationQMax : 1.0;
  aq.zero_point = static_cast<int>(std::clamp(round_half_away(-lo / aq.scale), 0.0, double(kActivationQMax)));
  return aq;
}

/// Exponential moving average of per-tensor min/max; the first observation initializes it.
struct ActivationObserver {
  double min = 0;
  double max = 0;
  bool initialized = false;

  void observe(double mn, double mx, double momentum) {
    if (!initialized) {
      min = mn;
      max = mx;
      initialized = true;
      return;
    }
    min = momentum * min + (1 - momentum) * mn;
    max = momentum * max + (1 - momentum) * mx;
  }

  ActivationQuant quant() const { return activation_quant_from_range(min, max); }
};

/// Observers for every quantizable layer input plus the resulting fake-quant configuration.
struct QatState {
  std::vector<ActivationObserver> observers;  // indexed like Topology::layers
  double momentum = 0.99;

  static QatState for_model(const ModelConfig& cfg, double momentum = 0.99) {
    QatState s;
    s.observers.resize(Topology(cfg).layers.size());
    s.momentum = momentum;
    return s;
  }

  bool calibrated(const Topology& topo) const {
    if (observers.size() != topo.layers.size()) return false;
    for (std::size_t i = 0; i < topo.layers.size(); ++i)
      if (topo.layers[i].quantizable && !observers[i].initialized) return false;
    return true;
  }

  /// Folds one batch of per-layer observed ranges (from forward traces) into the EMA.
  void observe(const Topology& topo, const std::vector<std::array<double, 2>>& ranges) {
    for (std::size_t i = 0; i < topo.layers.size(); ++i)
      if (topo.layers[i].quantizable) observers[i].observe(ranges[i][0], ranges[i][1], momentum);
  }
};

template <typename T>
std::vector<T> fake_quantize_weights(const std::vector<T>& w, int channels) {
  const int per = static_cast<int>(w.size() / channels);
  const WeightQuant wq = quantize_weights(w.data(), channels, per);
  std::vector<T> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<T>(wq.dequantize(i));
  return out;
}

/// Fake-quant state for the current parameters. Throws if any quantizable layer is uncalibrated.
template <typename T>
FakeQuant<T> make_fake_quant(const Parameters<T>& params, const QatState& state) {
  const Topology topo(params.config);
  require(state.calibrated(topo), ErrorCode::kInvalidArgument, "quantization state is not calibrated");
  FakeQuant<T> fq;
  fq.enabled = true;
  fq.input.resize(topo.layers.size());
  fq.weights.resize(topo.layers.size());
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    if (!topo.layers[i].quantizable) continue;
    fq.input[i] = state.observers[i].quant();
    fq.weights[i] = fake_quantize_weights(params.weights[i], topo.layers[i].out);
  }
  return fq;
}

/// Element-wise activation fake quantization; `pass` receives the straight-through mask.
inline double fake_quant_value(double a, const ActivationQuant& aq, bool* pass = nullptr) {
  const double q = round_half_away(a / aq.scale) + aq.zero_point;
  if (pass) *pass = q >= 0 && q <= kActivationQMax;
  return (std::clamp(q, 0.0, double(kActivationQMax)) - aq.zero_point) * aq.scale;
}

}  // namespace helios::quant
