#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "helios/core/gesture_class.hpp"
#include "helios/model/crop_resize.hpp"
#include "helios/model/layers.hpp"
#include "helios/random.hpp"

namespace helios {

struct ConvLayerSpec {
  int out_channels = 8;
  int kernel = 3;
  int stride = 1;
};

/// Five-stage model: pool -> conv/dense features + presence -> float bbox + crop ->
/// conv/dense on the crop -> gesture head combined with presence.
struct ModelConfig {
  int input_planes = 2;  // 2 (single surface) or 6 (three stacked surfaces)
  int width = 64;
  int height = 64;
  int pool = 2;
  std::vector<ConvLayerSpec> stage2_convs = {{8, 3, 2}, {16, 3, 2}, {32, 3, 1}, {32, 3, 1}};
  int stage2_dense = 64;
  std::vector<ConvLayerSpec> stage4_convs = {{16, 3, 2}, {32, 3, 2}, {32, 3, 1}};
  int stage4_dense = 64;
  int crop_res = 32;
  int num_classes = kNumClasses;
  double dropout = 0.2;

  void validate() const {
    require(input_planes == 2 || input_planes == 6, ErrorCode::kConfig, "input planes must be 2 or 6");
    require(width > 0 && height > 0 && pool >= 1 && width % pool == 0 && height % pool == 0,
            ErrorCode::kConfig, "input size must be divisible by the pooling factor");
    require(num_classes == kNumClasses, ErrorCode::kConfig, "model must have 10 classes");
    require(!stage2_convs.empty() && !stage4_convs.empty(), ErrorCode::kConfig,
            "stages 2 and 4 need at least one convolution");
    require(dropout >= 0 && dropout < 1, ErrorCode::kConfig, "dropout must lie in [0, 1)");
    require(crop_res > 0, ErrorCode::kConfig, "crop resolution must be positive");
  }
};

enum class LayerKind { kConv, kDense };

struct LayerInfo {
  std::string name;
  LayerKind kind = LayerKind::kDense;
  int stage = 0;
  bool quantizable = false;
  nn::ConvGeometry conv;  // kConv only
  int in = 0;             // fan-in (dense input size, or conv patch size)
  int out = 0;

  std::size_t weight_count() const { return static_cast<std::size_t>(in) * out; }
  std::size_t input_size() const {
    return kind == LayerKind::kConv ? static_cast<std::size_t>(conv.in_channels) * conv.in_h * conv.in_w
                                    : static_cast<std::size_t>(in);
  }
  std::size_t output_size() const {
    return kind == LayerKind::kConv ? static_cast<std::size_t>(out) * conv.positions()
                                    : static_cast<std::size_t>(out);
  }
};

/// Layer table in execution order, with the index of each role.
struct Topology {
  std::vector<LayerInfo> layers;
  int s2_first = 0, s2_convs = 0, s2_dense = 0, presence = 0, bbox = 0;
  int s4_first = 0, s4_convs = 0, s4_dense = 0, gesture = 0;

  explicit Topology(const ModelConfig& cfg) {
    cfg.validate();
    auto add_convs = [&](const std::vector<ConvLayerSpec>& specs, int stage, int c, int h, int w) {
      for (std::size_t i = 0; i < specs.size(); ++i) {
        LayerInfo l;
        l.name = "stage" + std::to_string(stage) + ".conv" + std::to_string(i);
        l.kind = LayerKind::kConv;
        l.stage = stage;
        l.quantizable = true;
        l.conv = {c, specs[i].out_channels, specs[i].kernel, specs[i].stride, specs[i].kernel / 2, h, w};
        l.in = l.conv.patch();
        l.out = specs[i].out_channels;
        c = l.out;
        h = l.conv.out_h();
        w = l.conv.out_w();
        require(h >= 1 && w >= 1, ErrorCode::kConfig, "strides reduce " + l.name + " below 1 px");
        layers.push_back(l);
      }
      return static_cast<int>(layers.back().output_size());
    };
    auto add_dense = [&](std::string name, int stage, bool quantizable, int in, int out) {
      LayerInfo l;
      l.name = std::move(name);
      l.stage = stage;
      l.quantizable = quantizable;
      l.in = in;
      l.out = out;
      layers.push_back(l);
      return static_cast<int>(layers.size()) - 1;
    };
    s2_first = 0;
    s2_convs = static_cast<int>(cfg.stage2_convs.size());
    const int f2 = add_convs(cfg.stage2_convs, 2, cfg.input_planes, cfg.height / cfg.pool, cfg.width / cfg.pool);
    s2_dense = add_dense("stage2.dense", 2, true, f2, cfg.stage2_dense);
    presence = add_dense("stage2.presence", 2, false, cfg.stage2_dense, 1);
    bbox = add_dense("stage3.bbox", 3, false, cfg.stage2_dense, 3);
    s4_first = static_cast<int>(layers.size());
    s4_convs = static_cast<int>(cfg.stage4_convs.size());
    const int f4 = add_convs(cfg.stage4_convs, 4, cfg.input_planes, cfg.crop_res, cfg.crop_res);
    s4_dense = add_dense("stage4.dense", 4, true, f4, cfg.stage4_dense);
    gesture = add_dense("stage5.gesture", 5, false, cfg.stage4_dense, cfg.num_classes);
  }
};

template <typename T>
struct Parameters {
  ModelConfig config;
  std::vector<std::vector<T>> weights;  // [out][in] dense, [out][c][k][k] conv
  std::vector<std::vector<T>> biases;

  static Parameters zeros(const ModelConfig& cfg) {
    Parameters p;
    p.config = cfg;
    for (const auto& l : Topology(cfg).layers) {
      p.weights.emplace_back(l.weight_count(), T(0));
      p.biases.emplace_back(static_cast<std::size_t>(l.out), T(0));
    }
    return p;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
    return n;
  }

  template <typename U>
  Parameters<U> cast() const {
    Parameters<U> out;
    out.config = config;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      out.weights.emplace_back(weights[i].begin(), weights[i].end());
      out.biases.emplace_back(biases[i].begin(), biases[i].end());
    }
    return out;
  }

  friend bool operator==(const Parameters& a, const Parameters& b) {
    return a.weights == b.weights && a.biases == b.biases;
  }
};

/// He-uniform weights, zero biases.
template <typename T>
Parameters<T> init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  Parameters<T> p = Parameters<T>::zeros(cfg);
  const Topology topo(cfg);
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    const double limit = std::sqrt(6.0 / topo.layers[i].in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (T& w : p.weights[i]) w = static_cast<T>(dist(rng));
  }
  return p;
}

/// Share of parameters that live in the quantizable feature extractors of stages 2 and 4.
template <typename T>
double quantizable_parameter_fraction(const Parameters<T>& p) {
  const Topology topo(p.config);
  std::size_t q = 0;
  for (std::size_t i = 0; i < topo.layers.size(); ++i)
    if (topo.layers[i].stage == 2 || topo.layers[i].stage == 4)
      if (static_cast<int>(i) != topo.presence) q += p.weights[i].size() + p.biases[i].size();
  return static_cast<double>(q) / static_cast<double>(p.count());
}

/// Per-tensor asymmetric uint8 activation quantization parameters.
struct ActivationQuant {
  double scale = 1.0;
  int zero_point = 0;

  double lo() const { return (0 - zero_point) * scale; }
  double hi() const { return (255 - zero_point) * scale; }
};

/// Fake-quantization state for the forward pass: per quantizable layer, the input activation
/// quantizer and the quantize-dequantized weights. `enabled == false` is the float passthrough.
template <typename T>
struct FakeQuant {
  bool enabled = false;
  std::vector<ActivationQuant> input;      // indexed like Topology::layers
  std::vector<std::vector<T>> weights;     // empty for non-quantizable layers
};

struct ForwardOutput {
  std::array<double, 3> bbox{};  // normalized (cx, cy, side)
  double hand_presence = 0;
  std::array<double, kNumClasses> class_logits{};
  std::array<double, kNumClasses> gesture_probs{};  // stage-4 softmax alone
  std::array<double, kNumClasses> class_probs{};    // combined with hand presence
};

/// Final probabilities: hand-requiring classes scaled by presence, Untracked takes the
/// remaining mass, then renormalized.
template <typename Array>
Array combine_with_presence(const Array& gesture_probs, double presence) {
  Array out{};
  const int untracked = class_index(GestureClass::Untracked);
  double z = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    out[c] = c == untracked ? 1.0 - presence : gesture_probs[c] * presence;
    z += out[c];
  }
  for (auto& v : out) v = z > 0 ? v / z : 1.0 / kNumClasses;
  return out;
}

/// Everything backward needs from one forward pass.
template <typename T>
struct Trace {
  std::vector<T> input;
  std::vector<T> pooled;
  std::vector<std::vector<T>> layer_in;      // input seen by each layer (post fake-quant)
  std::vector<std::vector<T>> cols;          // im2col buffers of conv layers
  std::vector<std::vector<T>> layer_out;     // post-activation output of each layer
  std::vector<std::vector<std::uint8_t>> ste_pass;  // 1 where the input was inside the quant range
  std::vector<std::vector<T>> dropout_mask;  // scale factors for dense hidden layers
  std::vector<std::array<double, 2>> observed;  // raw input min/max of each quantizable layer
  T presence_logit = 0;
  std::array<T, 3> bbox_logit{};
  std::vector<T> crop;
  ForwardOutput out;
};

namespace detail {

inline double round_half_away(double v) { return std::round(v); }

template <typename T>
void fake_quant_activation(std::vector<T>& x, const ActivationQuant& q, std::vector<std::uint8_t>& pass) {
  pass.assign(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double qv = round_half_away(static_cast<double>(x[i]) / q.scale) + q.zero_point;
    if (qv < 0 || qv > 255) pass[i] = 0;
    x[i] = static_cast<T>((std::clamp(qv, 0.0, 255.0) - q.zero_point) * q.scale);
  }
}

}  // namespace detail

struct ForwardOptions {
  bool training = false;          // enables dropout
  std::uint64_t dropout_seed = 0;
};

/// Runs the model on one (planes x H x W) input. `fq` (optional) applies fake quantization to
/// the stage 2 and 4 weights and layer inputs.
template <typename T>
ForwardOutput forward(const Parameters<T>& params, const Topology& topo, const T* input,
                      const ForwardOptions& opt, Trace<T>& tr, const FakeQuant<T>* fq = nullptr) {
  const ModelConfig& cfg = params.config;
  const int P = cfg.input_planes, H = cfg.height, W = cfg.width;
  const std::size_t n_layers = topo.layers.size();
  tr.input.assign(input, input + static_cast<std::size_t>(P) * H * W);
  tr.layer_in.resize(n_layers);
  tr.cols.resize(n_layers);
  tr.layer_out.resize(n_layers);
  tr.ste_pass.resize(n_layers);
  tr.dropout_mask.resize(n_layers);
  tr.observed.assign(n_layers, {0.0, 0.0});
  const bool quant = fq && fq->enabled;
  Rng drop_rng(opt.dropout_seed);

  auto weights_of = [&](int li) -> const T* {
    return quant && topo.layers[li].quantizable ? fq->weights[li].data() : params.weights[li].data();
  };
  auto prepare_input = [&](int li, const T* src) {
    const LayerInfo& l = topo.layers[li];
    auto& in = tr.layer_in[li];
    in.assign(src, src + l.input_size());
    if (l.quantizable) {
      auto [mn, mx] = std::minmax_element(in.begin(), in.end());
      tr.observed[li] = {static_cast<double>(*mn), static_cast<double>(*mx)};
      if (quant) detail::fake_quant_activation(in, fq->input[li], tr.ste_pass[li]);
    }
  };
  auto run_conv = [&](int li, const T* src) {
    const LayerInfo& l = topo.layers[li];
    prepare_input(li, src);
    tr.cols[li].resize(static_cast<std::size_t>(l.conv.patch()) * l.conv.positions());
    nn::im2col(tr.layer_in[li].data(), l.conv, tr.cols[li].data());
    tr.layer_out[li].resize(l.output_size());
    nn::conv_forward(tr.cols[li].data(), weights_of(li), params.biases[li].data(), l.conv, tr.layer_out[li].data());
    nn::relu_inplace(tr.layer_out[li].data(), tr.layer_out[li].size());
    return tr.layer_out[li].data();
  };
  auto run_dense = [&](int li, const T* src, bool relu_dropout) {
    const LayerInfo& l = topo.layers[li];
    prepare_input(li, src);
    tr.layer_out[li].resize(l.out);
    nn::dense_forward(tr.layer_in[li].data(), weights_of(li), params.biases[li].data(), l.in, l.out,
                      tr.layer_out[li].data());
    if (relu_dropout) {
      nn::relu_inplace(tr.layer_out[li].data(), tr.layer_out[li].size());
      auto& mask = tr.dropout_mask[li];
      mask.assign(l.out, T(1));
      if (opt.training && cfg.dropout > 0) {
        std::bernoulli_distribution keep(1.0 - cfg.dropout);
        const T scale = static_cast<T>(1.0 / (1.0 - cfg.dropout));
        for (auto& m : mask) m = keep(drop_rng) ? scale : T(0);
        for (int i = 0; i < l.out; ++i) tr.layer_out[li][i] *= mask[i];
      }
    }
    return tr.layer_out[li].data();
  };

  // Stage 1
  tr.pooled.resize(static_cast<std::size_t>(P) * (H / cfg.pool) * (W / cfg.pool));
  nn::avgpool_forward(input, P, H, W, cfg.pool, tr.pooled.data());

  // Stage 2
  const T* x = tr.pooled.data();
  for (int i = 0; i < topo.s2_convs; ++i) x = run_conv(topo.s2_first + i, x);
  const T* h2 = run_dense(topo.s2_dense, x, true);
  nn::check_finite(h2, tr.layer_out[topo.s2_dense].size(), "stage 2");
  run_dense(topo.presence, h2, false);
  tr.presence_logit = tr.layer_out[topo.presence][0];
  ForwardOutput& out = tr.out;
  out.hand_presence = static_cast<double>(nn::sigmoid(tr.presence_logit));

  // Stage 3
  run_dense(topo.bbox, h2, false);
  nn::CropBox<T> box{};
  for (int i = 0; i < 3; ++i) {
    tr.bbox_logit[i] = tr.layer_out[topo.bbox][i];
    out.bbox[i] = static_cast<double>(nn::sigmoid(tr.bbox_logit[i]));
  }
  box = {static_cast<T>(out.bbox[0]), static_cast<T>(out.bbox[1]), static_cast<T>(out.bbox[2])};
  tr.crop.resize(static_cast<std::size_t>(P) * cfg.crop_res * cfg.crop_res);
  nn::crop_resize(input, P, H, W, box, cfg.crop_res, tr.crop.data());

  // Stage 4
  x = tr.crop.data();
  for (int i = 0; i < topo.s4_convs; ++i) x = run_conv(topo.s4_first + i, x);
  const T* h4 = run_dense(topo.s4_dense, x, true);
  nn::check_finite(h4, tr.layer_out[topo.s4_dense].size(), "stage 4");

  // Stage 5
  const T* logits = run_dense(topo.gesture, h4, false);
  std::array<T, kNumClasses> probs{};
  nn::softmax(logits, kNumClasses, probs.data());
  for (int c = 0; c < kNumClasses; ++c) {
    out.class_logits[c] = static_cast<double>(logits[c]);
    out.gesture_probs[c] = static_cast<double>(probs[c]);
  }
  nn::check_finite(out.class_logits.data(), out.class_logits.size(), "stage 5");
  out.class_probs = combine_with_presence(out.gesture_probs, out.hand_presence);
  return out;
}

struct Target {
  GestureClass gesture = GestureClass::Rest;
  bool hand_present = true;   // presence supervision: label != Untracked
  bool bbox_valid = true;     // bbox loss mask
  std::array<double, 3> bbox{0.5, 0.5, 0.5};
};

struct LossBreakdown {
  double bbox = 0;
  double gesture = 0;
  double presence = 0;
  double total = 0;      // bbox + gesture
  double objective = 0;  // total + presence, the quantity training minimizes
};

/// L_bbox: MSE over (cx, cy, side) when the hand is present, else 0. L_gesture: sparse
/// categorical cross-entropy on the stage-4 logits. Presence: binary cross-entropy against
/// (label != Untracked), reported separately and added only to the training objective.
inline LossBreakdown compute_loss(const ForwardOutput& out, const Target& target) {
  const int cls = encode(target.gesture);
  require(cls >= 1 && cls <= kNumClasses, ErrorCode::kInvalidArgument, "target class out of range");
  LossBreakdown l;
  if (target.hand_present && target.bbox_valid) {
    for (int i = 0; i < 3; ++i) l.bbox += (out.bbox[i] - target.bbox[i]) * (out.bbox[i] - target.bbox[i]);
    l.bbox /= 3.0;
  }
  double mx = out.class_logits[0];
  for (double v : out.class_logits) mx = std::max(mx, v);
  double lse = 0;
  for (double v : out.class_logits) lse += std::exp(v - mx);
  l.gesture = mx + std::log(lse) - out.class_logits[class_index(target.gesture)];
  const double p = std::clamp(out.hand_presence, 1e-12, 1.0 - 1e-12);
  l.presence = target.hand_present ? -std::log(p) : -std::log(1.0 - p);
  l.total = l.bbox + l.gesture;
  l.objective = l.total + l.presence;
  return l;
}

namespace detail {

template <typename T>
void apply_ste(const Trace<T>& tr, int li, const FakeQuant<T>* fq, T* dx, std::size_t n) {
  if (!fq || !fq->enabled || tr.ste_pass[li].empty()) return;
  for (std::size_t i = 0; i < n; ++i)
    if (!tr.ste_pass[li][i]) dx[i] = T(0);
}

}  // namespace detail

/// Accumulates `weight` * d(objective)/d(params) into `grads`. With `freeze_early_stages`
/// only stages 4 and 5 receive gradient.
template <typename T>
void backward(const Parameters<T>& params, const Topology& topo, const Trace<T>& tr, const Target& target,
              T weight, Parameters<T>& grads, bool freeze_early_stages = false,
              const FakeQuant<T>* fq = nullptr) {
  const ModelConfig& cfg = params.config;
  const int P = cfg.input_planes;
  const bool quant = fq && fq->enabled;
  auto weights_of = [&](int li) -> const T* {
    return quant && topo.layers[li].quantizable ? fq->weights[li].data() : params.weights[li].data();
  };
  auto dense_back = [&](int li, const T* dy, T* dx) {
    const LayerInfo& l = topo.layers[li];
    nn::dense_backward(tr.layer_in[li].data(), weights_of(li), dy, l.in, l.out, grads.weights[li].data(),
                       grads.biases[li].data(), dx);
    if (dx) detail::apply_ste(tr, li, fq, dx, l.in);
  };
  // dy is the gradient w.r.t. the post-ReLU output; overwritten.
  auto conv_back = [&](int li, std::vector<T>& dy, std::vector<T>* dx) {
    const LayerInfo& l = topo.layers[li];
    nn::relu_backward_inplace(tr.layer_out[li].data(), dy.data(), dy.size());
    std::vector<T> dcol(dx ? static_cast<std::size_t>(l.conv.patch()) * l.conv.positions() : 0);
    nn::conv_backward(tr.cols[li].data(), weights_of(li), dy.data(), l.conv, grads.weights[li].data(),
                      grads.biases[li].data(), dx ? dcol.data() : nullptr);
    if (dx) {
      dx->assign(l.input_size(), T(0));
      nn::col2im_add(dcol.data(), l.conv, dx->data());
      detail::apply_ste(tr, li, fq, dx->data(), dx->size());
    }
  };
  auto hidden_back = [&](int li, std::vector<T>& dh) {
    for (std::size_t i = 0; i < dh.size(); ++i) {
      dh[i] *= tr.dropout_mask[li][i];
      if (!(tr.layer_out[li][i] > T(0))) dh[i] = T(0);
    }
  };

  const ForwardOutput& out = tr.out;
  // Stage 5: softmax cross-entropy.
  std::vector<T> dlogits(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c)
    dlogits[c] = weight * static_cast<T>(out.gesture_probs[c] - (c == class_index(target.gesture) ? 1.0 : 0.0));
  std::vector<T> dh4(cfg.stage4_dense);
  dense_back(topo.gesture, dlogits.data(), dh4.data());

  // Stage 4
  hidden_back(topo.s4_dense, dh4);
  std::vector<T> dx(topo.layers[topo.s4_dense].in);
  dense_back(topo.s4_dense, dh4.data(), dx.data());
  for (int i = topo.s4_convs - 1; i >= 0; --i) {
    std::vector<T> dprev;
    conv_back(topo.s4_first + i, dx, (i > 0 || !freeze_early_stages) ? &dprev : nullptr);
    dx = std::move(dprev);
  }
  if (freeze_early_stages) return;
  const std::vector<T>& dcrop = dx;

  // Stage 3: bbox regression plus the gradient arriving through the crop coordinates.
  const nn::CropBox<T> box{static_cast<T>(out.bbox[0]), static_cast<T>(out.bbox[1]), static_cast<T>(out.bbox[2])};
  const auto gbox = nn::crop_resize_box_grad(tr.input.data(), P, cfg.height, cfg.width, box, cfg.crop_res, dcrop.data());
  std::array<T, 3> dbox{gbox.cx, gbox.cy, gbox.side};
  if (target.hand_present && target.bbox_valid)
    for (int i = 0; i < 3; ++i) dbox[i] += weight * static_cast<T>(2.0 * (out.bbox[i] - target.bbox[i]) / 3.0);
  std::array<T, 3> dbox_logit{};
  for (int i = 0; i < 3; ++i) dbox_logit[i] = dbox[i] * static_cast<T>(out.bbox[i] * (1.0 - out.bbox[i]));
  std::vector<T> dh2(cfg.stage2_dense, T(0)), tmp(cfg.stage2_dense);
  dense_back(topo.bbox, dbox_logit.data(), tmp.data());
  for (int i = 0; i < cfg.stage2_dense; ++i) dh2[i] += tmp[i];

  // Stage 2: presence head (binary cross-entropy on the logit) and features.
  const T dpres = weight * static_cast<T>(out.hand_presence - (target.hand_present ? 1.0 : 0.0));
  dense_back(topo.presence, &dpres, tmp.data());
  for (int i = 0; i < cfg.stage2_dense; ++i) dh2[i] += tmp[i];
  hidden_back(topo.s2_dense, dh2);
  dx.assign(topo.layers[topo.s2_dense].in, T(0));
  dense_back(topo.s2_dense, dh2.data(), dx.data());
  for (int i = topo.s2_convs - 1; i >= 0; --i) {
    std::vector<T> dprev;
    conv_back(topo.s2_first + i, dx, i > 0 ? &dprev : nullptr);
    dx = std::move(dprev);
  }
}

}  // namespace helios
