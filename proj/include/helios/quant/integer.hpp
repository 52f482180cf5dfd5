#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "helios/error.hpp"
#include "helios/model/crop_resize.hpp"
#include "helios/model/network.hpp"
#include "helios/quant/quantize.hpp"

namespace helios::quant {

/// Real multiplier M represented as m0 * 2^-shift with m0 a Q31 value in [2^30, 2^31).
struct FixedPointMultiplier {
  std::int32_t m0 = 0;
  int shift = 31;

  static FixedPointMultiplier from_real(double m) {
    require(m > 0 && std::isfinite(m), ErrorCode::kNumeric, "requantization multiplier must be positive");
    int e = 0;
    const double f = std::frexp(m, &e);  // m = f * 2^e, f in [0.5, 1)
    std::int64_t q = static_cast<std::int64_t>(std::llround(f * 2147483648.0));
    if (q == (std::int64_t{1} << 31)) {
      q /= 2;
      ++e;
    }
    FixedPointMultiplier out{static_cast<std::int32_t>(q), 31 - e};
    require(out.shift >= 1 && out.shift <= 62, ErrorCode::kNumeric, "requantization multiplier out of range");
    return out;
  }

  double real() const { return std::ldexp(static_cast<double>(m0), -shift); }

  /// round_half_even(acc * m0 / 2^shift)
  std::int64_t apply(std::int32_t acc) const {
    const std::int64_t prod = static_cast<std::int64_t>(acc) * m0;
    const std::int64_t floor_q = prod >> shift;  // arithmetic shift: floor
    const std::int64_t rem = prod - (floor_q << shift);
    const std::int64_t half = std::int64_t{1} << (shift - 1);
    if (rem > half || (rem == half && (floor_q & 1))) return floor_q + 1;
    return floor_q;
  }
};

/// One stage-2/4 layer in integer form. Activations enter as uint8 with `input` quantization;
/// the output is either requantized into the next layer's domain (`requant` set) or
/// dequantized to float (hidden dense layers feeding float heads).
struct QuantizedLayer {
  std::string name;
  LayerKind kind = LayerKind::kDense;
  nn::ConvGeometry conv;
  int in = 0;
  int out = 0;
  WeightQuant weights;
  std::vector<std::int32_t> bias;  // scale weights.scales[c] * input.scale
  ActivationQuant input;
  bool requantize = true;
  ActivationQuant output;                        // when requantizing
  std::vector<FixedPointMultiplier> multipliers;  // per output channel
  int row_stride = 0;                             // fan-in rounded up to a multiple of 8
  std::vector<std::int16_t> w16;                  // widened weights, rows zero-padded to row_stride
};

/// Widens the int8 weights into zero-padded int16 rows for the dot kernels.
inline void prepare_kernels(QuantizedLayer& q) {
  q.row_stride = (q.in + 7) / 8 * 8;
  q.w16.assign(static_cast<std::size_t>(q.out) * q.row_stride, 0);
  for (int c = 0; c < q.out; ++c)
    std::copy_n(q.weights.q.begin() + static_cast<std::ptrdiff_t>(c) * q.in, q.in,
                q.w16.begin() + static_cast<std::ptrdiff_t>(c) * q.row_stride);
}

struct QuantizedModel {
  Parameters<float> float_params;  // stages 1, 3, 5 and the presence head run from these
  std::vector<QuantizedLayer> layers;  // indexed like Topology::layers; empty name = float layer
};

inline QuantizedModel quantize_model(const Parameters<float>& params, const QatState& state) {
  const Topology topo(params.config);
  require(state.calibrated(topo), ErrorCode::kInvalidArgument, "quantization state is not calibrated");
  QuantizedModel m;
  m.float_params = params;
  m.layers.resize(topo.layers.size());
  auto next_quantized = [&](std::size_t i) -> int {
    if (static_cast<int>(i) == topo.s2_dense || static_cast<int>(i) == topo.s4_dense) return -1;
    return static_cast<int>(i) + 1;
  };
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerInfo& l = topo.layers[i];
    if (!l.quantizable) continue;
    QuantizedLayer& q = m.layers[i];
    q.name = l.name;
    q.kind = l.kind;
    q.conv = l.conv;
    q.in = l.in;
    q.out = l.out;
    q.weights = quantize_weights(params.weights[i].data(), l.out, l.in);
    prepare_kernels(q);
    q.input = state.observers[i].quant();
    q.bias.resize(l.out);
    for (int c = 0; c < l.out; ++c) {
      const double b = round_half_away(params.biases[i][c] / (q.weights.scales[c] * q.input.scale));
      require(std::abs(b) < 2147483647.0, ErrorCode::kOverflow, "bias does not fit int32 in " + l.name);
      q.bias[c] = static_cast<std::int32_t>(b);
    }
    const int next = next_quantized(i);
    q.requantize = next >= 0;
    if (q.requantize) {
      q.output = state.observers[next].quant();
      for (int c = 0; c < l.out; ++c)
        q.multipliers.push_back(
            FixedPointMultiplier::from_real(q.weights.scales[c] * q.input.scale / q.output.scale));
    }
  }
  return m;
}

namespace detail {

inline std::int32_t dot_i16(const std::int16_t* a, const std::int16_t* b, int n) {
  std::int32_t acc = 0;
  for (int i = 0; i < n; ++i) acc += static_cast<std::int32_t>(a[i]) * static_cast<std::int32_t>(b[i]);
  return acc;
}

/// acc[c * P + p] = w[c] . x[p] for rows of length `stride` (a multiple of 8, zero padded).
/// With SSE2 four output channels share each 8-lane load of the input (pmaddwd).
inline void matmul_i16(const std::int16_t* w, int out, const std::int16_t* x, int P, int stride,
                       std::int32_t* acc) {
  int c0 = 0;
#if defined(__SSE2__)
  for (; c0 + 4 <= out; c0 += 4) {
    const std::int16_t* w0 = w + static_cast<std::size_t>(c0) * stride;
    const std::int16_t* w1 = w0 + stride;
    const std::int16_t* w2 = w1 + stride;
    const std::int16_t* w3 = w2 + stride;
    for (int p = 0; p < P; ++p) {
      const std::int16_t* xp = x + static_cast<std::size_t>(p) * stride;
      __m128i s0 = _mm_setzero_si128(), s1 = s0, s2 = s0, s3 = s0;
      for (int j = 0; j < stride; j += 8) {
        const __m128i xv = _mm_loadu_si128(reinterpret_cast<const __m128i*>(xp + j));
        s0 = _mm_add_epi32(s0, _mm_madd_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(w0 + j)), xv));
        s1 = _mm_add_epi32(s1, _mm_madd_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(w1 + j)), xv));
        s2 = _mm_add_epi32(s2, _mm_madd_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(w2 + j)), xv));
        s3 = _mm_add_epi32(s3, _mm_madd_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(w3 + j)), xv));
      }
      const __m128i t0 = _mm_add_epi32(_mm_unpacklo_epi32(s0, s1), _mm_unpackhi_epi32(s0, s1));
      const __m128i t1 = _mm_add_epi32(_mm_unpacklo_epi32(s2, s3), _mm_unpackhi_epi32(s2, s3));
      const __m128i r = _mm_add_epi32(_mm_unpacklo_epi64(t0, t1), _mm_unpackhi_epi64(t0, t1));
      alignas(16) std::int32_t lanes[4];
      _mm_store_si128(reinterpret_cast<__m128i*>(lanes), r);
      for (int k = 0; k < 4; ++k) acc[static_cast<std::size_t>(c0 + k) * P + p] = lanes[k];
    }
  }
#endif
  for (int c = c0; c < out; ++c)
    for (int p = 0; p < P; ++p)
      acc[static_cast<std::size_t>(c) * P + p] =
          dot_i16(w + static_cast<std::size_t>(c) * stride, x + static_cast<std::size_t>(p) * stride, stride);
}

inline std::int64_t dot_i64(const std::int16_t* a, const std::int16_t* b, int n) {
  std::int64_t acc = 0;
  for (int i = 0; i < n; ++i) acc += static_cast<std::int64_t>(a[i]) * b[i];
  return acc;
}

/// Quantized activations minus the zero point. Padding therefore carries the zero point.
inline void center(const std::uint8_t* q, std::size_t n, int zp, std::int16_t* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::int16_t>(static_cast<int>(q[i]) - zp);
}

/// Position-major patches: col[p * stride + j], tail of each row zeroed. `padded` is scratch
/// space for the zero-bordered input (centered activations, so 0 is the zero point).
inline void im2row(const std::int16_t* in, const nn::ConvGeometry& g, int stride, std::int16_t* col,
                   std::vector<std::int16_t>& padded) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel, J = g.patch();
  const int ph = g.in_h + 2 * g.pad, pw = g.in_w + 2 * g.pad;
  padded.assign(static_cast<std::size_t>(g.in_channels) * ph * pw, 0);
  for (int c = 0; c < g.in_channels; ++c)
    for (int y = 0; y < g.in_h; ++y)
      std::copy_n(in + (static_cast<std::size_t>(c) * g.in_h + y) * g.in_w, g.in_w,
                  padded.begin() + (static_cast<std::ptrdiff_t>(c) * ph + y + g.pad) * pw + g.pad);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      std::int16_t* row = col + static_cast<std::size_t>(oy * ow + ox) * stride;
      std::fill(row + J, row + stride, std::int16_t{0});
      for (int c = 0; c < g.in_channels; ++c)
        for (int ky = 0; ky < k; ++ky) {
          const std::int16_t* src =
              padded.data() + (static_cast<std::size_t>(c) * ph + oy * g.stride + ky) * pw + ox * g.stride;
          for (int kx = 0; kx < k; ++kx) *row++ = src[kx];
        }
    }
}

}  // namespace detail

struct IntegerWorkspace {
  std::vector<std::int16_t> centered, cols, padded;
  std::vector<std::uint8_t> act_a, act_b;
  std::vector<float> pooled, crop, h2, h4;
  std::vector<std::int32_t> accumulators;  // last layer's raw accumulators (inspection)
};

/// Runs one quantized layer on centered int16 input. Writes uint8 activations (requantized
/// layers) or float activations (hidden dense) and keeps raw accumulators in `ws`.
inline void run_quantized_layer(const QuantizedLayer& q, const std::int16_t* x, bool checked, IntegerWorkspace& ws,
                                std::uint8_t* out_q, float* out_f) {
  const bool is_conv = q.kind == LayerKind::kConv;
  const int P = is_conv ? q.conv.positions() : 1;
  const int S = q.row_stride;
  const std::int16_t* src = x;
  ws.cols.resize(static_cast<std::size_t>(P) * S);
  if (is_conv) {
    detail::im2row(x, q.conv, S, ws.cols.data(), ws.padded);
  } else {
    std::copy_n(x, q.in, ws.cols.begin());
    std::fill(ws.cols.begin() + q.in, ws.cols.end(), std::int16_t{0});
  }
  src = ws.cols.data();
  ws.accumulators.resize(static_cast<std::size_t>(q.out) * P);
  std::int32_t* acc = ws.accumulators.data();
  if (checked) {
    for (int c = 0; c < q.out; ++c)
      for (int p = 0; p < P; ++p) {
        const std::int64_t wide =
            detail::dot_i64(q.w16.data() + static_cast<std::size_t>(c) * S, src + static_cast<std::size_t>(p) * S, S) +
            q.bias[c];
        if (wide > std::numeric_limits<std::int32_t>::max() || wide < std::numeric_limits<std::int32_t>::min())
          fail(ErrorCode::kOverflow, "int32 accumulator overflow in " + q.name);
        acc[static_cast<std::size_t>(c) * P + p] = static_cast<std::int32_t>(wide);
      }
  } else {
    detail::matmul_i16(q.w16.data(), q.out, src, P, S, acc);
    for (int c = 0; c < q.out; ++c)
      for (int p = 0; p < P; ++p) acc[static_cast<std::size_t>(c) * P + p] += q.bias[c];
  }
  for (int c = 0; c < q.out; ++c)
    for (int p = 0; p < P; ++p) {
      const std::size_t o = static_cast<std::size_t>(c) * P + p;
      if (q.requantize) {
        const std::int64_t v = q.multipliers[c].apply(acc[o]) + q.output.zero_point;
        out_q[o] = static_cast<std::uint8_t>(std::clamp<std::int64_t>(v, q.output.zero_point, kActivationQMax));
      } else {
        const double real = static_cast<double>(acc[o]) * q.weights.scales[c] * q.input.scale;
        out_f[o] = static_cast<float>(std::max(real, 0.0));
      }
    }
}

/// Integer inference for stages 2 and 4; stages 1, 3 and 5 and the presence head stay float.
/// `checked` accumulates in int64 and raises kOverflow naming the layer on int32 overflow.
inline ForwardOutput integer_forward(const QuantizedModel& model, const Topology& topo, const float* input,
                                     IntegerWorkspace& ws, bool checked = false) {
  const Parameters<float>& fp = model.float_params;
  const ModelConfig& cfg = fp.config;
  const int P = cfg.input_planes, H = cfg.height, W = cfg.width;

  auto run_stage = [&](int first, int convs, int dense, const float* x_float, std::size_t n, std::vector<float>& h) {
    const QuantizedLayer& q0 = model.layers[first];
    ws.act_a.resize(n);
    for (std::size_t i = 0; i < n; ++i) ws.act_a[i] = quantize_activation(x_float[i], q0.input);
    for (int li = first; li < first + convs; ++li) {
      const QuantizedLayer& q = model.layers[li];
      ws.centered.resize(ws.act_a.size());
      detail::center(ws.act_a.data(), ws.act_a.size(), q.input.zero_point, ws.centered.data());
      ws.act_b.resize(static_cast<std::size_t>(q.out) * q.conv.positions());
      run_quantized_layer(q, ws.centered.data(), checked, ws, ws.act_b.data(), nullptr);
      std::swap(ws.act_a, ws.act_b);
    }
    const QuantizedLayer& qd = model.layers[dense];
    ws.centered.resize(ws.act_a.size());
    detail::center(ws.act_a.data(), ws.act_a.size(), qd.input.zero_point, ws.centered.data());
    h.resize(qd.out);
    run_quantized_layer(qd, ws.centered.data(), checked, ws, nullptr, h.data());
  };

  ForwardOutput out;
  ws.pooled.resize(static_cast<std::size_t>(P) * (H / cfg.pool) * (W / cfg.pool));
  nn::avgpool_forward(input, P, H, W, cfg.pool, ws.pooled.data());
  run_stage(topo.s2_first, topo.s2_convs, topo.s2_dense, ws.pooled.data(), ws.pooled.size(), ws.h2);

  float presence_logit = 0;
  nn::dense_forward(ws.h2.data(), fp.weights[topo.presence].data(), fp.biases[topo.presence].data(),
                    cfg.stage2_dense, 1, &presence_logit);
  out.hand_presence = nn::sigmoid(static_cast<double>(presence_logit));
  std::array<float, 3> bbox_logit{};
  nn::dense_forward(ws.h2.data(), fp.weights[topo.bbox].data(), fp.biases[topo.bbox].data(), cfg.stage2_dense, 3,
                    bbox_logit.data());
  for (int i = 0; i < 3; ++i) out.bbox[i] = static_cast<double>(nn::sigmoid(bbox_logit[i]));
  const nn::CropBox<float> box{static_cast<float>(out.bbox[0]), static_cast<float>(out.bbox[1]),
                               static_cast<float>(out.bbox[2])};
  ws.crop.resize(static_cast<std::size_t>(P) * cfg.crop_res * cfg.crop_res);
  nn::crop_resize(input, P, H, W, box, cfg.crop_res, ws.crop.data());

  run_stage(topo.s4_first, topo.s4_convs, topo.s4_dense, ws.crop.data(), ws.crop.size(), ws.h4);
  std::array<float, kNumClasses> logits{}, probs{};
  nn::dense_forward(ws.h4.data(), fp.weights[topo.gesture].data(), fp.biases[topo.gesture].data(),
                    cfg.stage4_dense, kNumClasses, logits.data());
  nn::softmax(logits.data(), kNumClasses, probs.data());
  for (int c = 0; c < kNumClasses; ++c) {
    out.class_logits[c] = logits[c];
    out.gesture_probs[c] = probs[c];
  }
  nn::check_finite(out.class_logits.data(), out.class_logits.size(), "integer path");
  out.class_probs = combine_with_presence(out.gesture_probs, out.hand_presence);
  return out;
}

}  // namespace helios::quant
