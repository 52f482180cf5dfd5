#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "helios/quant/quant_io.hpp"
#include "quant_check.hpp"

using namespace helios;
using namespace helios::quant;

TEST(WeightQuant, HandTrace) {
  const std::vector<float> w{-1.0f, 0.5f, 1.0f};
  const auto q = quantize_weights(w.data(), 1, 3);
  EXPECT_DOUBLE_EQ(q.scales[0], 1.0 / 127);
  EXPECT_EQ(q.q, (std::vector<std::int8_t>{-127, 64, 127}));
  EXPECT_EQ(WeightQuant::zero_point, 0);
}

TEST(WeightQuant, ZeroChannel) {
  const std::vector<float> w{0, 0, 0, 0.25f, -0.5f, 0};
  const auto q = quantize_weights(w.data(), 2, 3);
  EXPECT_EQ(q.scales[0], 1.0);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(q.q[i], 0);
}

TEST(WeightQuant, RoundTripWithinHalfScale) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const int ch = 1 + t % 7, per = 1 + t * 3 % 40;
    std::vector<double> w(static_cast<std::size_t>(ch) * per);
    for (auto& v : w) v = uniform(rng, -3, 3);
    const auto q = quantize_weights(w.data(), ch, per);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LE(std::abs(q.dequantize(i) - w[i]), q.scales[i / per] / 2 + 1e-15);
  }
}

TEST(WeightQuant, RejectsNonFinite) {
  const std::vector<float> w{1.0f, NAN};
  EXPECT_THROW(quantize_weights(w.data(), 1, 2), Error);
}

TEST(ActivationQuant, ZeroMapsToZeroPointAndSaturates) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const double lo = uniform(rng, -5, 3), hi = lo + uniform(rng, 0.01, 6);
    const auto aq = activation_quant_from_range(lo, hi);
    EXPECT_GE(aq.zero_point, 0);
    EXPECT_LE(aq.zero_point, 255);
    EXPECT_EQ(quantize_activation(0.0, aq), aq.zero_point);
    EXPECT_EQ(dequantize_activation(quantize_activation(0.0, aq), aq), 0.0);
    EXPECT_EQ(quantize_activation(1e9, aq), 255);
    EXPECT_EQ(quantize_activation(-1e9, aq), 0);
  }
}

TEST(ActivationQuant, InRangeErrorWithinHalfScale) {
  const auto aq = activation_quant_from_range(0.0, 3.0);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = uniform(rng, 0, 3);
    EXPECT_LE(std::abs(dequantize_activation(quantize_activation(a, aq), aq) - a), aq.scale / 2 + 1e-12);
  }
}

TEST(ActivationQuant, RejectsBadScale) {
  EXPECT_THROW(quantize_activation(1.0, ActivationQuant{0.0, 0}), Error);
}

TEST(Observer, ConstantStreamConvergesAndIncludesZero) {
  for (double v : {2.5, -1.5}) {
    ActivationObserver o;
    for (int i = 0; i < 2000; ++i) o.observe(v, v, 0.99);
    const auto aq = o.quant();
    const double lo = std::min(0.0, v), hi = std::max(0.0, v);
    EXPECT_NEAR(aq.scale, (hi - lo) / 255, 1e-9);
    EXPECT_EQ(quantize_activation(0.0, aq), aq.zero_point);
  }
}

TEST(Observer, FirstObservationInitializes) {
  ActivationObserver o;
  o.observe(-1, 4, 0.99);
  EXPECT_EQ(o.min, -1);
  EXPECT_EQ(o.max, 4);
  o.observe(0, 0, 0.5);
  EXPECT_EQ(o.min, -0.5);
  EXPECT_EQ(o.max, 2);
}

TEST(FakeQuant, StraightThroughMask) {
  const auto aq = activation_quant_from_range(0.0, 1.0);
  bool pass = false;
  fake_quant_value(0.5, aq, &pass);
  EXPECT_TRUE(pass);
  fake_quant_value(2.0, aq, &pass);
  EXPECT_FALSE(pass);
}

TEST(FakeQuant, DisabledEqualsFloatForward) {
  ModelConfig cfg;
  const Topology topo(cfg);
  const auto p = init_parameters<float>(cfg, 4);
  Rng rng(5);
  const auto x = quant_check::sparse_input(rng, cfg);
  FakeQuant<float> off;  // enabled = false
  Trace<float> a, b;
  EXPECT_EQ(forward(p, topo, x.data(), ForwardOptions{}, a).class_probs,
            forward(p, topo, x.data(), ForwardOptions{}, b, &off).class_probs);
}

TEST(FakeQuant, UncalibratedStateRejected) {
  ModelConfig cfg;
  const auto p = init_parameters<float>(cfg, 4);
  EXPECT_THROW(make_fake_quant(p, QatState::for_model(cfg)), Error);
}

TEST(FixedPoint, MatchesRealMultiplier) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double m = std::exp(uniform(rng, -12, 0));
    const auto f = FixedPointMultiplier::from_real(m);
    EXPECT_NEAR(f.real(), m, m * 1e-9);
    const std::int32_t acc = static_cast<std::int32_t>(uniform(rng, -1e6, 1e6));
    EXPECT_LE(std::abs(static_cast<double>(f.apply(acc)) - acc * f.real()), 0.5 + 1e-9);
  }
  // Exact halves round to even.
  const auto half = FixedPointMultiplier::from_real(0.5);
  EXPECT_EQ(half.apply(3), 2);
  EXPECT_EQ(half.apply(5), 2);
  EXPECT_EQ(half.apply(-3), -2);
}

namespace {

QuantizedLayer one_by_one_conv(const std::vector<float>& w, int in_c, int out_c, int h, int wd) {
  QuantizedLayer q;
  q.name = "test.conv";
  q.kind = LayerKind::kConv;
  q.conv = {in_c, out_c, 1, 1, 0, h, wd};
  q.in = in_c;
  q.out = out_c;
  q.weights = quantize_weights(w.data(), out_c, in_c);
  prepare_kernels(q);
  q.input = ActivationQuant{0.1, 0};
  q.output = ActivationQuant{0.1, 0};
  q.bias.assign(out_c, 0);
  for (int c = 0; c < out_c; ++c)
    q.multipliers.push_back(FixedPointMultiplier::from_real(q.weights.scales[c] * q.input.scale / q.output.scale));
  return q;
}

}  // namespace

TEST(IntegerLayer, OneByOneConvHandTrace) {
  // Two input channels, identity-like 2x2 weights on a 3x3 image.
  const auto q = one_by_one_conv({1.0f, 0.0f, 0.5f, 1.0f}, 2, 2, 3, 3);
  std::vector<std::int16_t> x(18);
  for (int i = 0; i < 9; ++i) x[i] = static_cast<std::int16_t>(i + 1), x[9 + i] = static_cast<std::int16_t>(10 * (i % 3));
  IntegerWorkspace ws;
  std::vector<std::uint8_t> out(18);
  for (bool checked : {false, true}) {
    run_quantized_layer(q, x.data(), checked, ws, out.data(), nullptr);
    for (int p = 0; p < 9; ++p) {
      EXPECT_EQ(ws.accumulators[p], 127 * x[p]);                        // channel 0: w = [127, 0]
      EXPECT_EQ(ws.accumulators[9 + p], 64 * x[p] + 127 * x[9 + p]);    // channel 1: w = [64, 127]
    }
  }
}

TEST(IntegerLayer, ZeroInputGivesBiasAccumulators) {
  auto q = one_by_one_conv({0.3f, -0.7f, 0.2f, 0.9f, -0.1f, 0.4f}, 2, 3, 4, 5);
  q.bias = {17, -250, 4096};
  q.kind = LayerKind::kConv;
  q.conv = {2, 3, 3, 1, 1, 4, 5};
  q.in = 18;
  q.weights = quantize_weights(std::vector<float>(54, 0.25f).data(), 3, 18);
  prepare_kernels(q);
  std::vector<std::int16_t> x(2 * 4 * 5, 0);
  IntegerWorkspace ws;
  std::vector<std::uint8_t> out(3 * 20);
  run_quantized_layer(q, x.data(), false, ws, out.data(), nullptr);
  for (int c = 0; c < 3; ++c)
    for (int p = 0; p < 20; ++p) EXPECT_EQ(ws.accumulators[c * 20 + p], q.bias[c]);
}

TEST(IntegerLayer, CheckedModeReportsOverflow) {
  QuantizedLayer q;
  q.name = "stage2.dense";
  q.kind = LayerKind::kDense;
  q.in = 70000;
  q.out = 1;
  q.weights = quantize_weights(std::vector<float>(70000, 1.0f).data(), 1, 70000);
  prepare_kernels(q);
  q.bias = {0};
  q.input = ActivationQuant{1.0, 0};
  q.requantize = false;
  std::vector<std::int16_t> x(70000, 255);
  IntegerWorkspace ws;
  float out = 0;
  try {
    run_quantized_layer(q, x.data(), true, ws, nullptr, &out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverflow);
    EXPECT_NE(std::string(e.what()).find("stage2.dense"), std::string::npos);
  }
}

TEST(IntegerModel, AgreesWithFakeQuant) {
  const auto a = quant_check::integer_vs_fake_quant(ModelConfig{}, 200, 7);
  EXPECT_GE(a.fraction(), 0.99);
  EXPECT_LE(a.max_prob_deviation, 1e-2);
}

TEST(IntegerModel, WeightZeroPointsAllZeroAndContainerRoundTrip) {
  ModelConfig cfg;
  const auto p = init_parameters<float>(cfg, 8);
  Rng rng(9);
  auto xs = std::make_shared<std::vector<std::vector<float>>>();
  for (int i = 0; i < 16; ++i) xs->push_back(quant_check::sparse_input(rng, cfg));
  SampleSource src{xs->size(), [xs](std::size_t i, std::vector<float>& in, Target& t) {
                     in = (*xs)[i];
                     t = Target{};
                   }};
  auto st = QatState::for_model(cfg);
  calibrate(p, src, st, 16);
  const auto qm = quantize_model(p, st);
  const auto c = quantized_container(qm);
  for (const auto& rec : c.header.at("quantization")) EXPECT_EQ(rec.at("weight_zero_point"), 0);
  const auto path = std::filesystem::temp_directory_path() / "helios_test_int8.hlsc";
  save_quantized(path, qm);
  const auto back = load_quantized(path);
  const Topology topo(cfg);
  IntegerWorkspace w1, w2;
  for (const auto& x : *xs)
    EXPECT_EQ(integer_forward(qm, topo, x.data(), w1).class_probs, integer_forward(back, topo, x.data(), w2).class_probs);
  std::filesystem::remove(path);
  const auto state = qat_state_from_json(to_json(st));
  for (std::size_t i = 0; i < st.observers.size(); ++i) {
    EXPECT_EQ(state.observers[i].min, st.observers[i].min);
    EXPECT_EQ(state.observers[i].max, st.observers[i].max);
  }
}
