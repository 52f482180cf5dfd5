#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"
#include "helios/model/adam.hpp"
#include "helios/model/container.hpp"
#include "helios/model/train.hpp"

using namespace helios;

namespace {

constexpr double kGradTol = 1e-3;

ModelConfig tiny_config() {
  ModelConfig c;
  c.width = c.height = 16;
  c.crop_res = 8;
  c.stage2_dense = 16;
  c.stage4_dense = 16;
  c.stage2_convs = {{4, 3, 2}, {8, 3, 1}};
  c.stage4_convs = {{4, 3, 2}, {8, 3, 1}};
  return c;
}

// A few fixed random inputs with distinct labels, for training tests.
SampleSource toy_source(const ModelConfig& cfg, int n, std::uint64_t seed) {
  auto inputs = std::make_shared<std::vector<std::vector<float>>>();
  auto targets = std::make_shared<std::vector<Target>>();
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    std::vector<float> x(static_cast<std::size_t>(cfg.input_planes) * cfg.height * cfg.width);
    for (auto& v : x) v = uniform(rng, 0, 1) > 0.7 ? static_cast<float>(uniform(rng, 0, 1)) : 0.0f;
    Target t;
    t.gesture = class_from_index(i % kNumClasses);
    t.hand_present = t.gesture != GestureClass::Untracked;
    t.bbox = {uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.6)};
    inputs->push_back(std::move(x));
    targets->push_back(t);
  }
  return {static_cast<std::size_t>(n), [inputs, targets](std::size_t i, std::vector<float>& in, Target& t) {
            in = (*inputs)[i];
            t = (*targets)[i];
          }};
}

}  // namespace

TEST(GradCheck, Conv) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(gradcheck::conv(s), kGradTol) << s;
}
TEST(GradCheck, Dense) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(gradcheck::dense(s), kGradTol) << s;
}
TEST(GradCheck, AveragePool) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(gradcheck::avgpool(s), kGradTol) << s;
}
TEST(GradCheck, CropResize) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(gradcheck::crop_resize(s), kGradTol) << s;
}
TEST(GradCheck, SoftmaxCrossEntropy) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(gradcheck::softmax_ce(s), kGradTol) << s;
}
TEST(GradCheck, PresenceHead) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(gradcheck::presence_head(s), kGradTol) << s;
}
TEST(GradCheck, FullModel) {
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LT(gradcheck::full_model(s), kGradTol) << s;
}

TEST(CropResize, FullBoxSameResolutionIsIdentity) {
  Rng rng(1);
  std::vector<double> img(2 * 12 * 12);
  for (auto& v : img) v = uniform(rng, 0, 1);
  std::vector<double> out(img.size());
  nn::crop_resize(img.data(), 2, 12, 12, nn::CropBox<double>{0.5, 0.5, 1.0}, 12, out.data());
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-6);
}

TEST(CropResize, ConstantImageGivesConstantCrop) {
  std::vector<double> img(10 * 10, 0.37), out(6 * 6);
  nn::crop_resize(img.data(), 1, 10, 10, nn::CropBox<double>{0.3, 0.6, 0.4}, 6, out.data());
  for (double v : out) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(CropResize, FullBoxEqualsBilinearResizeOfWholeInput) {
  Rng rng(2);
  std::vector<double> img(16 * 16);
  for (auto& v : img) v = uniform(rng, 0, 1);
  std::vector<double> out(8 * 8);
  nn::crop_resize(img.data(), 1, 16, 16, nn::CropBox<double>{0.5, 0.5, 1.0}, 8, out.data());
  // Half-pixel-centred 2x downscale samples exactly between four pixels.
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const double expected = (img[(2 * i) * 16 + 2 * j] + img[(2 * i) * 16 + 2 * j + 1] + img[(2 * i + 1) * 16 + 2 * j] +
                               img[(2 * i + 1) * 16 + 2 * j + 1]) / 4;
      EXPECT_NEAR(out[i * 8 + j], expected, 1e-12);
    }
}

TEST(Forward, DeterministicInInferenceMode) {
  const auto cfg = tiny_config();
  const Topology topo(cfg);
  const auto p = init_parameters<float>(cfg, 3);
  std::vector<float> zeros(static_cast<std::size_t>(2) * 16 * 16, 0.0f);
  Trace<float> a, b;
  const auto oa = forward(p, topo, zeros.data(), ForwardOptions{}, a);
  const auto ob = forward(p, topo, zeros.data(), ForwardOptions{}, b);
  EXPECT_EQ(oa.class_probs, ob.class_probs);
  EXPECT_EQ(oa.bbox, ob.bbox);
  // With zero input every conv output is relu(bias); presence follows from the biases alone.
  double sum = 0;
  for (double v : oa.class_probs) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Forward, PresenceCombination) {
  std::array<double, kNumClasses> g{};
  g.fill(0.1);
  // Full presence removes the Untracked mass and renormalizes the other nine classes.
  const auto all = combine_with_presence(g, 1.0);
  EXPECT_NEAR(all[class_index(GestureClass::Untracked)], 0.0, 1e-12);
  EXPECT_NEAR(all[class_index(GestureClass::Pinch)], 1.0 / 9, 1e-12);
  const auto half = combine_with_presence(g, 0.5);
  EXPECT_NEAR(half[class_index(GestureClass::Untracked)], 0.5 / 0.95, 1e-12);
  const auto none = combine_with_presence(g, 0.0);
  EXPECT_NEAR(none[class_index(GestureClass::Untracked)], 1.0, 1e-12);
  EXPECT_NEAR(none[class_index(GestureClass::Pinch)], 0.0, 1e-12);
}

TEST(Loss, Examples) {
  ForwardOutput out;
  out.bbox = {0.4, 0.5, 0.3};
  out.hand_presence = 0.9;
  Target t;
  t.gesture = GestureClass::Pinch;
  t.bbox = out.bbox;
  EXPECT_EQ(compute_loss(out, t).bbox, 0.0);
  EXPECT_NEAR(compute_loss(out, t).gesture, std::log(10.0), 1e-12);
  t.bbox = {0.9, 0.1, 0.9};
  t.hand_present = false;
  t.gesture = GestureClass::Untracked;
  const auto l = compute_loss(out, t);
  EXPECT_EQ(l.bbox, 0.0);
  EXPECT_NEAR(l.total, l.bbox + l.gesture, 1e-15);
  EXPECT_NEAR(l.presence, -std::log(0.1), 1e-12);
}

TEST(LrSchedule, HoldThenLinearDecayToZero) {
  LrSchedule s{5e-4, 0.3, 100};
  EXPECT_EQ(s.at(0), 5e-4);
  EXPECT_EQ(s.at(29), 5e-4);
  EXPECT_EQ(s.at(99), 0.0);
  EXPECT_NEAR(s.at(30), 5e-4, 1e-12);
  for (int i = 31; i < 100; ++i) EXPECT_LT(s.at(i), s.at(i - 1));
  EXPECT_THROW(s.at(100), Error);
}

TEST(Train, OverfitsOneBatch) {
  const auto cfg = tiny_config();
  auto p = init_parameters<float>(cfg, 4);
  auto model_cfg = cfg;
  model_cfg.dropout = 0;
  p.config = model_cfg;
  const auto data = toy_source(cfg, 8, 5);
  TrainConfig tc;
  tc.epochs = 600;
  tc.batch_size = 8;
  tc.adam.lr = 3e-3;
  tc.hold_fraction = 1.0;
  train(p, data, tc);
  EXPECT_LT(evaluate_loss(p, data).loss_total, 1e-2);
}

TEST(Train, BitIdenticalAcrossRunsAndThreads) {
  const auto cfg = tiny_config();
  const auto data = toy_source(cfg, 40, 6);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  tc.seed = 9;
  auto a = init_parameters<float>(cfg, 7), b = a, c = a;
  const auto ha = train(a, data, tc);
  const auto hb = train(b, data, tc);
  tc.threads = 3;
  train(c, data, tc);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
  EXPECT_EQ(ha.back().loss_total, hb.back().loss_total);
}

TEST(Finetune, FreezesStagesOneToThree) {
  const auto cfg = tiny_config();
  const Topology topo(cfg);
  const auto data = toy_source(cfg, 24, 8);
  auto p = init_parameters<float>(cfg, 10);
  const auto before = p;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.lr_factor = 0.1;
  finetune(p, data, tc);
  bool late_changed = false;
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    if (topo.layers[i].stage <= 3) {
      EXPECT_EQ(p.weights[i], before.weights[i]) << topo.layers[i].name;
      EXPECT_EQ(p.biases[i], before.biases[i]) << topo.layers[i].name;
    } else {
      late_changed |= p.weights[i] != before.weights[i];
    }
  }
  EXPECT_TRUE(late_changed);
}

TEST(Topology, LayerOrderAndQuantizableShare) {
  const ModelConfig cfg;
  const Topology topo(cfg);
  EXPECT_EQ(topo.layers.front().name, "stage2.conv0");
  EXPECT_EQ(topo.layers[topo.presence].name, "stage2.presence");
  EXPECT_EQ(topo.layers[topo.bbox].name, "stage3.bbox");
  EXPECT_EQ(topo.layers.back().name, "stage5.gesture");
  const auto p = init_parameters<float>(cfg, 1);
  EXPECT_GT(quantizable_parameter_fraction(p), 0.95);
}

TEST(Container, ParametersRoundTrip) {
  const auto p = init_parameters<float>(tiny_config(), 11);
  const auto path = std::filesystem::temp_directory_path() / "helios_test_params.hlsc";
  save_parameters(path, p, {{"note", "x"}});
  EXPECT_TRUE(load_parameters(path) == p);
  const auto c = read_container(path);
  EXPECT_EQ(c.header.at("version"), 1);
  EXPECT_EQ(c.header.at("note"), "x");
  std::filesystem::remove(path);
}

TEST(Container, RejectsCorruption) {
  const auto bytes = encode_container(parameters_container(init_parameters<float>(tiny_config(), 12)));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_container(bad), Error);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 5);
  EXPECT_THROW(decode_container(truncated), Error);
}

TEST(Container, RejectsUnknownVersion) {
  Container c = parameters_container(init_parameters<float>(tiny_config(), 13));
  auto bytes = encode_container(c);
  const std::string header(bytes.begin() + 8, bytes.end());
  const auto pos = header.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  bytes[8 + pos + 10] = '7';
  EXPECT_THROW(decode_container(bytes), Error);
}
