#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "helios/model/container.hpp"
#include "helios/quant/integer.hpp"
#include "helios/quant/quantize.hpp"

namespace helios::quant {

inline nlohmann::json to_json(const QatState& s) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : s.observers) obs.push_back({{"min", o.min}, {"max", o.max}, {"initialized", o.initialized}});
  return {{"momentum", s.momentum}, {"observers", obs}};
}

inline QatState qat_state_from_json(const nlohmann::json& j) {
  QatState s;
  try {
    s.momentum = j.at("momentum").get<double>();
    for (const auto& o : j.at("observers"))
      s.observers.push_back({o.at("min").get<double>(), o.at("max").get<double>(), o.at("initialized").get<bool>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("quantization state: ") + e.what());
  }
  return s;
}

/// Integer model container: int8 weights, int32 biases and f64 per-channel scales for stages 2
/// and 4, float tensors for the remaining layers, and per-layer quantization records in the header.
inline Container quantized_container(const QuantizedModel& m) {
  const Topology topo(m.float_params.config);
  Container c;
  c.header["kind"] = "int8";
  c.header["config"] = helios::to_json(m.float_params.config);
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerInfo& l = topo.layers[i];
    if (!l.quantizable) {
      c.tensors.push_back(NamedTensor::from(l.name + ".weight", DType::kF32, weight_shape(l), m.float_params.weights[i]));
      c.tensors.push_back(NamedTensor::from(l.name + ".bias", DType::kF32, {l.out}, m.float_params.biases[i]));
      continue;
    }
    const QuantizedLayer& q = m.layers[i];
    c.tensors.push_back(NamedTensor::from(l.name + ".weight_q", DType::kI8, weight_shape(l), q.weights.q));
    c.tensors.push_back(NamedTensor::from(l.name + ".bias_q", DType::kI32, {l.out}, q.bias));
    c.tensors.push_back(NamedTensor::from(l.name + ".weight_scale", DType::kF64, {l.out}, q.weights.scales));
    nlohmann::json mult = nlohmann::json::array();
    for (const auto& fm : q.multipliers) mult.push_back({fm.m0, fm.shift});
    records.push_back({{"layer", l.name},
                       {"weight_zero_point", WeightQuant::zero_point},
                       {"input_scale", q.input.scale},
                       {"input_zero_point", q.input.zero_point},
                       {"requantize", q.requantize},
                       {"output_scale", q.requantize ? q.output.scale : 0.0},
                       {"output_zero_point", q.requantize ? q.output.zero_point : 0},
                       {"multipliers", mult}});
  }
  c.header["quantization"] = records;
  return c;
}

inline QuantizedModel quantized_from_container(const Container& c) {
  require(c.header.value("kind", std::string()) == "int8", ErrorCode::kFormat, "container is not an int8 model");
  const ModelConfig cfg = model_config_from_json(c.header.at("config"));
  const Topology topo(cfg);
  QuantizedModel m;
  m.float_params = Parameters<float>::zeros(cfg);
  m.layers.resize(topo.layers.size());
  std::size_t r = 0;
  try {
    const auto& records = c.header.at("quantization");
    for (std::size_t i = 0; i < topo.layers.size(); ++i) {
      const LayerInfo& l = topo.layers[i];
      if (!l.quantizable) {
        m.float_params.weights[i] = c.tensor(l.name + ".weight").as<float>(DType::kF32);
        m.float_params.biases[i] = c.tensor(l.name + ".bias").as<float>(DType::kF32);
        require(m.float_params.weights[i].size() == l.weight_count(), ErrorCode::kShape, "bad shape for " + l.name);
        continue;
      }
      require(r < records.size(), ErrorCode::kFormat, "missing quantization record for " + l.name);
      const auto& rec = records[r++];
      require(rec.at("layer") == l.name, ErrorCode::kFormat, "quantization records out of order at " + l.name);
      require(rec.at("weight_zero_point") == 0, ErrorCode::kFormat, "weight zero point must be 0");
      QuantizedLayer& q = m.layers[i];
      q.name = l.name;
      q.kind = l.kind;
      q.conv = l.conv;
      q.in = l.in;
      q.out = l.out;
      q.weights.channels = l.out;
      q.weights.per_channel = l.in;
      q.weights.q = c.tensor(l.name + ".weight_q").as<std::int8_t>(DType::kI8);
      q.weights.scales = c.tensor(l.name + ".weight_scale").as<double>(DType::kF64);
      q.bias = c.tensor(l.name + ".bias_q").as<std::int32_t>(DType::kI32);
      require(q.weights.q.size() == l.weight_count() && q.weights.scales.size() == static_cast<std::size_t>(l.out) &&
                  q.bias.size() == static_cast<std::size_t>(l.out),
              ErrorCode::kShape, "bad quantized tensor shapes for " + l.name);
      q.input = {rec.at("input_scale").get<double>(), rec.at("input_zero_point").get<int>()};
      q.requantize = rec.at("requantize").get<bool>();
      if (q.requantize) {
        q.output = {rec.at("output_scale").get<double>(), rec.at("output_zero_point").get<int>()};
        for (const auto& fm : rec.at("multipliers"))
          q.multipliers.push_back({fm.at(0).get<std::int32_t>(), fm.at(1).get<int>()});
        require(q.multipliers.size() == static_cast<std::size_t>(l.out), ErrorCode::kFormat,
                "multiplier count mismatch for " + l.name);
      }
      prepare_kernels(q);
      for (std::size_t k = 0; k < q.weights.q.size(); ++k)
        m.float_params.weights[i][k] = static_cast<float>(q.weights.dequantize(k));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("quantization records: ") + e.what());
  }
  return m;
}

inline void save_quantized(const std::filesystem::path& path, const QuantizedModel& m) {
  write_container(path, quantized_container(m));
}

inline QuantizedModel load_quantized(const std::filesystem::path& path) {
  return quantized_from_container(read_container(path));
}

}  // namespace helios::quant
