#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "helios/core/event_io.hpp"
#include "helios/error.hpp"
#include "helios/model/network.hpp"
#include "json.hpp"

namespace helios {

// Parameter container, little-endian:
//   "HLSC" | u32 header_bytes | JSON header | tensor payloads back to back
// The header carries {"version", "kind", "config", "tensors": [{name, dtype, shape, offset, nbytes}], ...}.
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr char kContainerMagic[4] = {'H', 'L', 'S', 'C'};

static_assert(std::endian::native == std::endian::little, "container payloads are written in host order");

enum class DType { kF32, kF64, kI8, kI32 };

inline const char* dtype_name(DType d) {
  switch (d) {
    case DType::kF32: return "f32";
    case DType::kF64: return "f64";
    case DType::kI8: return "i8";
    case DType::kI32: return "i32";
  }
  return "?";
}

inline std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kI8: return 1;
    case DType::kI32: return 4;
  }
  return 0;
}

inline DType dtype_from_name(const std::string& s) {
  for (DType d : {DType::kF32, DType::kF64, DType::kI8, DType::kI32})
    if (s == dtype_name(d)) return d;
  fail(ErrorCode::kFormat, "unknown tensor dtype '" + s + "'");
}

struct NamedTensor {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::int64_t> shape;
  std::vector<std::uint8_t> data;

  std::size_t elements() const {
    std::size_t n = 1;
    for (auto d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }

  template <typename T>
  static NamedTensor from(std::string name, DType dtype, std::vector<std::int64_t> shape, const std::vector<T>& v) {
    require(dtype_size(dtype) == sizeof(T), ErrorCode::kInvalidArgument, "dtype does not match element type");
    NamedTensor t{std::move(name), dtype, std::move(shape), {}};
    require(t.elements() == v.size(), ErrorCode::kShape, "tensor " + t.name + " shape does not match its data");
    t.data.resize(v.size() * sizeof(T));
    if (!v.empty()) std::memcpy(t.data.data(), v.data(), t.data.size());
    return t;
  }

  template <typename T>
  std::vector<T> as(DType expected) const {
    require(dtype == expected, ErrorCode::kFormat, "tensor " + name + " has dtype " + dtype_name(dtype));
    std::vector<T> v(elements());
    require(data.size() == v.size() * sizeof(T), ErrorCode::kFormat, "tensor " + name + " payload size mismatch");
    if (!v.empty()) std::memcpy(v.data(), data.data(), data.size());
    return v;
  }
};

struct Container {
  nlohmann::json header = nlohmann::json::object();  // free-form metadata besides the tensor table
  std::vector<NamedTensor> tensors;

  const NamedTensor& tensor(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t;
    fail(ErrorCode::kFormat, "container has no tensor '" + name + "'");
  }
};

inline std::vector<std::uint8_t> encode_container(const Container& c) {
  nlohmann::json header = c.header;
  header["version"] = kContainerVersion;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    require(t.data.size() == t.elements() * dtype_size(t.dtype), ErrorCode::kShape,
            "tensor " + t.name + " payload size mismatch");
    header["tensors"].push_back(
        {{"name", t.name}, {"dtype", dtype_name(t.dtype)}, {"shape", t.shape}, {"offset", offset}, {"nbytes", t.data.size()}});
    offset += t.data.size();
  }
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kContainerMagic, kContainerMagic + 4);
  detail::put_le(out, text.size(), 4);
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& t : c.tensors) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

inline Container decode_container(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 8 && std::memcmp(bytes.data(), kContainerMagic, 4) == 0, ErrorCode::kFormat,
          "not a parameter container");
  const std::uint64_t header_bytes = detail::get_le(bytes.data() + 4, 4);
  require(8 + header_bytes <= bytes.size(), ErrorCode::kFormat, "truncated container header");
  Container c;
  try {
    c.header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_bytes));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("container header: ") + e.what());
  }
  require(c.header.contains("version"), ErrorCode::kFormat, "container header lacks a version");
  require(c.header["version"] == kContainerVersion, ErrorCode::kFormat,
          "unsupported container version " + c.header["version"].dump());
  const std::size_t base = 8 + header_bytes;
  try {
    for (const auto& e : c.header.at("tensors")) {
      NamedTensor t;
      t.name = e.at("name").get<std::string>();
      t.dtype = dtype_from_name(e.at("dtype").get<std::string>());
      t.shape = e.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto nbytes = e.at("nbytes").get<std::uint64_t>();
      require(nbytes == t.elements() * dtype_size(t.dtype), ErrorCode::kFormat, "tensor " + t.name + " size mismatch");
      require(base + offset + nbytes <= bytes.size(), ErrorCode::kFormat, "tensor " + t.name + " is truncated");
      t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(base + offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(base + offset + nbytes));
      c.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("container tensor table: ") + e.what());
  }
  c.header.erase("tensors");
  return c;
}

inline void write_container(const std::filesystem::path& path, const Container& c) {
  write_file_bytes(path, encode_container(c));
}

inline Container read_container(const std::filesystem::path& path) { return decode_container(read_file_bytes(path)); }

inline nlohmann::json to_json(const ModelConfig& cfg) {
  auto convs = [](const std::vector<ConvLayerSpec>& specs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : specs) a.push_back({{"out_channels", s.out_channels}, {"kernel", s.kernel}, {"stride", s.stride}});
    return a;
  };
  return {{"input_planes", cfg.input_planes}, {"width", cfg.width},         {"height", cfg.height},
          {"pool", cfg.pool},                 {"stage2_convs", convs(cfg.stage2_convs)},
          {"stage2_dense", cfg.stage2_dense}, {"stage4_convs", convs(cfg.stage4_convs)},
          {"stage4_dense", cfg.stage4_dense}, {"crop_res", cfg.crop_res}, {"num_classes", cfg.num_classes},
          {"dropout", cfg.dropout}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  auto convs = [](const nlohmann::json& a) {
    std::vector<ConvLayerSpec> out;
    for (const auto& s : a) out.push_back({s.at("out_channels").get<int>(), s.at("kernel").get<int>(), s.at("stride").get<int>()});
    return out;
  };
  ModelConfig cfg;
  try {
    cfg.input_planes = j.at("input_planes").get<int>();
    cfg.width = j.at("width").get<int>();
    cfg.height = j.at("height").get<int>();
    cfg.pool = j.at("pool").get<int>();
    cfg.stage2_convs = convs(j.at("stage2_convs"));
    cfg.stage2_dense = j.at("stage2_dense").get<int>();
    cfg.stage4_convs = convs(j.at("stage4_convs"));
    cfg.stage4_dense = j.at("stage4_dense").get<int>();
    cfg.crop_res = j.at("crop_res").get<int>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline std::vector<std::int64_t> weight_shape(const LayerInfo& l) {
  if (l.kind == LayerKind::kConv) return {l.out, l.conv.in_channels, l.conv.kernel, l.conv.kernel};
  return {l.out, l.in};
}

/// Float parameters as "<layer>.weight" / "<layer>.bias" tensors.
inline Container parameters_container(const Parameters<float>& p, const std::string& kind = "float") {
  const Topology topo(p.config);
  Container c;
  c.header["kind"] = kind;
  c.header["config"] = to_json(p.config);
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerInfo& l = topo.layers[i];
    c.tensors.push_back(NamedTensor::from(l.name + ".weight", DType::kF32, weight_shape(l), p.weights[i]));
    c.tensors.push_back(NamedTensor::from(l.name + ".bias", DType::kF32, {l.out}, p.biases[i]));
  }
  return c;
}

inline Parameters<float> parameters_from_container(const Container& c) {
  require(c.header.contains("config"), ErrorCode::kFormat, "container lacks a model config");
  const ModelConfig cfg = model_config_from_json(c.header["config"]);
  const Topology topo(cfg);
  Parameters<float> p = Parameters<float>::zeros(cfg);
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerInfo& l = topo.layers[i];
    const NamedTensor& w = c.tensor(l.name + ".weight");
    const NamedTensor& b = c.tensor(l.name + ".bias");
    require(w.shape == weight_shape(l) && b.shape == std::vector<std::int64_t>{l.out}, ErrorCode::kShape,
            "tensor shapes for " + l.name + " do not match the model config");
    p.weights[i] = w.as<float>(DType::kF32);
    p.biases[i] = b.as<float>(DType::kF32);
    nn::check_finite(p.weights[i].data(), p.weights[i].size(), "stored weights");
    nn::check_finite(p.biases[i].data(), p.biases[i].size(), "stored biases");
  }
  return p;
}

inline void save_parameters(const std::filesystem::path& path, const Parameters<float>& p,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  Container c = parameters_container(p);
  for (auto it = extra.begin(); it != extra.end(); ++it) c.header[it.key()] = it.value();
  write_container(path, c);
}

inline Parameters<float> load_parameters(const std::filesystem::path& path) {
  return parameters_from_container(read_container(path));
}

}  // namespace helios
