#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "helios/core/event_io.hpp"

namespace helios {

/// Writes a little-endian float32 array in NPY v1.0 layout (C order).
inline void write_npy_f32(const std::filesystem::path& path, const std::vector<float>& data,
                          const std::vector<std::size_t>& shape) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  require(count == data.size(), ErrorCode::kShape, "npy shape does not match data");
  std::string dims;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) dims += ", ";
    dims += std::to_string(shape[i]);
  }
  if (shape.size() == 1) dims += ",";
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + dims + "), }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.push_back(static_cast<std::uint8_t>(header.size() & 0xFF));
  out.push_back(static_cast<std::uint8_t>(header.size() >> 8));
  out.insert(out.end(), header.begin(), header.end());
  const auto* raw = reinterpret_cast<const std::uint8_t*>(data.data());
  out.insert(out.end(), raw, raw + data.size() * sizeof(float));
  write_file_bytes(path, out);
}

}  // namespace helios
