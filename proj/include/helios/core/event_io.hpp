#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "helios/core/event.hpp"

namespace helios {

// EVT2 binary layout, little-endian:
//   header (16 bytes): "EVT2" | u16 version | u16 width | u16 height | u48 duration_ns
//   records (13 bytes each, packed): u64 t | u16 x | u16 y | u8 polarity
inline constexpr std::uint16_t kEvt2Version = 1;
inline constexpr std::size_t kEvt2HeaderBytes = 16;
inline constexpr std::size_t kEvt2RecordBytes = 13;

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_evt2(const EventStream& s) {
  require(s.width > 0 && s.width <= 0xFFFF && s.height > 0 && s.height <= 0xFFFF,
          ErrorCode::kFormat, "sensor dimensions do not fit EVT2");
  require(s.duration < (1ULL << 48), ErrorCode::kFormat, "duration does not fit EVT2");
  std::vector<std::uint8_t> out;
  out.reserve(kEvt2HeaderBytes + kEvt2RecordBytes * s.events.size());
  out.insert(out.end(), {'E', 'V', 'T', '2'});
  detail::put_le(out, kEvt2Version, 2);
  detail::put_le(out, static_cast<std::uint64_t>(s.width), 2);
  detail::put_le(out, static_cast<std::uint64_t>(s.height), 2);
  detail::put_le(out, s.duration, 6);
  for (const Event& e : s.events) {
    detail::put_le(out, e.t, 8);
    detail::put_le(out, e.x, 2);
    detail::put_le(out, e.y, 2);
    out.push_back(e.polarity);
  }
  return out;
}

inline EventStream decode_evt2(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= kEvt2HeaderBytes, ErrorCode::kFormat, "EVT2 file shorter than header");
  require(std::memcmp(bytes.data(), "EVT2", 4) == 0, ErrorCode::kFormat, "bad EVT2 magic");
  const auto version = detail::get_le(bytes.data() + 4, 2);
  require(version == kEvt2Version, ErrorCode::kFormat,
          "unsupported EVT2 version " + std::to_string(version));
  require((bytes.size() - kEvt2HeaderBytes) % kEvt2RecordBytes == 0, ErrorCode::kFormat,
          "EVT2 payload is not a whole number of records");
  EventStream s;
  s.width = static_cast<int>(detail::get_le(bytes.data() + 6, 2));
  s.height = static_cast<int>(detail::get_le(bytes.data() + 8, 2));
  s.duration = detail::get_le(bytes.data() + 10, 6);
  const std::size_t n = (bytes.size() - kEvt2HeaderBytes) / kEvt2RecordBytes;
  s.events.resize(n);
  const std::uint8_t* p = bytes.data() + kEvt2HeaderBytes;
  for (std::size_t i = 0; i < n; ++i, p += kEvt2RecordBytes) {
    Event& e = s.events[i];
    e.t = detail::get_le(p, 8);
    e.x = static_cast<std::uint16_t>(detail::get_le(p + 8, 2));
    e.y = static_cast<std::uint16_t>(detail::get_le(p + 10, 2));
    e.polarity = p[12];
  }
  validate(s);
  return s;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

inline void write_evt2(const std::filesystem::path& path, const EventStream& s) {
  write_file_bytes(path, encode_evt2(s));
}

inline EventStream read_evt2(const std::filesystem::path& path) {
  return decode_evt2(read_file_bytes(path));
}

}  // namespace helios
