#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "helios/core/event.hpp"
#include "helios/core/event_io.hpp"
#include "helios/image.hpp"

namespace helios {

/// HDR intensity frames (linear, non-negative, unclamped) with strictly increasing stamps.
struct FrameSequence {
  int width = 0;
  int height = 0;
  std::vector<Image> frames;
  std::vector<Nanos> timestamps;
};

inline void validate(const FrameSequence& seq) {
  require(seq.frames.size() >= 2, ErrorCode::kInvalidArgument, "frame sequence needs >= 2 frames");
  require(seq.frames.size() == seq.timestamps.size(), ErrorCode::kShape,
          "frame and timestamp counts differ");
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const Image& f = seq.frames[i];
    require(f.width == seq.width && f.height == seq.height &&
                f.pixels.size() == static_cast<std::size_t>(seq.width) * seq.height,
            ErrorCode::kShape, "frame " + std::to_string(i) + " has the wrong shape");
    if (i > 0)
      require(seq.timestamps[i] > seq.timestamps[i - 1], ErrorCode::kInvalidArgument,
              "frame timestamps must be strictly increasing");
    for (float v : f.pixels)
      require(v >= 0.0f, ErrorCode::kInvalidArgument,
              "negative intensity in frame " + std::to_string(i));
  }
}

// Frame directory: manifest.json + one raw little-endian float32 file per frame.
//   {"format": "f32le", "width": W, "height": H,
//    "frames": [{"file": "frame_00000.f32", "t_ns": 0}, ...]}
inline void write_frame_dir(const std::filesystem::path& dir, const FrameSequence& seq) {
  validate(seq);
  std::filesystem::create_directories(dir);
  nlohmann::json manifest{{"format", "f32le"}, {"width", seq.width}, {"height", seq.height}};
  manifest["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.f32", i);
    const auto& px = seq.frames[i].pixels;
    const auto* raw = reinterpret_cast<const std::uint8_t*>(px.data());
    write_file_bytes(dir / name, std::vector<std::uint8_t>(raw, raw + px.size() * sizeof(float)));
    manifest["frames"].push_back({{"file", name}, {"t_ns", seq.timestamps[i]}});
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

inline FrameSequence read_frame_dir(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  require(std::filesystem::exists(manifest_path), ErrorCode::kMissingArtifact,
          "no frame manifest at " + manifest_path.string());
  nlohmann::json manifest;
  try {
    std::ifstream(manifest_path) >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad frame manifest: ") + e.what());
  }
  FrameSequence seq;
  seq.width = manifest.at("width").get<int>();
  seq.height = manifest.at("height").get<int>();
  for (const auto& entry : manifest.at("frames")) {
    const auto bytes = read_file_bytes(dir / entry.at("file").get<std::string>());
    require(bytes.size() == sizeof(float) * seq.width * seq.height, ErrorCode::kFormat,
            "frame file has the wrong size");
    Image img(seq.width, seq.height);
    std::memcpy(img.pixels.data(), bytes.data(), bytes.size());
    seq.frames.push_back(std::move(img));
    seq.timestamps.push_back(entry.at("t_ns").get<Nanos>());
  }
  validate(seq);
  return seq;
}

}  // namespace helios
