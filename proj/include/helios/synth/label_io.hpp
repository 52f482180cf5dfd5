#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "helios/synth/render.hpp"

namespace helios {

struct FrameLabel {
  Nanos t_ns = 0;
  GestureClass gesture = GestureClass::Rest;
  std::vector<Point2> joints;
  std::optional<BBox> bbox;
};

inline std::vector<FrameLabel> frame_labels(const SynthesizedSequence& seq) {
  std::vector<FrameLabel> out;
  out.reserve(seq.labels.size());
  for (std::size_t i = 0; i < seq.labels.size(); ++i)
    out.push_back({seq.frames.timestamps[i], seq.labels[i], seq.joints[i], frame_bbox(seq, i)});
  return out;
}

// One JSON object per line: {"t_ns", "class", "joints": [[x, y], ...], "bbox": [x, y, side] | null}
inline std::string encode_label_jsonl(const std::vector<FrameLabel>& labels) {
  std::string out;
  for (const auto& l : labels) {
    nlohmann::json j;
    j["t_ns"] = l.t_ns;
    j["class"] = std::string(class_name(l.gesture));
    j["joints"] = nlohmann::json::array();
    for (const auto& p : l.joints) j["joints"].push_back({p.x, p.y});
    j["bbox"] = l.bbox ? nlohmann::json{l.bbox->x_min, l.bbox->y_min, l.bbox->side} : nlohmann::json();
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<FrameLabel> decode_label_jsonl(std::istream& in) {
  std::vector<FrameLabel> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FrameLabel l;
      l.t_ns = j.at("t_ns").get<Nanos>();
      l.gesture = class_from_name(j.at("class").get<std::string>());
      for (const auto& p : j.at("joints")) l.joints.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      const auto& b = j.at("bbox");
      if (!b.is_null()) l.bbox = BBox{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()};
      out.push_back(std::move(l));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, std::string("bad label record: ") + e.what());
    }
  }
  return out;
}

inline void write_label_jsonl(const std::filesystem::path& path, const std::vector<FrameLabel>& labels) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << encode_label_jsonl(labels);
}

inline std::vector<FrameLabel> read_label_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kMissingArtifact, "cannot open " + path.string());
  return decode_label_jsonl(in);
}

}  // namespace helios
