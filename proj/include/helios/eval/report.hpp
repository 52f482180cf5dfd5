#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "helios/core/event_io.hpp"
#include "helios/eval/bench.hpp"
#include "helios/eval/metrics.hpp"
#include "json.hpp"

namespace helios::eval {

inline nlohmann::json to_json(const Counts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"f1", c.f1()}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (GestureClass g : kAllClasses) classes[std::string(class_name(g))] = to_json(r.per_class[class_index(g)]);
  nlohmann::json groups = nlohmann::json::object();
  for (int g = 0; g < kNumPromptGroups; ++g) groups[kPromptGroupNames[g]] = to_json(r.groups[g]);
  return {{"per_class", classes}, {"groups", groups}, {"unit_f1", r.unit_f1},
          {"mean_f1", r.mean_f1}, {"median_f1", r.median_f1}, {"units", r.unit_f1.size()}};
}

inline nlohmann::json to_json(const ConfusionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : m.counts) rows.push_back(row);
  nlohmann::json precision = nlohmann::json::object();
  for (GestureClass g : kAllClasses) {
    const auto p = m.class_precision(class_index(g));
    precision[std::string(class_name(g))] = p ? nlohmann::json(*p) : nlohmann::json(nullptr);
  }
  return {{"matrix", rows}, {"class_precision", precision}, {"average_precision", m.average_precision()}};
}

inline nlohmann::json to_json(const LatencyStats& s) {
  return {{"iterations", s.iterations}, {"mean_ms", s.mean_ms}, {"p50_ms", s.p50_ms}, {"p99_ms", s.p99_ms}};
}

namespace detail {

inline std::string fixed(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

}  // namespace detail

/// class,tp,fp,fn,f1 for every class, then the three prompt groups.
inline std::string metrics_csv(const MetricsReport& r) {
  std::string out = "class,tp,fp,fn,f1\n";
  auto line = [&](std::string_view name, const Counts& c) {
    out += std::string(name) + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," + std::to_string(c.fn) +
           "," + detail::fixed(c.f1()) + "\n";
  };
  for (GestureClass g : kAllClasses) line(class_name(g), r.per_class[class_index(g)]);
  for (int g = 0; g < kNumPromptGroups; ++g) line(kPromptGroupNames[g], r.groups[g]);
  return out;
}

/// Header row of predicted class names; each row starts with the true class name.
inline std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "true\\predicted";
  for (GestureClass g : kAllClasses) out += "," + std::string(class_name(g));
  out += "\n";
  for (GestureClass t : kAllClasses) {
    out += std::string(class_name(t));
    for (long v : m.counts[class_index(t)]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

/// Bar-chart data: one row per prompt group with pooled F1.
inline std::string f1_plot_csv(const MetricsReport& r) {
  std::string out = "group,f1\n";
  for (int g = 0; g < kNumPromptGroups; ++g) out += std::string(kPromptGroupNames[g]) + "," + detail::fixed(r.groups[g].f1()) + "\n";
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace helios::eval
