#pragma once

#include <openssl/sha.h>

#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "helios/core/event_io.hpp"
#include "helios/pipeline/config.hpp"
#include "json.hpp"

namespace helios::pipeline {

inline std::string hex(const unsigned char* d, std::size_t n) {
  std::ostringstream os;
  for (std::size_t i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(d[i]);
  return os.str();
}

inline std::string sha1_hex(const std::string& data) {
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  return hex(digest, SHA_DIGEST_LENGTH);
}

/// Git blob id: SHA-1 of "blob <size>\0" followed by the content.
inline std::string git_blob_hash(const std::vector<std::uint8_t>& content) {
  std::string data = "blob " + std::to_string(content.size());
  data.push_back('\0');
  data.append(content.begin(), content.end());
  return sha1_hex(data);
}

inline std::string file_blob_hash(const std::filesystem::path& p) { return git_blob_hash(read_file_bytes(p)); }

/// Config hash over every key except those that cannot change artifacts (thread count,
/// output location), so manifests compare equal across machines and thread counts.
inline std::string config_hash(const PipelineConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j["general"].erase("threads");
  j["general"].erase("output_dir");
  return sha1_hex(j.dump());
}

/// Stage manifest: inputs and outputs with blob hashes, relative to the output root.
struct Manifest {
  std::string stage;
  std::filesystem::path root;
  nlohmann::json inputs = nlohmann::json::array();
  nlohmann::json outputs = nlohmann::json::array();

  static nlohmann::json entry(const std::filesystem::path& root, const std::filesystem::path& p) {
    return {{"path", std::filesystem::relative(p, root).generic_string()}, {"blob", file_blob_hash(p)}};
  }
  void input(const std::filesystem::path& p) { inputs.push_back(entry(root, p)); }
  void output(const std::filesystem::path& p) { outputs.push_back(entry(root, p)); }

  void write(const std::filesystem::path& path, const PipelineConfig& cfg) const {
    auto sorted = [](nlohmann::json a) {
      std::sort(a.begin(), a.end(), [](const auto& x, const auto& y) { return x["path"] < y["path"]; });
      return a;
    };
    const nlohmann::json j{{"stage", stage},
                           {"seed", cfg.seed},
                           {"config_hash", config_hash(cfg)},
                           {"inputs", sorted(inputs)},
                           {"outputs", sorted(outputs)}};
    const std::string text = j.dump(2) + "\n";
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
};

}  // namespace helios::pipeline
