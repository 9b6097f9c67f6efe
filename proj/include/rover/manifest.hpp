#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace rover {

/// FNV-1a over the file bytes; the provenance fingerprint used in manifests.
uint64_t hash_file(const std::string& path);
std::string hash_file_hex(const std::string& path);

/// Per-run-directory provenance record. Every pipeline stage writes one next
/// to its artifacts; downstream stages refuse to run without the upstream
/// manifest.
struct RunManifest {
  std::string stage;
  uint64_t seed = 0;
  std::string config_hash;                      // hex fnv64 of the config snapshot
  std::map<std::string, std::string> inputs;    // name -> path
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::string> outputs;   // name -> path (relative to dir)
  std::map<std::string, std::string> output_hashes;
  nlohmann::ordered_json extra;                 // stage-specific payload

  void add_input(const std::string& name, const std::string& path);
  void add_output(const std::string& name, const std::string& dir, const std::string& rel_path);
};

void write_manifest(const std::string& dir, const RunManifest& manifest);

/// Throws with a provenance error if dir/manifest.json is missing.
RunManifest read_manifest(const std::string& dir);

/// Exclusive per-run-directory lock file; released on destruction.
class DirLock {
 public:
  explicit DirLock(const std::string& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
};

}  // namespace rover
