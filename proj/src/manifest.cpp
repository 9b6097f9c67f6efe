#include "rover/manifest.hpp"

#include <cstdio>
#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "rover/rng.hpp"

namespace rover {

using json = nlohmann::ordered_json;

uint64_t hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot hash missing file: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    h = fnv1a64(buf, static_cast<size_t>(f.gcount()), h);
  }
  return h;
}

std::string hash_file_hex(const std::string& path) {
  char out[24];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(hash_file(path)));
  return out;
}

void RunManifest::add_input(const std::string& name, const std::string& path) {
  inputs[name] = path;
  input_hashes[name] = hash_file_hex(path);
}

void RunManifest::add_output(const std::string& name, const std::string& dir,
                             const std::string& rel_path) {
  outputs[name] = rel_path;
  output_hashes[name] = hash_file_hex(dir + "/" + rel_path);
}

void write_manifest(const std::string& dir, const RunManifest& m) {
  json j;
  j["stage"] = m.stage;
  j["seed"] = m.seed;
  j["config_hash"] = m.config_hash;
  j["inputs"] = json::object();
  for (const auto& [k, v] : m.inputs) {
    j["inputs"][k]["path"] = v;
    j["inputs"][k]["fnv64"] = m.input_hashes.at(k);
  }
  j["outputs"] = json::object();
  for (const auto& [k, v] : m.outputs) {
    j["outputs"][k]["path"] = v;
    j["outputs"][k]["fnv64"] = m.output_hashes.at(k);
  }
  if (!m.extra.is_null()) j["extra"] = m.extra;
  std::ofstream f(dir + "/manifest.json");
  if (!f) throw std::runtime_error("cannot write manifest in " + dir);
  f << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& dir) {
  std::ifstream f(dir + "/manifest.json");
  if (!f)
    throw std::runtime_error("provenance error: missing manifest.json in '" + dir +
                             "' (upstream stage incomplete or wrong directory)");
  json j = json::parse(f);
  RunManifest m;
  m.stage = j.at("stage").get<std::string>();
  m.seed = j.at("seed").get<uint64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& [k, v] : j.at("inputs").items()) {
    m.inputs[k] = v.at("path").get<std::string>();
    m.input_hashes[k] = v.at("fnv64").get<std::string>();
  }
  for (const auto& [k, v] : j.at("outputs").items()) {
    m.outputs[k] = v.at("path").get<std::string>();
    m.output_hashes[k] = v.at("fnv64").get<std::string>();
  }
  if (j.contains("extra")) m.extra = j.at("extra");
  return m;
}

DirLock::DirLock(const std::string& dir) {
  std::filesystem::create_directories(dir);
  path_ = dir + "/lock";
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw std::runtime_error("run directory is locked by another stage: " + dir +
                             " (remove 'lock' if stale)");
  ::close(fd);
}

DirLock::~DirLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace rover
