#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsm/error.hpp"
#include "qsm/experiments/io.hpp"

#ifndef QSM_VERSION
#define QSM_VERSION "unversioned"
#endif

namespace qsm::experiments {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io_error, "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

enum class TaskStatus { ok, failed, skipped };

constexpr const char* to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::ok: return "ok";
    case TaskStatus::failed: return "failed";
    case TaskStatus::skipped: return "skipped";
  }
  return "failed";
}

struct TaskRecord {
  std::string name;
  TaskStatus status = TaskStatus::ok;
  double seconds = 0.0;
  std::string message;
};

struct FileRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
  std::string provenance;  // computed | fixture | mixed
  bool partial = false;
};

struct RunManifest {
  std::string experiment;
  std::string version = QSM_VERSION;
  std::map<std::string, std::string> config;
  std::vector<TaskRecord> tasks;
  std::vector<FileRecord> files;
  std::map<std::string, std::string> provenance;
  std::vector<std::string> warnings;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  double wall_seconds = 0.0;

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(tasks.begin(), tasks.end(), [](const TaskRecord& t) { return t.status == TaskStatus::failed; }));
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["version"] = version;
    j["config"] = config;
    j["wall_seconds"] = wall_seconds;
    j["failures"] = failures();
    auto& jt = j["tasks"] = nlohmann::ordered_json::array();
    for (const auto& t : tasks)
      jt.push_back({{"name", t.name}, {"status", to_string(t.status)}, {"seconds", t.seconds}, {"message", t.message}});
    auto& jf = j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : files)
      jf.push_back({{"path", f.path},
                    {"sha256", f.sha256},
                    {"bytes", f.bytes},
                    {"provenance", f.provenance},
                    {"partial", f.partial}});
    j["provenance"] = provenance;
    j["warnings"] = warnings;
    j["summary"] = summary;
    return j;
  }
};

// Output directory that records every file it writes in the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create output directory " + root_.string());
  }

  const std::filesystem::path& root() const { return root_; }
  RunManifest& manifest() { return manifest_; }
  const RunManifest& manifest() const { return manifest_; }

  void write(const std::string& name, const std::string& bytes, const std::string& provenance = "computed",
             bool partial = false) {
    const auto path = root_ / name;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    const std::lock_guard lock(mutex_);
    manifest_.files.erase(std::remove_if(manifest_.files.begin(), manifest_.files.end(),
                                         [&](const FileRecord& f) { return f.path == name; }),
                          manifest_.files.end());
    manifest_.files.push_back({name, sha256_hex(bytes), bytes.size(), provenance, partial});
  }

  void write_csv(const std::string& name, const CsvTable& table, const std::string& provenance = "computed",
                 bool partial = false) {
    write(name, table.text(), provenance, partial);
  }

  void write_json(const std::string& name, const nlohmann::ordered_json& j, const std::string& provenance = "computed") {
    write(name, j.dump(2) + "\n", provenance);
  }

  // Payload plus its mandatory `<name>.json` sidecar.
  void write_binary(const std::string& name, const BinaryArray& a, const std::string& provenance = "computed") {
    write(name, a.payload(), provenance);
    write_json(name + ".json", a.sidecar(std::filesystem::path(name).filename().string()), provenance);
  }

  // Writes manifest.json (not listed in itself) with files in path order.
  void finalize() {
    std::sort(manifest_.files.begin(), manifest_.files.end(),
              [](const FileRecord& a, const FileRecord& b) { return a.path < b.path; });
    const auto path = root_ / "manifest.json";
    std::ofstream out(path, std::ios::trunc);
    out << manifest_.to_json().dump(2) << "\n";
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  }

 private:
  std::filesystem::path root_;
  RunManifest manifest_;
  std::mutex mutex_;
};

}  // namespace qsm::experiments
