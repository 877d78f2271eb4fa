#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace valdet::pipeline {

namespace fs = std::filesystem;

/// INI-style configuration flattened to "section.key" entries. Relative
/// paths resolve against the directory of the config file.
class Config {
 public:
  Config() = default;
  static Config load(const fs::path& path);
  static Config parse(const std::string& text, const fs::path& base_dir);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback = "") const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list; empty entries dropped.
  std::vector<std::string> get_list(const std::string& key, const std::string& fallback = "") const;
  /// Resolved path, or nullopt when the key is absent or empty.
  std::optional<fs::path> path(const std::string& key) const;
  /// Throws naming the key when it is absent.
  fs::path require_path(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  std::uint64_t seed() const { return get_u64("run.seed", 0); }
  const fs::path& base_dir() const { return base_dir_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// First 12 hex chars of the SHA-256 of the sorted entries.
  std::string hash() const;

 private:
  std::map<std::string, std::string> entries_;
  fs::path base_dir_ = ".";
};

const std::vector<std::string>& stage_names();
bool is_stage(const std::string& name);

struct RunOptions {
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> run_dir;  // bypasses <root>/<timestamp>-<hash> lookup
  std::ostream* log = nullptr;      // defaults to std::cerr
};

struct StageResult {
  std::string stage;
  fs::path run_dir;
  bool skipped = false;  // inputs unchanged since the recorded run
  std::vector<fs::path> outputs;
  nlohmann::json summary = nlohmann::json::object();
};

/// The run directory for this config: the newest "<root>/*-<hash>" if one
/// exists, else a fresh "<root>/<UTC timestamp>-<hash>".
fs::path resolve_run_dir(const Config& cfg);

/// Runs one stage and records it in <run dir>/manifest.json. Throws on an
/// unknown stage, a missing upstream artifact (naming the file) or any
/// module error.
StageResult run_stage(const std::string& stage, Config cfg, const RunOptions& options = {});

}  // namespace valdet::pipeline
