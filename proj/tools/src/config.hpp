#pragma once

// Flat key = value run configuration for the urlearn tool.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "urlearn/features.hpp"
#include "urlearn/pipeline.hpp"

namespace urlearn::cli {

/// Every accepted key with its current textual value. Unknown keys and
/// malformed values raise ConfigError.
class ConfigMap {
 public:
  /// All keys at their defaults.
  ConfigMap();

  /// Reads `key = value` lines; `#` starts a comment, blank lines are skipped.
  void load_file(const std::filesystem::path& path);
  /// `key=value`.
  void apply(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  /// Sorted `key=value` lines.
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), as 16 hex digits.
  std::string hash_hex() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& text);

/// Typed view of a ConfigMap. Path keys left empty resolve to the standard
/// artifact name inside `out_dir`.
struct RunConfig {
  std::filesystem::path out_dir;
  ConfigMap raw;
  std::uint64_t seed = 0;

  std::filesystem::path train_corpus;
  std::filesystem::path test_corpus;
  std::filesystem::path semantics;
  std::filesystem::path class_names;
  std::filesystem::path encoded;
  std::filesystem::path model;
  std::filesystem::path gallery;
  std::filesystem::path predictions;

  SyntheticSpec synth;
  PipelineConfig pipeline;
  CvGrid cv_grid;
  std::vector<std::vector<int>> cv_hops;  // empty: five contiguous groups

  static RunConfig from(const ConfigMap& raw, const std::filesystem::path& out_dir);
};

CorpusFormat corpus_format_for(const std::filesystem::path& path);

}  // namespace urlearn::cli
