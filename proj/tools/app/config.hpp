#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osteotex/feature_table.hpp"

namespace osteotex::app {

/// Settings shared by the pipeline subcommands. A JSON config file may set
/// any field under the same name; command-line flags override it.
struct ExperimentConfig {
  std::string approach = "traditional";  // traditional | deep | merged
  std::string images;
  std::string manifest;
  std::string net_spec;
  std::string weights;
  std::string selector = "su";
  std::size_t k_features = 10;
  std::string classifier = "rf";
  int folds = 10;
  std::uint64_t seed = 42;
  std::string out = ".";

  // Precomputed feature tables, used instead of extracting from images.
  std::string trad_features;
  std::string deep_features;
  std::string model;
  std::string labels;  // manifest supplying labels for predict
};

/// Reads a config file. Unknown keys and wrong types are errors, all of
/// which are appended to `errors`.
ExperimentConfig load_config(const std::filesystem::path& path, std::vector<std::string>& errors);

bool wants_traditional(const ExperimentConfig& cfg);
bool wants_deep(const ExperimentConfig& cfg);

struct ManifestEntry {
  std::string id;
  std::string filename;
  std::optional<int> label;
};

/// CSV `id,filename,label` with label control, osteoporosis or `?`. A first
/// line starting with `id,` is a header.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Problems in the config for a given subcommand, each as one message.
std::vector<std::string> validate_config(const ExperimentConfig& cfg, const std::string& command);

}  // namespace osteotex::app
