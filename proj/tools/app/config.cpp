#include "app/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "osteotex/classifiers.hpp"
#include "osteotex/selection.hpp"

namespace osteotex::app {

namespace fs = std::filesystem;

namespace {

template <typename T>
void read_field(const nlohmann::json& doc, const std::string& key, T& out, std::vector<std::string>& errors) {
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    errors.push_back("config field '" + key + "' has the wrong type");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

ExperimentConfig load_config(const fs::path& path, std::vector<std::string>& errors) {
  ExperimentConfig cfg;
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot read config file " + path.string());
    return cfg;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    errors.push_back("config file " + path.string() + " is not valid JSON: " + e.what());
    return cfg;
  }
  if (!doc.is_object()) {
    errors.push_back("config file " + path.string() + " must hold a JSON object");
    return cfg;
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "approach") read_field(doc, key, cfg.approach, errors);
    else if (key == "images") read_field(doc, key, cfg.images, errors);
    else if (key == "manifest") read_field(doc, key, cfg.manifest, errors);
    else if (key == "net_spec") read_field(doc, key, cfg.net_spec, errors);
    else if (key == "weights") read_field(doc, key, cfg.weights, errors);
    else if (key == "selector") read_field(doc, key, cfg.selector, errors);
    else if (key == "k_features") read_field(doc, key, cfg.k_features, errors);
    else if (key == "classifier") read_field(doc, key, cfg.classifier, errors);
    else if (key == "folds") read_field(doc, key, cfg.folds, errors);
    else if (key == "seed") read_field(doc, key, cfg.seed, errors);
    else if (key == "out") read_field(doc, key, cfg.out, errors);
    else if (key == "trad_features") read_field(doc, key, cfg.trad_features, errors);
    else if (key == "deep_features") read_field(doc, key, cfg.deep_features, errors);
    else if (key == "model") read_field(doc, key, cfg.model, errors);
    else if (key == "labels") read_field(doc, key, cfg.labels, errors);
    else errors.push_back("unknown config field '" + key + "'");
  }
  return cfg;
}

bool wants_traditional(const ExperimentConfig& cfg) {
  return cfg.approach == "traditional" || cfg.approach == "merged";
}

bool wants_deep(const ExperimentConfig& cfg) { return cfg.approach == "deep" || cfg.approach == "merged"; }

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    for (auto& f : fields) f = trim(f);
    if (line_no == 1 && !fields.empty() && fields[0] == "id") continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw std::runtime_error(where + ": expected id,filename,label");
    ManifestEntry e{fields[0], fields[1], std::nullopt};
    if (fields[2] == "control") e.label = kControl;
    else if (fields[2] == "osteoporosis") e.label = kOsteoporotic;
    else if (fields[2] != "?") throw std::runtime_error(where + ": unknown label '" + fields[2] + "'");
    if (e.id.empty() || e.filename.empty()) throw std::runtime_error(where + ": empty id or filename");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg, const std::string& command) {
  std::vector<std::string> errors;
  const auto need_file = [&errors](const std::string& path, const std::string& what) {
    if (path.empty()) errors.push_back(what + " is required");
    else if (!fs::is_regular_file(path)) errors.push_back(what + " '" + path + "' does not exist");
  };

  const bool approach_ok = cfg.approach == "traditional" || cfg.approach == "deep" || cfg.approach == "merged";
  if (!approach_ok) errors.push_back("approach must be traditional, deep or merged, got '" + cfg.approach + "'");

  bool selector_none = false;
  if (command == "cv" || command == "train") {
    try {
      selector_none = selection::parse_selector(cfg.selector) == selection::Selector::None;
    } catch (const std::exception&) {
      errors.push_back("selector must be su, relieff, ttest or none, got '" + cfg.selector + "'");
    }
    try {
      classifiers::parse_kind(cfg.classifier);
    } catch (const std::exception&) {
      errors.push_back("classifier must be nb, svm, dtree, rf or nn1, got '" + cfg.classifier + "'");
    }
    if (!selector_none && cfg.k_features == 0) errors.push_back("k_features must be at least 1");
  }
  if (command == "cv" && cfg.folds < 2) errors.push_back("folds must be at least 2");

  const bool from_images = command == "extract" ||
                           (wants_traditional(cfg) && cfg.trad_features.empty()) ||
                           (wants_deep(cfg) && cfg.deep_features.empty());
  if (approach_ok && from_images) {
    need_file(cfg.manifest, "manifest");
    if (cfg.images.empty()) errors.emplace_back("images directory is required");
    else if (!fs::is_directory(cfg.images)) errors.push_back("images directory '" + cfg.images + "' does not exist");
  }
  if (approach_ok && wants_deep(cfg) && (command == "extract" || cfg.deep_features.empty())) {
    need_file(cfg.net_spec, "net_spec");
    need_file(cfg.weights, "weights");
  }
  if (approach_ok && command != "extract") {
    if (wants_traditional(cfg) && !cfg.trad_features.empty()) need_file(cfg.trad_features, "trad_features");
    if (wants_deep(cfg) && !cfg.deep_features.empty()) need_file(cfg.deep_features, "deep_features");
  }
  if (command == "predict") {
    need_file(cfg.model, "model");
    if (!cfg.labels.empty()) need_file(cfg.labels, "labels");
  }
  return errors;
}

}  // namespace osteotex::app
