#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "osteotex/evaluation.hpp"

namespace osteotex::app {

/// Feature tables extracted from the images listed in a manifest. Images
/// that fail to load are skipped and described in `failures`.
struct Extraction {
  std::vector<eval::FeatureSource> sources;
  std::vector<std::string> failures;
};

Extraction extract_from_images(const ExperimentConfig& cfg, std::ostream& err);

int cmd_extract(const ExperimentConfig& cfg, std::ostream& err);
int cmd_cv(const ExperimentConfig& cfg, std::ostream& err);
int cmd_train(const ExperimentConfig& cfg, std::ostream& err);
int cmd_predict(ExperimentConfig cfg, std::ostream& err);
int cmd_ztest(double acc1, std::int64_t n1, double acc2, std::int64_t n2, std::ostream& out,
              std::ostream& err);
int cmd_report(const std::string& report_path, const std::string& out_dir, std::ostream& out,
               std::ostream& err);

/// Full command line, argv[0] included. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace osteotex::app
