#include "app/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "osteotex/binary_io.hpp"
#include "osteotex/cnn/network.hpp"
#include "osteotex/image.hpp"
#include "osteotex/model_io.hpp"
#include "osteotex/report.hpp"
#include "osteotex/texture.hpp"

namespace osteotex::app {

namespace fs = std::filesystem;

namespace {

constexpr int kFailure = 1;

void report_errors(const std::vector<std::string>& errors, std::ostream& err) {
  for (const auto& e : errors) err << "error: " << e << '\n';
}

std::string source_prefix(const ExperimentConfig& cfg, bool deep) {
  if (cfg.approach != "merged") return {};
  return deep ? selection::kDeepPrefix : selection::kTraditionalPrefix;
}

FeatureTable build_table(const std::vector<std::string>& ids, const std::vector<std::string>& names,
                         const std::vector<Eigen::VectorXd>& rows, const std::vector<std::optional<int>>& labels) {
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) values.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  const auto known = std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
  std::optional<Eigen::VectorXi> y;
  if (known > 0 && known == static_cast<std::ptrdiff_t>(labels.size())) {
    y = Eigen::VectorXi(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) (*y)(static_cast<Eigen::Index>(i)) = *labels[i];
  } else if (known > 0) {
    throw std::runtime_error("manifest mixes known and unknown labels");
  }
  return FeatureTable(ids, names, std::move(values), std::move(y));
}

std::vector<eval::FeatureSource> load_sources(const ExperimentConfig& cfg, std::ostream& err,
                                              std::vector<std::string>& failures) {
  const bool trad_csv = wants_traditional(cfg) && !cfg.trad_features.empty();
  const bool deep_csv = wants_deep(cfg) && !cfg.deep_features.empty();
  std::vector<eval::FeatureSource> extracted;
  if ((wants_traditional(cfg) && !trad_csv) || (wants_deep(cfg) && !deep_csv)) {
    ExperimentConfig sub = cfg;
    if (trad_csv) sub.approach = "deep";
    if (deep_csv) sub.approach = "traditional";
    auto ex = extract_from_images(sub, err);
    failures = std::move(ex.failures);
    extracted = std::move(ex.sources);
  }
  const auto take = [&](bool deep) -> FeatureTable {
    const std::string& csv = deep ? cfg.deep_features : cfg.trad_features;
    if (!csv.empty()) return read_feature_csv(csv);
    for (auto& s : extracted) {
      const bool is_deep = s.table.cols() > 0 && s.table.names().front().rfind("deep_", 0) == 0;
      if (is_deep == deep) return std::move(s.table);
    }
    throw std::logic_error("missing extracted source");
  };
  std::vector<eval::FeatureSource> sources;
  if (wants_deep(cfg)) sources.push_back({source_prefix(cfg, true), take(true)});
  if (wants_traditional(cfg)) sources.push_back({source_prefix(cfg, false), take(false)});
  return sources;
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out) / name).string();
}

eval::CvConfig cv_config(const ExperimentConfig& cfg) {
  eval::CvConfig c;
  c.approach = cfg.approach;
  c.selector = selection::parse_selector(cfg.selector);
  c.k_features = cfg.k_features;
  c.classifier = classifiers::parse_kind(cfg.classifier);
  c.folds = cfg.folds;
  c.seed = cfg.seed;
  return c;
}

void write_report_files(const eval::MetricsReport& r, const ExperimentConfig& cfg, const std::string& stem) {
  write_file_bytes(out_path(cfg, stem + ".json"), report::to_json(r));
  write_file_bytes(out_path(cfg, stem + ".txt"), report::to_text(r));
  write_file_bytes(out_path(cfg, stem + "_roc.csv"), report::roc_csv(r));
}

/// Runs a command body, turning exceptions into a diagnostic and status 1.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

Extraction extract_from_images(const ExperimentConfig& cfg, std::ostream& err) {
  const auto manifest = read_manifest(cfg.manifest);
  if (manifest.empty()) err << "warning: manifest " << cfg.manifest << " lists no images\n";

  std::optional<cnn::Network> net;
  if (wants_deep(cfg)) net.emplace(cnn::load_network_spec(cfg.net_spec), cnn::load_weights(cfg.weights));

  Extraction result;
  std::vector<std::string> ids;
  std::vector<std::optional<int>> labels;
  std::vector<Eigen::VectorXd> trad_rows, deep_rows;
  for (const auto& entry : manifest) {
    GrayImage img;
    try {
      img = load_pgm(fs::path(cfg.images) / entry.filename);
    } catch (const std::exception& e) {
      result.failures.push_back("cannot read image '" + entry.filename + "' for id " + entry.id + ": " + e.what());
      continue;
    }
    ids.push_back(entry.id);
    labels.push_back(entry.label);
    if (wants_traditional(cfg)) trad_rows.push_back(texture::extract_traditional_features(img).values);
    if (net) deep_rows.push_back(cnn::extract_deep_features(img, *net).values);
  }
  if (net) {
    const auto names = cnn::deep_feature_names(net->spec().feature_shape().numel());
    result.sources.push_back({source_prefix(cfg, true), build_table(ids, names, deep_rows, labels)});
  }
  if (wants_traditional(cfg)) {
    result.sources.push_back(
        {source_prefix(cfg, false), build_table(ids, texture::traditional_feature_names(), trad_rows, labels)});
  }
  return result;
}

int cmd_extract(const ExperimentConfig& cfg, std::ostream& err) {
  if (const auto errors = validate_config(cfg, "extract"); !errors.empty()) {
    report_errors(errors, err);
    return kFailure;
  }
  return guarded(err, [&] {
    const Extraction ex = extract_from_images(cfg, err);
    ensure_dir(cfg.out);
    for (const auto& src : ex.sources) {
      const bool deep = src.table.cols() > 0 && src.table.names().front().rfind("deep_", 0) == 0;
      write_feature_csv(out_path(cfg, deep ? "deep.csv" : "traditional.csv"), src.table);
    }
    report_errors(ex.failures, err);
    return ex.failures.empty() ? 0 : kFailure;
  });
}

int cmd_cv(const ExperimentConfig& cfg, std::ostream& err) {
  if (const auto errors = validate_config(cfg, "cv"); !errors.empty()) {
    report_errors(errors, err);
    return kFailure;
  }
  return guarded(err, [&] {
    std::vector<std::string> failures;
    const auto sources = load_sources(cfg, err, failures);
    report_errors(failures, err);
    const eval::CvConfig config = cv_config(cfg);
    if (const auto errors = eval::validate_cv(sources, config); !errors.empty()) {
      report_errors(errors, err);
      return kFailure;
    }
    const auto result = eval::run_cv(sources, config);
    ensure_dir(cfg.out);
    write_report_files(result, cfg, "cv_report");
    return failures.empty() ? 0 : kFailure;
  });
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& err) {
  if (const auto errors = validate_config(cfg, "train"); !errors.empty()) {
    report_errors(errors, err);
    return kFailure;
  }
  return guarded(err, [&] {
    std::vector<std::string> failures;
    const auto sources = load_sources(cfg, err, failures);
    report_errors(failures, err);
    eval::CvConfig config = cv_config(cfg);
    if (const auto errors = eval::validate_sources(sources, config); !errors.empty()) {
      report_errors(errors, err);
      return kFailure;
    }
    ensure_dir(cfg.out);
    std::vector<std::vector<Eigen::Index>> chosen;
    for (const auto& src : sources) {
      if (config.selector == selection::Selector::None) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(src.table.cols()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        chosen.push_back(std::move(all));
        continue;
      }
      const auto ranking = selection::rank_features(config.selector, src.table, config.selector_params, cfg.seed);
      const bool deep = src.table.names().front().rfind("deep_", 0) == 0;
      write_file_bytes(out_path(cfg, deep ? "ranking_deep.csv" : "ranking_traditional.csv"),
                       selection::format_ranking_csv(ranking, src.table.names()));
      chosen.push_back(selection::select_top_k(ranking, config.k_features));
    }
    const FeatureTable merged = eval::merge_sources(sources, chosen);

    ModelBundle bundle;
    bundle.model = classifiers::fit(config.classifier, merged, config.classifier_params, cfg.seed);
    bundle.feature_names = merged.names();
    nlohmann::ordered_json meta{{"approach", cfg.approach},   {"selector", cfg.selector},
                                {"k_features", cfg.k_features}, {"classifier", cfg.classifier},
                                {"seed", cfg.seed},           {"training_rows", merged.rows()}};
    bundle.metadata_json = meta.dump();
    save_model(out_path(cfg, "model.otmd"), bundle);
    return failures.empty() ? 0 : kFailure;
  });
}

int cmd_predict(ExperimentConfig cfg, std::ostream& err) {
  std::optional<ModelBundle> bundle;
  nlohmann::json meta;
  if (!cfg.model.empty() && fs::is_regular_file(cfg.model)) {
    try {
      bundle = load_model(cfg.model);
      meta = nlohmann::json::parse(bundle->metadata_json);
      cfg.approach = meta.value("approach", cfg.approach);
    } catch (const std::exception& e) {
      err << "error: cannot load model " << cfg.model << ": " << e.what() << '\n';
      return kFailure;
    }
  }
  if (const auto errors = validate_config(cfg, "predict"); !errors.empty()) {
    report_errors(errors, err);
    return kFailure;
  }
  return guarded(err, [&] {
    std::vector<std::string> failures;
    const auto sources = load_sources(cfg, err, failures);
    report_errors(failures, err);
    std::vector<std::vector<Eigen::Index>> all;
    for (const auto& src : sources) {
      std::vector<Eigen::Index> cols(static_cast<std::size_t>(src.table.cols()));
      std::iota(cols.begin(), cols.end(), Eigen::Index{0});
      all.push_back(std::move(cols));
    }
    const FeatureTable table = eval::merge_sources(sources, all);

    std::vector<std::string> errors;
    std::vector<Eigen::Index> columns;
    for (const auto& name : bundle->feature_names) {
      if (const auto c = table.find(name)) columns.push_back(*c);
      else errors.push_back("model feature '" + name + "' is missing from the input table");
    }
    if (static_cast<Eigen::Index>(bundle->feature_names.size()) != bundle->model.dimension) {
      errors.push_back("model lists " + std::to_string(bundle->feature_names.size()) + " features but expects " +
                       std::to_string(bundle->model.dimension));
    }
    std::optional<Eigen::VectorXi> labels = table.labels();
    if (!cfg.labels.empty()) {
      std::map<std::string, std::optional<int>> by_id;
      for (const auto& e : read_manifest(cfg.labels)) by_id[e.id] = e.label;
      Eigen::VectorXi y(table.rows());
      bool complete = true;
      for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const auto it = by_id.find(table.ids()[static_cast<std::size_t>(i)]);
        if (it == by_id.end() || !it->second) {
          errors.push_back("labels file has no known label for id " + table.ids()[static_cast<std::size_t>(i)]);
          complete = false;
        } else {
          y(i) = *it->second;
        }
      }
      if (complete) labels = y;
    }
    if (!errors.empty()) {
      report_errors(errors, err);
      return kFailure;
    }

    const Eigen::MatrixXd x = table.values()(Eigen::all, columns);
    const auto predictions = classifiers::predict(bundle->model, x);
    ensure_dir(cfg.out);
    std::string csv = "id,label,score\n";
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      csv += table.ids()[i] + "," + std::to_string(predictions[i].label) + "," + format_real(predictions[i].score) + "\n";
    }
    write_file_bytes(out_path(cfg, "predictions.csv"), csv);

    if (labels && labels->size() > 0) {
      eval::CvConfig config;
      config.approach = cfg.approach;
      config.selector = selection::parse_selector(meta.value("selector", std::string("none")));
      config.k_features = meta.value("k_features", std::size_t{0});
      config.classifier = bundle->model.kind;
      config.seed = meta.value("seed", cfg.seed);
      const std::vector<int> y(labels->data(), labels->data() + labels->size());
      write_report_files(eval::score_predictions(table.ids(), y, predictions, config), cfg, "predict_report");
    }
    return failures.empty() ? 0 : kFailure;
  });
}

int cmd_ztest(double acc1, std::int64_t n1, double acc2, std::int64_t n2, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto r = eval::two_proportion_ztest(acc1, n1, acc2, n2);
    char buf[128];
    if (r.z) {
      std::snprintf(buf, sizeof(buf), "z = %.4f\np (two-tailed) = %.6f\n", *r.z, *r.p);
    } else {
      std::snprintf(buf, sizeof(buf), "z = undefined\np (two-tailed) = undefined\n");
      err << "warning: pooled proportion is 0 or 1, z is undefined\n";
    }
    out << buf;
    return 0;
  });
}

int cmd_report(const std::string& report_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto r = report::from_json(read_file_bytes(report_path));
    const std::string text = report::to_text(r);
    out << text;
    if (!out_dir.empty()) {
      ensure_dir(out_dir);
      const std::string stem = fs::path(report_path).stem().string();
      write_file_bytes((fs::path(out_dir) / (stem + ".txt")).string(), text);
      write_file_bytes((fs::path(out_dir) / (stem + "_roc.csv")).string(), report::roc_csv(r));
    }
    return 0;
  });
}

namespace {

/// Binds pipeline flags for one subcommand and remembers which were given.
struct PipelineFlags {
  std::string config_path;
  ExperimentConfig values;
  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> setters;

  template <typename T>
  void bind(CLI::App* sub, const std::string& flag, T ExperimentConfig::*field, const std::string& help) {
    CLI::Option* opt = sub->add_option(flag, values.*field, help);
    setters.emplace_back(opt, [this, field](ExperimentConfig& c) { c.*field = values.*field; });
  }

  void add_to(CLI::App* sub, bool learning) {
    sub->add_option("--config", config_path, "JSON config file; flags override its fields");
    bind(sub, "--approach", &ExperimentConfig::approach, "traditional, deep or merged");
    bind(sub, "--images", &ExperimentConfig::images, "Directory holding the images named in the manifest");
    bind(sub, "--manifest", &ExperimentConfig::manifest, "CSV id,filename,label");
    bind(sub, "--net-spec", &ExperimentConfig::net_spec, "Network spec JSON for deep features");
    bind(sub, "--weights", &ExperimentConfig::weights, "OTWT weight file for deep features");
    bind(sub, "--out", &ExperimentConfig::out, "Output directory");
    if (learning) {
      bind(sub, "--trad-features", &ExperimentConfig::trad_features, "Traditional feature CSV from extract");
      bind(sub, "--deep-features", &ExperimentConfig::deep_features, "Deep feature CSV from extract");
      bind(sub, "--selector", &ExperimentConfig::selector, "su, relieff, ttest or none");
      bind(sub, "--k-features", &ExperimentConfig::k_features, "Features kept per source");
      bind(sub, "--classifier", &ExperimentConfig::classifier, "nb, svm, dtree, rf or nn1");
      bind(sub, "--folds", &ExperimentConfig::folds, "Cross-validation folds");
      bind(sub, "--seed", &ExperimentConfig::seed, "Random seed");
      bind(sub, "--model", &ExperimentConfig::model, "Model file (predict)");
      bind(sub, "--labels", &ExperimentConfig::labels, "Manifest with withheld labels (predict)");
    }
  }

  std::optional<ExperimentConfig> resolve(std::ostream& err) const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::vector<std::string> errors;
      cfg = load_config(config_path, errors);
      if (!errors.empty()) {
        report_errors(errors, err);
        return std::nullopt;
      }
    }
    for (const auto& [opt, set] : setters) {
      if (opt->count() > 0) set(cfg);
    }
    return cfg;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Osteoporosis bone texture classification toolkit"};
  app.name(args.empty() ? "osteotex" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  PipelineFlags extract_flags, cv_flags, train_flags, predict_flags;
  auto* extract = app.add_subcommand("extract", "Extract traditional and/or deep feature tables");
  extract_flags.add_to(extract, false);
  auto* cv = app.add_subcommand("cv", "Stratified cross-validation with per-fold selection");
  cv_flags.add_to(cv, true);
  auto* train = app.add_subcommand("train", "Select features and fit a model on all labelled data");
  train_flags.add_to(train, true);
  auto* predict = app.add_subcommand("predict", "Apply a trained model to a feature table");
  predict_flags.add_to(predict, true);

  double acc1 = 0, acc2 = 0;
  std::int64_t n1 = 0, n2 = 0;
  auto* ztest = app.add_subcommand("ztest", "Pooled two-proportion z test");
  ztest->add_option("--acc1", acc1, "First accuracy in [0,1]")->required();
  ztest->add_option("--n1", n1, "First sample count")->required();
  ztest->add_option("--acc2", acc2, "Second accuracy in [0,1]")->required();
  ztest->add_option("--n2", n2, "Second sample count")->required();

  std::string report_in, report_out;
  auto* rep = app.add_subcommand("report", "Render a JSON metrics report as text and ROC CSV");
  rep->add_option("--in", report_in, "Report JSON written by cv or predict")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", report_out, "Directory for the text and ROC files");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const auto with = [&](const PipelineFlags& flags, const auto& command) {
    const auto cfg = flags.resolve(err);
    return cfg ? command(*cfg, err) : kFailure;
  };
  if (extract->parsed()) return with(extract_flags, cmd_extract);
  if (cv->parsed()) return with(cv_flags, cmd_cv);
  if (train->parsed()) return with(train_flags, cmd_train);
  if (predict->parsed()) return with(predict_flags, cmd_predict);
  if (ztest->parsed()) return cmd_ztest(acc1, n1, acc2, n2, out, err);
  return cmd_report(report_in, report_out, out, err);
}

}  // namespace osteotex::app
