#include "osteotex/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace osteotex::report {

namespace {

using Json = nlohmann::ordered_json;

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Json confusion_json(const eval::ConfusionCounts& c) {
  return Json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

eval::ConfusionCounts confusion_from(const Json& j) {
  return {j.at("tp").get<std::int64_t>(), j.at("fp").get<std::int64_t>(), j.at("tn").get<std::int64_t>(),
          j.at("fn").get<std::int64_t>()};
}

std::string classifier_title(classifiers::Kind kind) {
  switch (kind) {
    case classifiers::Kind::NaiveBayes: return "Naive Bayes";
    case classifiers::Kind::LsSvm: return "SVM (linear LS-SVM)";
    case classifiers::Kind::DecisionTree: return "Decision Tree";
    case classifiers::Kind::RandomForest: return "Random Forests";
    case classifiers::Kind::NearestNeighbor: return "1-Nearest Neighbour";
  }
  return "?";
}

std::string selector_title(selection::Selector s) {
  switch (s) {
    case selection::Selector::SymmetricUncertainty: return "Symmetric uncertainty";
    case selection::Selector::ReliefF: return "Relief-f";
    case selection::Selector::TTest: return "t-test";
    case selection::Selector::None: return "None";
  }
  return "?";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string or_undefined(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : std::string("undefined");
}

}  // namespace

std::string to_json(const eval::MetricsReport& r) {
  Json config{{"approach", r.config.approach},
              {"selector", std::string(selection::to_string(r.config.selector))},
              {"k_features", r.config.k_features},
              {"classifier", std::string(classifiers::to_string(r.config.classifier))},
              {"folds", r.config.folds},
              {"seed", r.config.seed}};
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    folds.push_back(Json{{"fold", f.fold},
                         {"train_size", f.train_size},
                         {"test_size", f.test_size},
                         {"confusion", confusion_json(f.confusion)},
                         {"selected", f.selected}});
  }
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    samples.push_back(Json{{"id", s.id},
                           {"fold", s.fold},
                           {"label", s.label},
                           {"predicted", s.predicted},
                           {"score", s.score}});
  }
  Json doc{{"config", config},
           {"confusion", confusion_json(r.confusion)},
           {"accuracy", optional_number(r.metrics.accuracy)},
           {"sensitivity", optional_number(r.metrics.sensitivity)},
           {"specificity", optional_number(r.metrics.specificity)},
           {"auc", optional_number(r.auc)},
           {"folds", folds},
           {"samples", samples}};
  return doc.dump(2) + "\n";
}

eval::MetricsReport from_json(std::string_view text) {
  const Json doc = Json::parse(text);
  eval::MetricsReport r;
  const Json& c = doc.at("config");
  r.config.approach = c.at("approach").get<std::string>();
  r.config.selector = selection::parse_selector(c.at("selector").get<std::string>());
  r.config.k_features = c.at("k_features").get<std::size_t>();
  r.config.classifier = classifiers::parse_kind(c.at("classifier").get<std::string>());
  r.config.folds = c.at("folds").get<int>();
  r.config.seed = c.at("seed").get<std::uint64_t>();
  r.confusion = confusion_from(doc.at("confusion"));
  r.metrics = {read_optional(doc, "accuracy"), read_optional(doc, "sensitivity"),
               read_optional(doc, "specificity")};
  r.auc = read_optional(doc, "auc");
  for (const Json& f : doc.at("folds")) {
    r.folds.push_back({f.at("fold").get<int>(), f.at("train_size").get<std::size_t>(),
                       f.at("test_size").get<std::size_t>(), confusion_from(f.at("confusion")),
                       f.at("selected").get<std::vector<std::string>>()});
  }
  for (const Json& s : doc.at("samples")) {
    r.samples.push_back({s.at("id").get<std::string>(), s.at("fold").get<int>(), s.at("label").get<int>(),
                         s.at("predicted").get<int>(), s.at("score").get<double>()});
  }
  return r;
}

std::string to_text(const eval::MetricsReport& r) {
  const auto& cfg = r.config;
  std::string n_features;
  if (cfg.selector == selection::Selector::None) {
    n_features = "ALL";
  } else if (cfg.approach == "merged") {
    n_features = std::to_string(2 * cfg.k_features) + " (" + std::to_string(cfg.k_features) + " deep + " +
                 std::to_string(cfg.k_features) + " traditional features)";
  } else {
    n_features = std::to_string(cfg.k_features);
  }
  const auto& c = r.confusion;
  std::string accuracy = r.metrics.accuracy ? fixed(100.0 * *r.metrics.accuracy, 4) + "%" : "undefined";
  accuracy += " (TP-" + std::to_string(c.tp) + ", FP-" + std::to_string(c.fp) + ", TN-" + std::to_string(c.tn) +
              ", FN-" + std::to_string(c.fn) + ")";

  std::ostringstream out;
  const auto row = [&out](const std::string& key, const std::string& value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%-23s", key.c_str());
    out << buf << value << '\n';
  };
  row("Feature type", cfg.approach);
  row("Classifier used", classifier_title(cfg.classifier));
  row("Feature selector used", selector_title(cfg.selector));
  row("Number of features", n_features);
  row("Folds", cfg.folds > 0 ? std::to_string(cfg.folds) : std::string("none (blind)"));
  row("Seed", std::to_string(cfg.seed));
  row("Accuracy", accuracy);
  row("AUC", or_undefined(r.auc, 3));
  row("Sensitivity", or_undefined(r.metrics.sensitivity, 4));
  row("Specificity", or_undefined(r.metrics.specificity, 4));

  if (!r.folds.empty()) {
    out << "\nfold  train  test  tp  fp  tn  fn  accuracy\n";
    for (const auto& f : r.folds) {
      char buf[128];
      const auto acc = eval::metrics(f.confusion).accuracy;
      std::snprintf(buf, sizeof(buf), "%4d  %5zu  %4zu  %2lld  %2lld  %2lld  %2lld  %s\n", f.fold, f.train_size,
                    f.test_size, static_cast<long long>(f.confusion.tp), static_cast<long long>(f.confusion.fp),
                    static_cast<long long>(f.confusion.tn), static_cast<long long>(f.confusion.fn),
                    or_undefined(acc, 4).c_str());
      out << buf;
    }
  }
  return out.str();
}

std::string roc_csv(const eval::MetricsReport& r) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : r.samples) {
    scores.push_back(s.score);
    labels.push_back(s.label);
  }
  std::string out = "threshold,fpr,tpr\n";
  const bool both = r.confusion.tp + r.confusion.fn > 0 && r.confusion.tn + r.confusion.fp > 0;
  if (!both) return out;
  for (const auto& p : eval::roc_points(scores, labels)) {
    out += (std::isinf(p.threshold) ? std::string("inf") : format_real(p.threshold)) + "," +
           format_real(p.fpr) + "," + format_real(p.tpr) + "\n";
  }
  return out;
}

}  // namespace osteotex::report
