#include "osteotex/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace osteotex::eval {

std::vector<Eigen::Index> FoldPlan::train_rows(int fold) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

std::vector<Eigen::Index> FoldPlan::test_rows(int fold) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

FoldPlan stratified_kfold(const Eigen::VectorXi& labels, int k, std::uint64_t seed) {
  const auto n = static_cast<int>(labels.size());
  if (k < 2) throw std::invalid_argument("fold count must be at least 2");
  if (k > n) throw std::invalid_argument("fold count exceeds sample count");

  std::vector<int> by_class[2];
  for (int i = 0; i < n; ++i) {
    const int y = labels(i);
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    by_class[y].push_back(i);
  }
  if (k != n) {
    for (int c = 0; c < 2; ++c) {
      if (static_cast<int>(by_class[c].size()) < k) {
        throw std::invalid_argument("class " + std::to_string(c) + " has " +
                                    std::to_string(by_class[c].size()) + " samples, fewer than " +
                                    std::to_string(k) + " folds");
      }
    }
  }

  // Fisher-Yates with raw engine output keeps plans identical across
  // standard libraries.
  std::mt19937_64 rng(seed);
  FoldPlan plan{k, std::vector<int>(static_cast<std::size_t>(n), 0), seed};
  int deal = 0;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng() % i]);
    }
    for (int idx : members) plan.assignment[static_cast<std::size_t>(idx)] = deal++ % k;
  }
  return plan;
}

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const bool p = predicted[i] == 1;
    if (actual[i] == 1) (p ? c.tp : c.fn)++;
    else (p ? c.fp : c.tn)++;
  }
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) {
    throw std::invalid_argument("confusion counts must be nonnegative");
  }
  const auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.tp + c.tn, c.total()), ratio(c.tp, c.tp + c.fn), ratio(c.tn, c.tn + c.fp)};
}

namespace {

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

void check_scored(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("scores must be finite");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores, labels);
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  const auto n_neg = static_cast<std::int64_t>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("AUC needs both classes present");

  const auto order = order_by_score(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(n_pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores, labels);
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("ROC needs both classes present");

  auto order = order_by_score(scores);
  std::reverse(order.begin(), order.end());
  std::vector<RocPoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? tp : fp) += 1;
    points.push_back({s, fp / n_neg, tp / n_pos});
  }
  return points;
}

double p_from_z(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

ZTestResult two_proportion_ztest(double acc1, std::int64_t n1, double acc2, std::int64_t n2) {
  if (!(acc1 >= 0.0 && acc1 <= 1.0) || !(acc2 >= 0.0 && acc2 <= 1.0)) {
    throw std::invalid_argument("accuracies must lie in [0, 1]");
  }
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("sample counts must be at least 1");
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  const double pooled = (acc1 * a + acc2 * b) / (a + b);
  if (pooled <= 0.0 || pooled >= 1.0) return {};
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b));
  const double z = (acc1 - acc2) / se;
  return {z, p_from_z(z)};
}

std::vector<std::string> validate_sources(std::span<const FeatureSource> sources, const CvConfig& config) {
  std::vector<std::string> errors;
  if (sources.empty()) {
    errors.emplace_back("no feature source given");
    return errors;
  }
  const FeatureTable& first = sources.front().table;
  if (!first.has_labels()) errors.emplace_back("feature table '" + sources.front().prefix + "' has no labels");
  for (const auto& src : sources) {
    const FeatureTable& t = src.table;
    const std::string what = "feature source '" + src.prefix + "'";
    if (t.cols() == 0) errors.push_back(what + " has no feature columns");
    if (t.rows() != first.rows() || t.ids() != first.ids()) {
      errors.push_back(what + " does not list the same samples as the first source");
    } else if (t.has_labels() && first.has_labels() && *t.labels() != *first.labels()) {
      errors.push_back(what + " disagrees with the first source on labels");
    }
    if (config.selector != selection::Selector::None) {
      if (config.k_features == 0) errors.push_back("k_features must be at least 1");
      else if (config.k_features > static_cast<std::size_t>(t.cols())) {
        errors.push_back("k_features " + std::to_string(config.k_features) + " exceeds the " +
                         std::to_string(t.cols()) + " features of " + what);
      }
    }
  }
  return errors;
}

std::vector<std::string> validate_cv(std::span<const FeatureSource> sources, const CvConfig& config) {
  std::vector<std::string> errors = validate_sources(sources, config);
  if (sources.empty()) return errors;
  const FeatureTable& first = sources.front().table;
  if (config.folds < 2) errors.emplace_back("folds must be at least 2");
  if (first.has_labels() && config.folds >= 2) {
    const auto& y = *first.labels();
    const auto pos = y.count();
    const auto neg = y.size() - pos;
    if (config.folds > y.size()) {
      errors.push_back("folds " + std::to_string(config.folds) + " exceeds the " +
                       std::to_string(y.size()) + " samples");
    } else if (config.folds != y.size() && std::min(pos, neg) < config.folds) {
      errors.push_back("each class needs at least " + std::to_string(config.folds) +
                       " samples (control " + std::to_string(neg) + ", osteoporosis " +
                       std::to_string(pos) + ")");
    }
  }
  return errors;
}

FeatureTable merge_sources(std::span<const FeatureSource> sources,
                           std::span<const std::vector<Eigen::Index>> columns) {
  if (sources.size() != columns.size() || sources.empty()) {
    throw std::invalid_argument("merge_sources: one column list per source required");
  }
  const FeatureTable& first = sources.front().table;
  std::vector<std::string> names;
  Eigen::Index total = 0;
  for (const auto& cols : columns) total += static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd values(first.rows(), total);
  Eigen::Index at = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const FeatureTable& t = sources[s].table;
    if (t.ids() != first.ids()) throw std::invalid_argument("merge_sources: sample ids differ");
    for (Eigen::Index c : columns[s]) {
      values.col(at++) = t.values().col(c);
      names.push_back(sources[s].prefix + t.names()[static_cast<std::size_t>(c)]);
    }
  }
  return FeatureTable(first.ids(), std::move(names), std::move(values), first.labels());
}

namespace {

std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void finish_report(MetricsReport& report) {
  std::vector<int> predicted, labels;
  std::vector<double> scores;
  for (const auto& s : report.samples) {
    predicted.push_back(s.predicted);
    labels.push_back(s.label);
    scores.push_back(s.score);
  }
  report.confusion = confusion(predicted, labels);
  report.metrics = metrics(report.confusion);
  const bool both = report.confusion.tp + report.confusion.fn > 0 && report.confusion.tn + report.confusion.fp > 0;
  if (both) report.auc = auc(scores, labels);
}

}  // namespace

MetricsReport run_cv(std::span<const FeatureSource> sources, const CvConfig& config,
                     const FoldPlan& plan) {
  if (const auto errors = validate_cv(sources, config); !errors.empty()) {
    throw std::invalid_argument(errors.front());
  }
  const Eigen::VectorXi& labels = sources.front().table.require_labels();
  if (plan.assignment.size() != static_cast<std::size_t>(labels.size())) {
    throw std::invalid_argument("fold plan does not match the sample count");
  }

  MetricsReport report;
  report.config = config;
  report.config.folds = plan.k;
  for (int fold = 0; fold < plan.k; ++fold) {
    const auto train = plan.train_rows(fold);
    const auto test = plan.test_rows(fold);
    if (test.empty()) continue;

    std::vector<std::vector<Eigen::Index>> chosen;
    for (const auto& src : sources) {
      if (config.selector == selection::Selector::None) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(src.table.cols()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        chosen.push_back(std::move(all));
        continue;
      }
      const FeatureTable train_only = src.table.select_rows(train);
      const auto ranking =
          selection::rank_features(config.selector, train_only, config.selector_params, config.seed);
      chosen.push_back(selection::select_top_k(ranking, config.k_features));
    }
    const FeatureTable merged = merge_sources(sources, chosen);
    const FeatureTable train_table = merged.select_rows(train);
    const FeatureTable test_table = merged.select_rows(test);

    const auto model = classifiers::fit(config.classifier, train_table, config.classifier_params,
                                        fold_seed(config.seed, fold));
    const auto predictions = classifiers::predict(model, test_table.values());

    FoldResult fr{fold, train.size(), test.size(), {}, merged.names()};
    std::vector<int> fold_pred, fold_true;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const Eigen::Index row = test[i];
      report.samples.push_back({merged.ids()[static_cast<std::size_t>(row)], fold, labels(row),
                                predictions[i].label, predictions[i].score});
      fold_pred.push_back(predictions[i].label);
      fold_true.push_back(labels(row));
    }
    fr.confusion = confusion(fold_pred, fold_true);
    report.folds.push_back(std::move(fr));
  }
  finish_report(report);
  return report;
}

MetricsReport run_cv(std::span<const FeatureSource> sources, const CvConfig& config) {
  if (const auto errors = validate_cv(sources, config); !errors.empty()) {
    throw std::invalid_argument(errors.front());
  }
  return run_cv(sources, config,
                stratified_kfold(sources.front().table.require_labels(), config.folds, config.seed));
}

MetricsReport run_cv(const FeatureTable& table, const CvConfig& config) {
  const FeatureSource source{"", table};
  return run_cv(std::span<const FeatureSource>(&source, 1), config);
}

MetricsReport score_predictions(const std::vector<std::string>& ids, std::span<const int> labels,
                                std::span<const classifiers::Prediction> predictions,
                                const CvConfig& config) {
  if (ids.size() != labels.size() || ids.size() != predictions.size()) {
    throw std::invalid_argument("score_predictions: length mismatch");
  }
  MetricsReport report;
  report.config = config;
  report.config.folds = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    report.samples.push_back({ids[i], 0, labels[i], predictions[i].label, predictions[i].score});
  }
  finish_report(report);
  return report;
}

}  // namespace osteotex::eval
