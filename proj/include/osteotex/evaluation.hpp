#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "osteotex/classifiers.hpp"
#include "osteotex/feature_table.hpp"
#include "osteotex/selection.hpp"

namespace osteotex::eval {

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // fold index per sample
  std::uint64_t seed = 0;

  std::vector<Eigen::Index> train_rows(int fold) const;
  std::vector<Eigen::Index> test_rows(int fold) const;
};

/// Shuffles each class with the seed, then deals samples round-robin into
/// folds. The deal counter carries over from class 0 to class 1 so fold
/// sizes stay within one of each other. k == n gives leave-one-out.
FoldPlan stratified_kfold(const Eigen::VectorXi& labels, int k, std::uint64_t seed);

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual);

/// nullopt marks a ratio whose denominator is empty.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

Metrics metrics(const ConfusionCounts& c);

/// Mann-Whitney estimate of P(score+ > score-) + P(tie) / 2, via midranks.
double auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// One point per distinct score, descending, bracketed by (0,0) and (1,1).
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels);

/// Two-tailed p value of a standard normal statistic.
double p_from_z(double z);

struct ZTestResult {
  std::optional<double> z;  // nullopt when the pooled proportion is 0 or 1
  std::optional<double> p;
};

/// Pooled two-proportion z test of acc1 against acc2.
ZTestResult two_proportion_ztest(double acc1, std::int64_t n1, double acc2, std::int64_t n2);

/// One feature table feeding the pipeline. With several sources, top-k
/// selection runs separately in each and the picks are concatenated with
/// their prefixes.
struct FeatureSource {
  std::string prefix;
  FeatureTable table;
};

struct CvConfig {
  std::string approach = "traditional";
  selection::Selector selector = selection::Selector::SymmetricUncertainty;
  std::size_t k_features = 10;  // per source; ignored by Selector::None
  selection::SelectorParams selector_params;
  classifiers::Kind classifier = classifiers::Kind::RandomForest;
  classifiers::Params classifier_params;
  int folds = 10;
  std::uint64_t seed = 42;
};

struct SampleResult {
  std::string id;
  int fold = 0;
  int label = 0;
  int predicted = 0;
  double score = 0.0;
};

struct FoldResult {
  int fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  ConfusionCounts confusion;
  std::vector<std::string> selected;
};

struct MetricsReport {
  CvConfig config;
  ConfusionCounts confusion;
  Metrics metrics;
  std::optional<double> auc;
  std::vector<FoldResult> folds;
  std::vector<SampleResult> samples;  // ordered by (fold, row)
};

/// Checks the sources against each other and against k_features, returning
/// every problem found. Fold counts are not considered.
std::vector<std::string> validate_sources(std::span<const FeatureSource> sources, const CvConfig& config);

/// validate_sources plus the fold-count rules.
std::vector<std::string> validate_cv(std::span<const FeatureSource> sources, const CvConfig& config);

/// Per fold: rank on the training rows only, project to the top-k columns of
/// each source, fit, and score the held-out rows. Out-of-fold results are
/// pooled for the confusion counts and AUC.
MetricsReport run_cv(std::span<const FeatureSource> sources, const CvConfig& config,
                     const FoldPlan& plan);
MetricsReport run_cv(std::span<const FeatureSource> sources, const CvConfig& config);
MetricsReport run_cv(const FeatureTable& table, const CvConfig& config);

/// Chosen columns of each source, concatenated with prefixes applied.
FeatureTable merge_sources(std::span<const FeatureSource> sources,
                           std::span<const std::vector<Eigen::Index>> columns);

/// Report for predictions scored against known labels (blind evaluation).
MetricsReport score_predictions(const std::vector<std::string>& ids, std::span<const int> labels,
                                std::span<const classifiers::Prediction> predictions,
                                const CvConfig& config);

}  // namespace osteotex::eval
