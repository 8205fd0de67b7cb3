#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "osteotex/feature_table.hpp"

namespace osteotex::classifiers {

enum class Kind { NaiveBayes, LsSvm, DecisionTree, RandomForest, NearestNeighbor };

/// CLI names: nb, svm, dtree, rf, nn1.
Kind parse_kind(std::string_view name);
std::string_view to_string(Kind kind);

struct Params {
  double nb_variance_floor = 1e-9;
  double svm_gamma = 1.0;
  int tree_max_depth = 25;
  int tree_min_samples_split = 2;
  int forest_trees = 100;
  bool forest_bootstrap = true;
  int forest_features_per_split = 0;  // 0 selects ceil(sqrt(d))
};

/// Per-feature z-scoring fit on training data; zero spread maps to 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::RowVectorXd apply(const Eigen::RowVectorXd& x) const;
};

struct NaiveBayesModel {
  Eigen::Vector2d log_prior;
  Eigen::MatrixXd mean;      // 2 x d
  Eigen::MatrixXd variance;  // 2 x d
};

/// Linear LS-SVM reduced to w . x + b.
struct LsSvmModel {
  Eigen::VectorXd w;
  double bias = 0.0;
  double gamma_used = 1.0;
};

/// Flat binary tree; node 0 is the root. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  // go left iff x[feature] <= threshold
  int left = -1;
  int right = -1;
  double positive_fraction = 0.0;
  int samples = 0;
};

struct TreeModel {
  std::vector<TreeNode> nodes;
  const TreeNode& leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct ForestModel {
  std::vector<TreeModel> trees;
};

struct NearestNeighborModel {
  Eigen::MatrixXd points;  // standardized
  Eigen::VectorXi labels;
};

using ModelData =
    std::variant<NaiveBayesModel, LsSvmModel, TreeModel, ForestModel, NearestNeighborModel>;

/// Immutable after fit; safe for concurrent predict calls.
struct TrainedModel {
  Kind kind = Kind::NaiveBayes;
  Eigen::Index dimension = 0;
  Standardizer standardizer;  // identity for tree models
  ModelData data;
};

struct Prediction {
  int label = 0;
  double score = 0.0;  // positive-class score in [0, 1]; label = score >= 0.5
};

inline int label_from_score(double score) { return score >= 0.5 ? 1 : 0; }

TrainedModel fit(Kind kind, const Eigen::MatrixXd& x, const Eigen::VectorXi& labels,
                 const Params& params = {}, std::uint64_t seed = 42);
TrainedModel fit(Kind kind, const FeatureTable& train, const Params& params = {},
                 std::uint64_t seed = 42);

Prediction predict_one(const TrainedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& sample);
std::vector<Prediction> predict(const TrainedModel& model, const Eigen::MatrixXd& samples);

/// Tree growth shared by dtree and rforest. candidate_features = 0 uses all
/// features in ascending order at every split.
TreeModel grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXi& labels,
                    std::span<const Eigen::Index> rows, int max_depth, int min_samples_split,
                    int candidate_features, std::uint64_t seed);

}  // namespace osteotex::classifiers
