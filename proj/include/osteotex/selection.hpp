#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "osteotex/feature_table.hpp"

namespace osteotex::selection {

struct RankEntry {
  Eigen::Index feature = 0;
  double score = 0.0;

  bool operator==(const RankEntry&) const = default;
};

/// Descending by score, ties broken by ascending feature index.
struct RankedFeatures {
  std::vector<RankEntry> entries;

  static RankedFeatures from_scores(const Eigen::VectorXd& scores);
  std::size_t size() const { return entries.size(); }
  bool operator==(const RankedFeatures&) const = default;
};

/// Shannon entropy in bits of a discrete column.
double entropy(std::span<const int> column);

/// Equal-frequency bin indices for every row, with edges fit on fit_rows
/// only. Edges falling on repeated values collapse, so fewer bins may result.
std::vector<int> discretize_equal_frequency(std::span<const double> column, int bins,
                                            std::span<const Eigen::Index> fit_rows);
std::vector<int> discretize_equal_frequency(std::span<const double> column, int bins);

/// 2 (H(C) - H(C|A)) / (H(C) + H(A)); 0 when both entropies vanish.
double symmetric_uncertainty(std::span<const int> attribute, std::span<const int> cls);

inline constexpr int kDefaultSuBins = 10;
inline constexpr int kDefaultReliefNeighbours = 10;

RankedFeatures rank_su(const FeatureTable& table, int bins = kDefaultSuBins);

/// Exhaustive Relief-F (every instance used once) with k nearest hits and
/// misses under Manhattan distance on range-normalized features.
/// Neighbour ties and summation follow a canonical sample order, so the
/// weights do not depend on row order. The seed is accepted for interface
/// uniformity; the exhaustive pass draws no random numbers.
Eigen::VectorXd relieff_weights(const FeatureTable& table, int k = kDefaultReliefNeighbours);
RankedFeatures relieff(const FeatureTable& table, int k = kDefaultReliefNeighbours,
                       std::uint64_t seed = 42);

/// Welch t statistic of class 1 against class 0. Zero standard error gives
/// 0 for equal means and +/-infinity otherwise.
double welch_t(std::span<const double> class0, std::span<const double> class1);

/// Ranks by |t|; infinite scores sort first.
RankedFeatures ttest_scores(const FeatureTable& table);

std::vector<Eigen::Index> select_top_k(const RankedFeatures& ranking, std::size_t k);

inline const std::string kDeepPrefix = "deep:";
inline const std::string kTraditionalPrefix = "trad:";

/// Column-concatenation of the chosen columns of two tables over the same
/// samples; names are prefixed by origin and labels come from `a`.
FeatureTable merge_feature_sets(const FeatureTable& a, std::span<const Eigen::Index> a_cols,
                                const FeatureTable& b, std::span<const Eigen::Index> b_cols,
                                const std::string& a_prefix = kDeepPrefix,
                                const std::string& b_prefix = kTraditionalPrefix);

enum class Selector { SymmetricUncertainty, ReliefF, TTest, None };

Selector parse_selector(std::string_view name);
std::string_view to_string(Selector s);

struct SelectorParams {
  int su_bins = kDefaultSuBins;
  int relief_neighbours = kDefaultReliefNeighbours;
};

/// Ranks with the chosen selector; Selector::None keeps the column order.
RankedFeatures rank_features(Selector selector, const FeatureTable& table,
                             const SelectorParams& params = {}, std::uint64_t seed = 42);

/// CSV `rank,feature,score`, rank starting at 1.
std::string format_ranking_csv(const RankedFeatures& ranking, const std::vector<std::string>& names);

}  // namespace osteotex::selection
