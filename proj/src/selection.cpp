#include "osteotex/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace osteotex::selection {

RankedFeatures RankedFeatures::from_scores(const Eigen::VectorXd& scores) {
  RankedFeatures r;
  r.entries.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores(i))) throw std::invalid_argument("ranking score is NaN");
    r.entries.push_back({i, scores(i)});
  }
  std::stable_sort(r.entries.begin(), r.entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.feature < b.feature;
  });
  return r;
}

namespace {

template <typename Key>
double entropy_of_counts(const std::map<Key, std::size_t>& counts, std::size_t n) {
  double h = 0.0;
  for (const auto& [value, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

double entropy(std::span<const int> column) {
  if (column.empty()) throw std::invalid_argument("entropy: empty column");
  std::map<int, std::size_t> counts;
  for (int v : column) ++counts[v];
  return entropy_of_counts(counts, column.size());
}

std::vector<int> discretize_equal_frequency(std::span<const double> column, int bins,
                                            std::span<const Eigen::Index> fit_rows) {
  if (bins < 2) throw std::invalid_argument("discretize: bins must be >= 2");
  if (fit_rows.empty()) throw std::invalid_argument("discretize: empty fit set");
  std::vector<double> fit;
  fit.reserve(fit_rows.size());
  for (Eigen::Index r : fit_rows) fit.push_back(column[static_cast<std::size_t>(r)]);
  std::sort(fit.begin(), fit.end());

  // Cut b sits between sorted positions floor(b m / bins) - 1 and floor(b m / bins).
  const std::size_t m = fit.size();
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) {
    const std::size_t cut = static_cast<std::size_t>(b) * m / static_cast<std::size_t>(bins);
    if (cut == 0 || cut >= m) continue;
    const double lo = fit[cut - 1], hi = fit[cut];
    edges.push_back(lo == hi ? lo : lo + (hi - lo) / 2.0);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<int> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), column[i]) - edges.begin());
  }
  return out;
}

std::vector<int> discretize_equal_frequency(std::span<const double> column, int bins) {
  std::vector<Eigen::Index> all(column.size());
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return discretize_equal_frequency(column, bins, all);
}

double symmetric_uncertainty(std::span<const int> attribute, std::span<const int> cls) {
  if (attribute.size() != cls.size()) {
    throw std::invalid_argument("symmetric_uncertainty: length mismatch");
  }
  if (attribute.empty()) throw std::invalid_argument("symmetric_uncertainty: empty input");
  std::map<int, std::size_t> ca, cc;
  std::map<std::pair<int, int>, std::size_t> joint;
  for (std::size_t i = 0; i < attribute.size(); ++i) {
    ++ca[attribute[i]];
    ++cc[cls[i]];
    ++joint[{attribute[i], cls[i]}];
  }
  const std::size_t n = attribute.size();
  const double h_attr = entropy_of_counts(ca, n);
  const double h_class = entropy_of_counts(cc, n);
  const double h_joint = entropy_of_counts(joint, n);
  const double denom = h_class + h_attr;
  if (denom <= 0.0) return 0.0;
  // H(C) - H(C|A) = H(C) + H(A) - H(C, A)
  const double gain = h_class - (h_joint - h_attr);
  return std::clamp(2.0 * gain / denom, 0.0, 1.0);
}

namespace {

std::vector<int> label_vector(const FeatureTable& table) {
  const Eigen::VectorXi& y = table.require_labels();
  return std::vector<int>(y.data(), y.data() + y.size());
}

std::vector<double> column_vector(const FeatureTable& table, Eigen::Index j) {
  std::vector<double> col(static_cast<std::size_t>(table.rows()));
  Eigen::Map<Eigen::VectorXd>(col.data(), table.rows()) = table.values().col(j);
  return col;
}

}  // namespace

RankedFeatures rank_su(const FeatureTable& table, int bins) {
  const std::vector<int> y = label_vector(table);
  if (y.empty()) throw std::invalid_argument("rank_su: empty table");
  Eigen::VectorXd scores(table.cols());
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    const std::vector<int> disc = discretize_equal_frequency(column_vector(table, j), bins);
    scores(j) = symmetric_uncertainty(disc, y);
  }
  return RankedFeatures::from_scores(scores);
}

Eigen::VectorXd relieff_weights(const FeatureTable& table, int k) {
  const Eigen::VectorXi& y = table.require_labels();
  const Eigen::Index n = table.rows();
  const Eigen::Index d = table.cols();
  if (k < 1) throw std::invalid_argument("relieff: k must be >= 1");
  const Eigen::Index n1 = y.sum();
  const Eigen::Index n0 = n - n1;
  if (n0 <= k || n1 <= k) {
    throw std::invalid_argument("relieff: each class needs more than k = " + std::to_string(k) +
                                " members (have " + std::to_string(n0) + " and " +
                                std::to_string(n1) + ")");
  }
  const Eigen::MatrixXd& x = table.values();
  const Eigen::RowVectorXd lo = x.colwise().minCoeff();
  const Eigen::RowVectorXd range = x.colwise().maxCoeff() - lo;
  Eigen::MatrixXd z(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (range(j) > 0.0) z.col(j) = (x.col(j).array() - lo(j)) / range(j);
    else z.col(j).setZero();
  }

  // Canonical order: lexicographic by raw values, then label.
  std::vector<Eigen::Index> canon(static_cast<std::size_t>(n));
  std::iota(canon.begin(), canon.end(), Eigen::Index{0});
  std::sort(canon.begin(), canon.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return y(a) < y(b);
  });
  std::vector<Eigen::Index> canon_rank(static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < canon.size(); ++r) canon_rank[static_cast<std::size_t>(canon[r])] = static_cast<Eigen::Index>(r);

  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = (z.row(i) - z.row(j)).cwiseAbs().sum();
    }
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  const double scale = 1.0 / (static_cast<double>(n) * k);
  std::vector<Eigen::Index> hits, misses;
  for (Eigen::Index i : canon) {
    hits.clear();
    misses.clear();
    for (Eigen::Index j : canon) {
      if (j == i) continue;
      (y(j) == y(i) ? hits : misses).push_back(j);
    }
    const auto nearer = [&](Eigen::Index a, Eigen::Index b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return canon_rank[static_cast<std::size_t>(a)] < canon_rank[static_cast<std::size_t>(b)];
    };
    std::partial_sort(hits.begin(), hits.begin() + k, hits.end(), nearer);
    std::partial_sort(misses.begin(), misses.begin() + k, misses.end(), nearer);
    Eigen::VectorXd contrib = Eigen::VectorXd::Zero(d);
    for (int m = 0; m < k; ++m) {
      contrib += (z.row(i) - z.row(misses[static_cast<std::size_t>(m)])).cwiseAbs().transpose();
    }
    for (int h = 0; h < k; ++h) {
      contrib -= (z.row(i) - z.row(hits[static_cast<std::size_t>(h)])).cwiseAbs().transpose();
    }
    w += contrib * scale;
  }
  return w;
}

RankedFeatures relieff(const FeatureTable& table, int k, std::uint64_t /*seed*/) {
  return RankedFeatures::from_scores(relieff_weights(table, k));
}

double welch_t(std::span<const double> class0, std::span<const double> class1) {
  if (class0.size() < 2 || class1.size() < 2) {
    throw std::invalid_argument("welch_t: each class needs at least 2 members");
  }
  const auto moments = [](std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss / static_cast<double>(v.size() - 1)};
  };
  const auto [m0, v0] = moments(class0);
  const auto [m1, v1] = moments(class1);
  const double se2 = v0 / static_cast<double>(class0.size()) + v1 / static_cast<double>(class1.size());
  if (se2 <= 0.0) {
    if (m1 == m0) return 0.0;
    return m1 > m0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return (m1 - m0) / std::sqrt(se2);
}

RankedFeatures ttest_scores(const FeatureTable& table) {
  const Eigen::VectorXi& y = table.require_labels();
  Eigen::VectorXd scores(table.cols());
  std::vector<double> c0, c1;
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    c0.clear();
    c1.clear();
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      (y(i) == kOsteoporotic ? c1 : c0).push_back(table.values()(i, j));
    }
    scores(j) = std::abs(welch_t(c0, c1));
  }
  return RankedFeatures::from_scores(scores);
}

std::vector<Eigen::Index> select_top_k(const RankedFeatures& ranking, std::size_t k) {
  if (k > ranking.size()) {
    throw std::invalid_argument("select_top_k: k = " + std::to_string(k) + " exceeds " +
                                std::to_string(ranking.size()) + " ranked features");
  }
  std::vector<Eigen::Index> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(ranking.entries[i].feature);
  return out;
}

FeatureTable merge_feature_sets(const FeatureTable& a, std::span<const Eigen::Index> a_cols,
                                const FeatureTable& b, std::span<const Eigen::Index> b_cols,
                                const std::string& a_prefix, const std::string& b_prefix) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("merge_feature_sets: row count mismatch (" +
                                std::to_string(a.rows()) + " vs " + std::to_string(b.rows()) + ")");
  }
  if (a.ids() != b.ids()) {
    throw std::invalid_argument("merge_feature_sets: sample ids or ordering differ");
  }
  const FeatureTable left = a.select_columns(a_cols, a_prefix);
  const FeatureTable right = b.select_columns(b_cols, b_prefix);
  std::vector<std::string> names = left.names();
  names.insert(names.end(), right.names().begin(), right.names().end());
  Eigen::MatrixXd values(a.rows(), left.cols() + right.cols());
  values << left.values(), right.values();
  return FeatureTable(a.ids(), std::move(names), std::move(values), a.labels());
}

Selector parse_selector(std::string_view name) {
  if (name == "su") return Selector::SymmetricUncertainty;
  if (name == "relieff") return Selector::ReliefF;
  if (name == "ttest") return Selector::TTest;
  if (name == "none") return Selector::None;
  throw std::invalid_argument("unknown selector '" + std::string(name) + "' (su, relieff, ttest, none)");
}

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::SymmetricUncertainty: return "su";
    case Selector::ReliefF: return "relieff";
    case Selector::TTest: return "ttest";
    case Selector::None: return "none";
  }
  return "?";
}

RankedFeatures rank_features(Selector selector, const FeatureTable& table,
                             const SelectorParams& params, std::uint64_t seed) {
  switch (selector) {
    case Selector::SymmetricUncertainty: return rank_su(table, params.su_bins);
    case Selector::ReliefF: return relieff(table, params.relief_neighbours, seed);
    case Selector::TTest: return ttest_scores(table);
    case Selector::None: break;
  }
  RankedFeatures r;
  for (Eigen::Index j = 0; j < table.cols(); ++j) r.entries.push_back({j, 0.0});
  return r;
}

std::string format_ranking_csv(const RankedFeatures& ranking, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "rank,feature,score\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& e = ranking.entries[i];
    out << (i + 1) << ',' << names.at(static_cast<std::size_t>(e.feature)) << ','
        << format_real(e.score) << '\n';
  }
  return out.str();
}

}  // namespace osteotex::selection
