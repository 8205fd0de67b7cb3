#include "osteotex/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/LU>

namespace osteotex::classifiers {

Kind parse_kind(std::string_view name) {
  if (name == "nb") return Kind::NaiveBayes;
  if (name == "svm") return Kind::LsSvm;
  if (name == "dtree") return Kind::DecisionTree;
  if (name == "rf") return Kind::RandomForest;
  if (name == "nn1") return Kind::NearestNeighbor;
  throw std::invalid_argument("unknown classifier '" + std::string(name) + "' (nb, svm, dtree, rf, nn1)");
}

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::NaiveBayes: return "nb";
    case Kind::LsSvm: return "svm";
    case Kind::DecisionTree: return "dtree";
    case Kind::RandomForest: return "rf";
    case Kind::NearestNeighbor: return "nn1";
  }
  return "?";
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - s.mean;
  s.scale = (centred.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::RowVectorXd Standardizer::apply(const Eigen::RowVectorXd& x) const {
  return (x - mean).array() / scale.array();
}

const TreeNode& TreeModel::leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0) {
    node = &nodes[static_cast<std::size_t>(x(node->feature) <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

namespace {

double binary_entropy(double pos, double total) {
  if (total <= 0.0 || pos <= 0.0 || pos >= total) return 0.0;
  const double p = pos / total;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, int max_depth, int min_split,
              int candidates, std::uint64_t seed)
      : x_(x), y_(y), max_depth_(max_depth), min_split_(min_split), candidates_(candidates), rng_(seed) {}

  TreeModel build(std::vector<Eigen::Index> rows) {
    TreeModel tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  struct Split {
    Eigen::Index feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
  };

  int grow(TreeModel& tree, std::vector<Eigen::Index> rows, int depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double pos = 0.0;
    for (Eigen::Index r : rows) pos += y_(r);
    const double n = static_cast<double>(rows.size());
    tree.nodes[static_cast<std::size_t>(index)].positive_fraction = pos / n;
    tree.nodes[static_cast<std::size_t>(index)].samples = static_cast<int>(rows.size());

    if (pos == 0.0 || pos == n || static_cast<int>(rows.size()) < min_split_ || depth >= max_depth_) {
      return index;
    }
    const Split split = best_split(rows, pos);
    if (split.feature < 0) return index;

    std::vector<Eigen::Index> left, right;
    for (Eigen::Index r : rows) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(tree, std::move(left), depth + 1);
    const int rt = grow(tree, std::move(right), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = l;
    node.right = rt;
    return index;
  }

  std::vector<Eigen::Index> candidate_features() {
    const Eigen::Index d = x_.cols();
    std::vector<Eigen::Index> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    if (candidates_ <= 0 || candidates_ >= d) return all;
    // Partial Fisher-Yates, then ascending so ties resolve by feature index.
    for (int i = 0; i < candidates_; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, d - 1);
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng_))]);
    }
    all.resize(static_cast<std::size_t>(candidates_));
    std::sort(all.begin(), all.end());
    return all;
  }

  Split best_split(const std::vector<Eigen::Index>& rows, double pos) {
    const double n = static_cast<double>(rows.size());
    const double parent = binary_entropy(pos, n);
    Split best;
    std::vector<std::pair<double, int>> sorted(rows.size());
    for (Eigen::Index f : candidate_features()) {
      for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {x_(rows[i], f), y_(rows[i])};
      std::sort(sorted.begin(), sorted.end());
      double left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_pos += sorted[i].second;
        const double lo = sorted[i].first, hi = sorted[i + 1].first;
        if (lo == hi) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double gain = parent - (nl / n) * binary_entropy(left_pos, nl) -
                            (nr / n) * binary_entropy(pos - left_pos, nr);
        if (gain > best.gain) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {f, mid, gain};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXi& y_;
  int max_depth_;
  int min_split_;
  int candidates_;
  std::mt19937_64 rng_;
};

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

NaiveBayesModel fit_nb(const Eigen::MatrixXd& z, const Eigen::VectorXi& y, double floor) {
  NaiveBayesModel m;
  const Eigen::Index d = z.cols();
  m.mean.setZero(2, d);
  m.variance.setZero(2, d);
  for (int c = 0; c < 2; ++c) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) == c) rows.push_back(i);
    }
    const Eigen::MatrixXd xc = z(rows, Eigen::all);
    m.mean.row(c) = xc.colwise().mean();
    m.variance.row(c) = ((xc.rowwise() - m.mean.row(c)).colwise().squaredNorm() /
                         static_cast<double>(rows.size()))
                            .cwiseMax(floor);
    m.log_prior(c) = std::log(static_cast<double>(rows.size()) / static_cast<double>(y.size()));
  }
  return m;
}

LsSvmModel fit_lssvm(const Eigen::MatrixXd& z, const Eigen::VectorXi& y, double gamma) {
  const Eigen::Index n = z.rows();
  const Eigen::VectorXd yy = (2 * y.array() - 1).cast<double>().matrix();
  const Eigen::MatrixXd omega = (yy * yy.transpose()).cwiseProduct(z * z.transpose());
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(n + 1);
  rhs(0) = 0.0;

  // Ridge escalation: 1/gamma grows tenfold per retry.
  double ridge = 1.0 / gamma;
  for (int attempt = 0; attempt < 6; ++attempt, ridge *= 10.0) {
    Eigen::MatrixXd a(n + 1, n + 1);
    a(0, 0) = 0.0;
    a.block(0, 1, 1, n) = yy.transpose();
    a.block(1, 0, n, 1) = yy;
    a.block(1, 1, n, n) = omega;
    a.block(1, 1, n, n).diagonal().array() += ridge;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const double residual = (a * sol - rhs).norm() / rhs.norm();
    if (!sol.allFinite() || residual > 1e-8) continue;
    LsSvmModel m;
    m.bias = sol(0);
    m.w = z.transpose() * sol.tail(n).cwiseProduct(yy);
    m.gamma_used = 1.0 / ridge;
    return m;
  }
  throw std::runtime_error("lssvm: linear system singular after regularization escalation");
}

}  // namespace

TreeModel grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXi& labels,
                    std::span<const Eigen::Index> rows, int max_depth, int min_samples_split,
                    int candidate_features, std::uint64_t seed) {
  TreeBuilder builder(x, labels, max_depth, min_samples_split, candidate_features, seed);
  return builder.build(std::vector<Eigen::Index>(rows.begin(), rows.end()));
}

TrainedModel fit(Kind kind, const Eigen::MatrixXd& x, const Eigen::VectorXi& labels,
                 const Params& params, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 1 || d < 1) throw std::invalid_argument("fit: empty training data");
  if (labels.size() != n) throw std::invalid_argument("fit: label count does not match rows");
  if (!x.allFinite()) throw std::invalid_argument("fit: non-finite training value");
  const Eigen::Index positives = labels.sum();
  const bool single_class = positives == 0 || positives == n;
  if (single_class && (kind == Kind::NaiveBayes || kind == Kind::LsSvm)) {
    throw std::invalid_argument(std::string("fit: ") + std::string(to_string(kind)) +
                                " needs both classes in the training data");
  }

  TrainedModel model;
  model.kind = kind;
  model.dimension = d;
  const bool scaled = kind == Kind::NaiveBayes || kind == Kind::LsSvm || kind == Kind::NearestNeighbor;
  if (scaled) {
    model.standardizer = Standardizer::fit(x);
  } else {
    model.standardizer.mean = Eigen::RowVectorXd::Zero(d);
    model.standardizer.scale = Eigen::RowVectorXd::Ones(d);
  }

  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});

  switch (kind) {
    case Kind::NaiveBayes:
      model.data = fit_nb(model.standardizer.apply(x), labels, params.nb_variance_floor);
      break;
    case Kind::LsSvm:
      model.data = fit_lssvm(model.standardizer.apply(x), labels, params.svm_gamma);
      break;
    case Kind::DecisionTree:
      model.data = grow_tree(x, labels, all, params.tree_max_depth, params.tree_min_samples_split, 0, seed);
      break;
    case Kind::RandomForest: {
      if (params.forest_trees < 1) throw std::invalid_argument("fit: forest needs at least one tree");
      const int mtry = params.forest_features_per_split > 0
                           ? params.forest_features_per_split
                           : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
      ForestModel forest;
      forest.trees.reserve(static_cast<std::size_t>(params.forest_trees));
      for (int t = 0; t < params.forest_trees; ++t) {
        std::mt19937_64 rng = derived_rng(seed, static_cast<std::uint64_t>(t));
        std::vector<Eigen::Index> rows = all;
        if (params.forest_bootstrap) {
          std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
          for (auto& r : rows) r = pick(rng);
        }
        forest.trees.push_back(grow_tree(x, labels, rows, params.tree_max_depth,
                                         params.tree_min_samples_split, mtry, rng()));
      }
      model.data = std::move(forest);
      break;
    }
    case Kind::NearestNeighbor:
      model.data = NearestNeighborModel{model.standardizer.apply(x), labels};
      break;
  }
  return model;
}

TrainedModel fit(Kind kind, const FeatureTable& train, const Params& params, std::uint64_t seed) {
  return fit(kind, train.values(), train.require_labels(), params, seed);
}

namespace {

struct ScoreVisitor {
  const TrainedModel& model;
  const Eigen::RowVectorXd& raw;

  double operator()(const NaiveBayesModel& m) const {
    const Eigen::RowVectorXd z = model.standardizer.apply(raw);
    Eigen::Vector2d logp;
    for (int c = 0; c < 2; ++c) {
      const Eigen::ArrayXd var = m.variance.row(c).transpose().array();
      const Eigen::ArrayXd diff = (z - m.mean.row(c)).transpose().array();
      logp(c) = m.log_prior(c) - 0.5 * ((2.0 * M_PI * var).log() + diff.square() / var).sum();
    }
    const double top = logp.maxCoeff();
    const double e0 = std::exp(logp(0) - top), e1 = std::exp(logp(1) - top);
    return e1 / (e0 + e1);
  }

  double operator()(const LsSvmModel& m) const {
    const double f = model.standardizer.apply(raw).dot(m.w.transpose()) + m.bias;
    return 1.0 / (1.0 + std::exp(-f));
  }

  double operator()(const TreeModel& m) const { return m.leaf_for(raw).positive_fraction; }

  double operator()(const ForestModel& m) const {
    int votes = 0;
    for (const auto& tree : m.trees) votes += label_from_score(tree.leaf_for(raw).positive_fraction);
    return static_cast<double>(votes) / static_cast<double>(m.trees.size());
  }

  double operator()(const NearestNeighborModel& m) const {
    const Eigen::RowVectorXd z = model.standardizer.apply(raw);
    constexpr double inf = std::numeric_limits<double>::infinity();
    double d_pos = inf, d_neg = inf;
    for (Eigen::Index i = 0; i < m.points.rows(); ++i) {
      const double dist = (m.points.row(i) - z).norm();
      double& slot = m.labels(i) == 1 ? d_pos : d_neg;
      slot = std::min(slot, dist);
    }
    if (d_neg == inf) return 1.0;
    if (d_pos == inf) return 0.0;
    if (d_pos + d_neg == 0.0) return 0.5;
    return d_neg / (d_pos + d_neg);
  }
};

}  // namespace

Prediction predict_one(const TrainedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& sample) {
  if (sample.size() != model.dimension) {
    throw std::invalid_argument("predict: sample has " + std::to_string(sample.size()) +
                                " features, model expects " + std::to_string(model.dimension));
  }
  const Eigen::RowVectorXd raw = sample;
  const double score = std::clamp(std::visit(ScoreVisitor{model, raw}, model.data), 0.0, 1.0);
  return {label_from_score(score), score};
}

std::vector<Prediction> predict(const TrainedModel& model, const Eigen::MatrixXd& samples) {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) out.push_back(predict_one(model, samples.row(i)));
  return out;
}

}  // namespace osteotex::classifiers
