#include "osteotex/model_io.hpp"

#include <numeric>

namespace osteotex {

namespace {

using namespace classifiers;

enum class ElementType : std::uint8_t { F64 = 0, I64 = 1, Strings = 2 };

struct Entry {
  ElementType type = ElementType::F64;
  std::vector<std::uint32_t> dims;
  std::vector<double> reals;
  std::vector<std::int64_t> ints;
  std::vector<std::string> strings;

  std::size_t numel() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t b) { return a * b; });
  }
};

using Entries = std::map<std::string, Entry>;

template <typename Derived>
Entry real_entry(const Eigen::DenseBase<Derived>& m, bool matrix) {
  Entry e;
  e.type = ElementType::F64;
  if (matrix) e.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  else e.dims = {static_cast<std::uint32_t>(m.size())};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) e.reals.push_back(m(i, j));
  }
  return e;
}

Entry int_entry(std::vector<std::int64_t> v) {
  Entry e;
  e.type = ElementType::I64;
  e.dims = {static_cast<std::uint32_t>(v.size())};
  e.ints = std::move(v);
  return e;
}

Entry string_entry(std::vector<std::string> v) {
  Entry e;
  e.type = ElementType::Strings;
  e.dims = {static_cast<std::uint32_t>(v.size())};
  e.strings = std::move(v);
  return e;
}

const Entry& require(const Entries& entries, const std::string& name, ElementType type) {
  const auto it = entries.find(name);
  if (it == entries.end()) throw FormatError("OTMD missing entry '" + name + "'");
  if (it->second.type != type) throw FormatError("OTMD entry '" + name + "' has wrong type");
  return it->second;
}

Eigen::MatrixXd real_matrix(const Entries& entries, const std::string& name) {
  const Entry& e = require(entries, name, ElementType::F64);
  const Eigen::Index rows = e.dims.size() == 2 ? e.dims[0] : static_cast<Eigen::Index>(e.reals.size());
  const Eigen::Index cols = e.dims.size() == 2 ? e.dims[1] : 1;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = e.reals[static_cast<std::size_t>(i * cols + j)];
  }
  return m;
}

double real_scalar(const Entries& entries, const std::string& name) {
  const Entry& e = require(entries, name, ElementType::F64);
  if (e.reals.size() != 1) throw FormatError("OTMD entry '" + name + "' is not a scalar");
  return e.reals[0];
}

const std::vector<std::int64_t>& ints(const Entries& entries, const std::string& name) {
  return require(entries, name, ElementType::I64).ints;
}

void put_tree(Entries& out, const std::string& prefix, const std::vector<TreeNode>& nodes) {
  std::vector<std::int64_t> feature, left, right, samples;
  Eigen::VectorXd threshold(static_cast<Eigen::Index>(nodes.size()));
  Eigen::VectorXd fraction(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    feature.push_back(nodes[i].feature);
    left.push_back(nodes[i].left);
    right.push_back(nodes[i].right);
    samples.push_back(nodes[i].samples);
    threshold(static_cast<Eigen::Index>(i)) = nodes[i].threshold;
    fraction(static_cast<Eigen::Index>(i)) = nodes[i].positive_fraction;
  }
  out[prefix + ".feature"] = int_entry(std::move(feature));
  out[prefix + ".left"] = int_entry(std::move(left));
  out[prefix + ".right"] = int_entry(std::move(right));
  out[prefix + ".samples"] = int_entry(std::move(samples));
  out[prefix + ".threshold"] = real_entry(threshold, false);
  out[prefix + ".positive_fraction"] = real_entry(fraction, false);
}

std::vector<TreeNode> get_tree(const Entries& in, const std::string& prefix, std::size_t offset,
                               std::size_t count) {
  const auto& feature = ints(in, prefix + ".feature");
  const auto& left = ints(in, prefix + ".left");
  const auto& right = ints(in, prefix + ".right");
  const auto& samples = ints(in, prefix + ".samples");
  const auto& threshold = require(in, prefix + ".threshold", ElementType::F64).reals;
  const auto& fraction = require(in, prefix + ".positive_fraction", ElementType::F64).reals;
  if (offset + count > feature.size() || feature.size() != left.size() || feature.size() != right.size() ||
      feature.size() != samples.size() || feature.size() != threshold.size() ||
      feature.size() != fraction.size()) {
    throw FormatError("OTMD tree arrays inconsistent");
  }
  std::vector<TreeNode> nodes(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = offset + i;
    nodes[i] = {static_cast<int>(feature[k]), threshold[k], static_cast<int>(left[k]),
                static_cast<int>(right[k]), fraction[k], static_cast<int>(samples[k])};
    const auto valid = [count](std::int64_t c) { return c > 0 && static_cast<std::size_t>(c) < count; };
    if (nodes[i].feature >= 0 && (!valid(nodes[i].left) || !valid(nodes[i].right))) {
      throw FormatError("OTMD tree child index out of range");
    }
  }
  if (nodes.empty()) throw FormatError("OTMD empty tree");
  return nodes;
}

Entries model_entries(const ModelBundle& bundle) {
  const TrainedModel& m = bundle.model;
  Entries out;
  out["kind"] = int_entry({static_cast<std::int64_t>(m.kind)});
  out["dimension"] = int_entry({static_cast<std::int64_t>(m.dimension)});
  out["standardizer.mean"] = real_entry(m.standardizer.mean, false);
  out["standardizer.scale"] = real_entry(m.standardizer.scale, false);
  out["feature_names"] = string_entry(bundle.feature_names);
  out["metadata"] = string_entry({bundle.metadata_json});

  if (const auto* nb = std::get_if<NaiveBayesModel>(&m.data)) {
    out["nb.log_prior"] = real_entry(nb->log_prior, false);
    out["nb.mean"] = real_entry(nb->mean, true);
    out["nb.variance"] = real_entry(nb->variance, true);
  } else if (const auto* svm = std::get_if<LsSvmModel>(&m.data)) {
    out["svm.w"] = real_entry(svm->w, false);
    out["svm.bias"] = real_entry(Eigen::VectorXd::Constant(1, svm->bias), false);
    out["svm.gamma"] = real_entry(Eigen::VectorXd::Constant(1, svm->gamma_used), false);
  } else if (const auto* tree = std::get_if<TreeModel>(&m.data)) {
    put_tree(out, "tree", tree->nodes);
  } else if (const auto* forest = std::get_if<ForestModel>(&m.data)) {
    std::vector<TreeNode> all;
    std::vector<std::int64_t> sizes;
    for (const auto& t : forest->trees) {
      sizes.push_back(static_cast<std::int64_t>(t.nodes.size()));
      all.insert(all.end(), t.nodes.begin(), t.nodes.end());
    }
    out["forest.tree_sizes"] = int_entry(std::move(sizes));
    put_tree(out, "forest", all);
  } else if (const auto* nn = std::get_if<NearestNeighborModel>(&m.data)) {
    out["nn1.points"] = real_entry(nn->points, true);
    out["nn1.labels"] = int_entry(std::vector<std::int64_t>(nn->labels.data(), nn->labels.data() + nn->labels.size()));
  }
  return out;
}

ModelBundle bundle_from_entries(const Entries& in) {
  ModelBundle bundle;
  TrainedModel& m = bundle.model;
  const auto& kind = ints(in, "kind");
  if (kind.size() != 1 || kind[0] < 0 || kind[0] > static_cast<std::int64_t>(Kind::NearestNeighbor)) {
    throw FormatError("OTMD invalid classifier kind");
  }
  m.kind = static_cast<Kind>(kind[0]);
  m.dimension = static_cast<Eigen::Index>(ints(in, "dimension").at(0));
  m.standardizer.mean = real_matrix(in, "standardizer.mean").transpose();
  m.standardizer.scale = real_matrix(in, "standardizer.scale").transpose();
  if (m.standardizer.mean.size() != m.dimension || m.standardizer.scale.size() != m.dimension) {
    throw FormatError("OTMD standardizer dimension mismatch");
  }
  bundle.feature_names = require(in, "feature_names", ElementType::Strings).strings;
  const auto& meta = require(in, "metadata", ElementType::Strings).strings;
  bundle.metadata_json = meta.empty() ? "{}" : meta.front();

  switch (m.kind) {
    case Kind::NaiveBayes: {
      NaiveBayesModel nb;
      nb.log_prior = real_matrix(in, "nb.log_prior");
      nb.mean = real_matrix(in, "nb.mean");
      nb.variance = real_matrix(in, "nb.variance");
      m.data = std::move(nb);
      break;
    }
    case Kind::LsSvm:
      m.data = LsSvmModel{real_matrix(in, "svm.w"), real_scalar(in, "svm.bias"), real_scalar(in, "svm.gamma")};
      break;
    case Kind::DecisionTree:
      m.data = TreeModel{get_tree(in, "tree", 0, ints(in, "tree.feature").size())};
      break;
    case Kind::RandomForest: {
      ForestModel forest;
      std::size_t offset = 0;
      for (std::int64_t size : ints(in, "forest.tree_sizes")) {
        if (size < 1) throw FormatError("OTMD invalid tree size");
        forest.trees.push_back(TreeModel{get_tree(in, "forest", offset, static_cast<std::size_t>(size))});
        offset += static_cast<std::size_t>(size);
      }
      m.data = std::move(forest);
      break;
    }
    case Kind::NearestNeighbor: {
      NearestNeighborModel nn;
      nn.points = real_matrix(in, "nn1.points");
      const auto& labels = ints(in, "nn1.labels");
      nn.labels.resize(static_cast<Eigen::Index>(labels.size()));
      for (std::size_t i = 0; i < labels.size(); ++i) nn.labels(static_cast<Eigen::Index>(i)) = static_cast<int>(labels[i]);
      m.data = std::move(nn);
      break;
    }
  }
  return bundle;
}

}  // namespace

std::string encode_model(const ModelBundle& bundle) {
  const Entries entries = model_entries(bundle);
  ByteWriter rec;
  for (const auto& [name, e] : entries) {
    rec.u16(static_cast<std::uint16_t>(name.size()));
    rec.bytes(name);
    rec.u8(static_cast<std::uint8_t>(e.type));
    rec.u8(static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) rec.u32(d);
    switch (e.type) {
      case ElementType::F64:
        for (double v : e.reals) rec.f64(v);
        break;
      case ElementType::I64:
        for (auto v : e.ints) rec.i64(v);
        break;
      case ElementType::Strings:
        for (const auto& s : e.strings) {
          rec.u32(static_cast<std::uint32_t>(s.size()));
          rec.bytes(s);
        }
        break;
    }
  }
  ByteWriter out;
  out.bytes(std::string_view(kModelMagic, 4));
  out.u32(kModelFormatVersion);
  out.u32(static_cast<std::uint32_t>(entries.size()));
  out.bytes(rec.data());
  out.u32(crc32(rec.data()));
  return std::move(out.data());
}

ModelBundle decode_model(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != std::string_view(kModelMagic, 4)) {
    throw FormatError("not an OTMD model file (bad magic)");
  }
  ByteReader head(bytes.substr(4, 8));
  const std::uint32_t version = head.u32();
  if (version != kModelFormatVersion) throw FormatError("unsupported OTMD version " + std::to_string(version));
  const std::uint32_t count = head.u32();
  const std::string_view records = bytes.substr(12, bytes.size() - 16);
  if (crc32(records) != ByteReader(bytes.substr(bytes.size() - 4)).u32()) {
    throw FormatError("OTMD CRC mismatch");
  }
  ByteReader rec(records);
  Entries entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(rec.bytes(rec.u16()));
    Entry e;
    const std::uint8_t type = rec.u8();
    if (type > 2) throw FormatError("OTMD unknown element type in '" + name + "'");
    e.type = static_cast<ElementType>(type);
    const std::uint8_t rank = rec.u8();
    for (std::uint8_t r = 0; r < rank; ++r) e.dims.push_back(rec.u32());
    const std::size_t n = e.numel();
    if (n > rec.remaining()) throw FormatError("OTMD payload truncated in '" + name + "'");
    for (std::size_t k = 0; k < n; ++k) {
      switch (e.type) {
        case ElementType::F64: e.reals.push_back(rec.f64()); break;
        case ElementType::I64: e.ints.push_back(rec.i64()); break;
        case ElementType::Strings: e.strings.emplace_back(rec.bytes(rec.u32())); break;
      }
    }
    entries.emplace(std::move(name), std::move(e));
  }
  if (rec.remaining() != 0) throw FormatError("OTMD trailing bytes after entries");
  return bundle_from_entries(entries);
}

void save_model(const std::filesystem::path& path, const ModelBundle& bundle) {
  write_file_bytes(path.string(), encode_model(bundle));
}

ModelBundle load_model(const std::filesystem::path& path) {
  return decode_model(read_file_bytes(path.string()));
}

}  // namespace osteotex
