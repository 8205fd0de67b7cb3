#include "osteotex/feature_table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace osteotex {

void FeatureVector::append(const FeatureVector& other, const std::string& prefix) {
  for (const auto& n : other.names) names.push_back(prefix + n);
  Eigen::VectorXd merged(values.size() + other.values.size());
  merged << values, other.values;
  values = std::move(merged);
}

FeatureTable::FeatureTable(std::vector<std::string> ids, std::vector<std::string> names,
                           Eigen::MatrixXd values, std::optional<Eigen::VectorXi> labels)
    : ids_(std::move(ids)),
      names_(std::move(names)),
      values_(std::move(values)),
      labels_(std::move(labels)) {
  validate();
}

void FeatureTable::validate() const {
  if (static_cast<Eigen::Index>(ids_.size()) != values_.rows()) {
    throw std::invalid_argument("FeatureTable: id count does not match row count");
  }
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw std::invalid_argument("FeatureTable: name count does not match column count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) {
      throw std::invalid_argument("FeatureTable: duplicate feature name '" + n + "'");
    }
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("FeatureTable: non-finite value");
  }
  if (labels_) {
    if (labels_->size() != values_.rows()) {
      throw std::invalid_argument("FeatureTable: label count does not match row count");
    }
    for (Eigen::Index i = 0; i < labels_->size(); ++i) {
      const int l = (*labels_)(i);
      if (l != kControl && l != kOsteoporotic) {
        throw std::invalid_argument("FeatureTable: labels must be 0 or 1");
      }
    }
  }
}

const Eigen::VectorXi& FeatureTable::require_labels() const {
  if (!labels_) throw std::invalid_argument("FeatureTable: labels required");
  return *labels_;
}

void FeatureTable::set_labels(std::optional<Eigen::VectorXi> labels) {
  labels_ = std::move(labels);
  validate();
}

std::optional<Eigen::Index> FeatureTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

FeatureTable FeatureTable::select_rows(std::span<const Eigen::Index> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  Eigen::MatrixXd vals(static_cast<Eigen::Index>(rows.size()), values_.cols());
  std::optional<Eigen::VectorXi> labels;
  if (labels_) labels = Eigen::VectorXi(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index r = rows[i];
    if (r < 0 || r >= values_.rows()) throw std::out_of_range("select_rows: row index");
    ids.push_back(ids_[static_cast<std::size_t>(r)]);
    vals.row(static_cast<Eigen::Index>(i)) = values_.row(r);
    if (labels) (*labels)(static_cast<Eigen::Index>(i)) = (*labels_)(r);
  }
  return FeatureTable(std::move(ids), names_, std::move(vals), std::move(labels));
}

FeatureTable FeatureTable::select_columns(std::span<const Eigen::Index> cols,
                                          const std::string& name_prefix) const {
  std::vector<std::string> names;
  names.reserve(cols.size());
  Eigen::MatrixXd vals(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const Eigen::Index c = cols[j];
    if (c < 0 || c >= values_.cols()) throw std::out_of_range("select_columns: column index");
    names.push_back(name_prefix + names_[static_cast<std::size_t>(c)]);
    vals.col(static_cast<Eigen::Index>(j)) = values_.col(c);
  }
  return FeatureTable(ids_, std::move(names), std::move(vals), labels_);
}

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_real: conversion failed");
  return std::string(buf, end);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error("feature CSV line " + std::to_string(line_no) +
                             ": invalid number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_feature_csv(const FeatureTable& table) {
  std::ostringstream out;
  out << "id,label";
  for (const auto& n : table.names()) out << ',' << quote_if_needed(n);
  out << '\n';
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    out << quote_if_needed(table.ids()[static_cast<std::size_t>(i)]) << ',';
    if (table.labels()) out << (*table.labels())(i);
    else out << '?';
    for (Eigen::Index j = 0; j < table.cols(); ++j) out << ',' << format_real(table.values()(i, j));
    out << '\n';
  }
  return out.str();
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_feature_csv(table);
}

FeatureTable parse_feature_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("feature CSV: missing header");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "id" || header[1] != "label") {
    throw std::runtime_error("feature CSV: header must start with id,label");
  }
  std::vector<std::string> names(header.begin() + 2, header.end());
  const auto d = static_cast<Eigen::Index>(names.size());

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t unknown = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != d + 2) {
      throw std::runtime_error("feature CSV line " + std::to_string(line_no) + ": expected " +
                               std::to_string(d + 2) + " fields, found " +
                               std::to_string(fields.size()));
    }
    ids.push_back(fields[0]);
    if (fields[1] == "?") {
      ++unknown;
      labels.push_back(-1);
    } else if (fields[1] == "0" || fields[1] == "1") {
      labels.push_back(fields[1][0] - '0');
    } else {
      throw std::runtime_error("feature CSV line " + std::to_string(line_no) + ": label must be 0, 1 or ?");
    }
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
      row[static_cast<std::size_t>(j)] = parse_double(fields[static_cast<std::size_t>(j) + 2], line_no);
    }
    rows.push_back(std::move(row));
  }
  if (unknown != 0 && unknown != rows.size()) {
    throw std::runtime_error("feature CSV: mixture of known and unknown ('?') labels");
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd values(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  std::optional<Eigen::VectorXi> lab;
  if (n > 0 && unknown == 0) lab = Eigen::Map<const Eigen::VectorXi>(labels.data(), n);
  return FeatureTable(std::move(ids), std::move(names), std::move(values), std::move(lab));
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_feature_csv(buf.str());
}

}  // namespace osteotex
