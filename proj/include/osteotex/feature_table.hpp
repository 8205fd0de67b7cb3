#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace osteotex {

/// Named per-image descriptor.
struct FeatureVector {
  std::vector<std::string> names;
  Eigen::VectorXd values;

  Eigen::Index size() const { return values.size(); }

  /// Appends other, prefixing its names.
  void append(const FeatureVector& other, const std::string& prefix = {});
};

/// Class labels: 0 = control, 1 = osteoporotic.
inline constexpr int kControl = 0;
inline constexpr int kOsteoporotic = 1;

/// n samples x d named features, optional labels. Rows are samples.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::vector<std::string> ids, std::vector<std::string> names,
               Eigen::MatrixXd values, std::optional<Eigen::VectorXi> labels = std::nullopt);

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& names() const { return names_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::optional<Eigen::VectorXi>& labels() const { return labels_; }
  bool has_labels() const { return labels_.has_value(); }
  const Eigen::VectorXi& require_labels() const;

  void set_labels(std::optional<Eigen::VectorXi> labels);

  /// Column index by name, or nullopt.
  std::optional<Eigen::Index> find(const std::string& name) const;

  FeatureTable select_rows(std::span<const Eigen::Index> rows) const;
  FeatureTable select_columns(std::span<const Eigen::Index> cols,
                              const std::string& name_prefix = {}) const;

 private:
  void validate() const;

  std::vector<std::string> ids_;
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
  std::optional<Eigen::VectorXi> labels_;
};

/// CSV: header `id,label,<names...>`, label `?` when unknown.
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);
std::string format_feature_csv(const FeatureTable& table);
FeatureTable read_feature_csv(const std::filesystem::path& path);
FeatureTable parse_feature_csv(const std::string& text);

/// Shortest round-trip decimal representation, never scientific for integers.
std::string format_real(double v);

/// Splits one CSV line; supports double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace osteotex
