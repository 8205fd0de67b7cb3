#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "osteotex/feature_table.hpp"
#include "osteotex/image.hpp"

namespace osteotex::texture {

/// Pixel displacement; dx moves right, dy moves down.
struct Offset {
  int dx = 1;
  int dy = 0;
};

/// Offsets for 0, 45, 90 and 135 degrees at distance 1.
inline constexpr std::array<Offset, 4> kStandardOffsets{{{1, 0}, {1, -1}, {0, -1}, {-1, -1}}};
inline constexpr std::array<int, 4> kStandardAngles{0, 45, 90, 135};

inline constexpr int kDefaultGlcmLevels = 8;
inline constexpr int kDefaultGlrlmLevels = 8;

/// Gray-level co-occurrence matrix. counts(a, b) counts pairs (p, p + offset)
/// with q(p) = a and q(p + offset) = b.
struct Glcm {
  int levels = 0;
  Offset offset;
  bool symmetric = false;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  Eigen::MatrixXd probs;
};

Glcm compute_glcm(const QuantizedImage& img, Offset offset, bool symmetric);

/// Order of the statistics returned by glcm_stats.
inline constexpr std::array<const char*, 11> kGlcmStatNames{
    "contrast",      "dissimilarity", "homogeneity",        "energy",
    "entropy",       "correlation",   "max_probability",    "cluster_shade",
    "cluster_prominence", "autocorrelation", "variance"};

/// Haralick-family statistics over probs with 0-based gray-level indices.
/// Energy is the angular second moment, entropy is in bits, correlation is 0
/// when a marginal variance vanishes.
FeatureVector glcm_stats(const Glcm& g);

/// 11 statistics x 4 angles, angle-major: glcm_<stat>_<angle>.
FeatureVector extract_glcm_features(const GrayImage& img, int levels = kDefaultGlcmLevels);

/// Basic 3x3 LBP. Neighbours clockwise from top-left, most significant bit
/// first; a bit is 1 iff neighbour >= centre. Output is (w-2) x (h-2).
QuantizedImage compute_lbp_image(const GrayImage& img);

enum class LbpMode { Histogram, Scalar };

/// Histogram: 256 normalized bins lbp_hist_000..255. Scalar: lbp_mean.
FeatureVector lbp_features(const QuantizedImage& codes, LbpMode mode);

enum class RunDirection { Deg0 = 0, Deg45 = 45, Deg90 = 90, Deg135 = 135 };

inline constexpr std::array<RunDirection, 4> kRunDirections{RunDirection::Deg0, RunDirection::Deg45,
                                                            RunDirection::Deg90, RunDirection::Deg135};

/// counts(i, j - 1) = number of maximal runs of level i with length j.
struct RunLengthMatrix {
  int levels = 0;
  int max_run = 0;
  RunDirection direction = RunDirection::Deg0;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;

  std::int64_t count(int level, int length) const { return counts(level, length - 1); }
  std::int64_t total_runs() const { return counts.sum(); }
};

RunLengthMatrix compute_glrlm(const QuantizedImage& img, RunDirection direction);

inline constexpr std::array<const char*, 5> kGlrlmStatNames{"sre", "lre", "gln", "rln", "rp"};

/// Galloway statistics: short-run emphasis, long-run emphasis, gray-level
/// non-uniformity, run-length non-uniformity, run percentage.
FeatureVector glrlm_features(const RunLengthMatrix& m, std::int64_t n_pixels);

struct TraditionalOptions {
  int glcm_levels = kDefaultGlcmLevels;
  int glrlm_levels = kDefaultGlrlmLevels;
};

/// 44 GLCM + 256 LBP histogram + LBP mean + 5 x 4 GLRLM = 321 features.
FeatureVector extract_traditional_features(const GrayImage& img, const TraditionalOptions& opts = {});

/// Names produced by extract_traditional_features, in order.
std::vector<std::string> traditional_feature_names();

}  // namespace osteotex::texture
