#include "osteotex/texture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace osteotex::texture {

Glcm compute_glcm(const QuantizedImage& img, Offset offset, bool symmetric) {
  if (offset.dx == 0 && offset.dy == 0) {
    throw std::invalid_argument("compute_glcm: degenerate offset (0, 0)");
  }
  const int w = img.width();
  const int h = img.height();
  if (std::abs(offset.dx) >= w || std::abs(offset.dy) >= h) {
    throw std::invalid_argument("compute_glcm: image too small to contain any pair for offset");
  }
  const int L = img.levels;
  Glcm g;
  g.levels = L;
  g.offset = offset;
  g.symmetric = symmetric;
  g.counts.setZero(L, L);

  const int x0 = std::max(0, -offset.dx), x1 = std::min(w, w - offset.dx);
  const int y0 = std::max(0, -offset.dy), y1 = std::min(h, h - offset.dy);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      ++g.counts(img(x, y), img(x + offset.dx, y + offset.dy));
    }
  }
  if (symmetric) {
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> t = g.counts.transpose();
    g.counts += t;
  }
  const auto total = static_cast<double>(g.counts.sum());
  g.probs = g.counts.cast<double>() / total;
  return g;
}

FeatureVector glcm_stats(const Glcm& g) {
  const Eigen::MatrixXd& p = g.probs;
  const int L = static_cast<int>(p.rows());

  double mu_i = 0.0, mu_j = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      mu_i += i * p(i, j);
      mu_j += j * p(i, j);
    }
  }
  double var_i = 0.0, var_j = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      var_i += (i - mu_i) * (i - mu_i) * p(i, j);
      var_j += (j - mu_j) * (j - mu_j) * p(i, j);
    }
  }

  double contrast = 0, dissimilarity = 0, homogeneity = 0, energy = 0, entropy = 0;
  double covariance = 0, max_prob = 0, shade = 0, prominence = 0, autocorr = 0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      const double v = p(i, j);
      const double d = i - j;
      contrast += d * d * v;
      dissimilarity += std::abs(d) * v;
      homogeneity += v / (1.0 + d * d);
      energy += v * v;
      if (v > 0.0) entropy -= v * std::log2(v);
      covariance += (i - mu_i) * (j - mu_j) * v;
      max_prob = std::max(max_prob, v);
      const double s = i + j - mu_i - mu_j;
      shade += s * s * s * v;
      prominence += s * s * s * s * v;
      autocorr += static_cast<double>(i) * j * v;
    }
  }
  const double sd = std::sqrt(var_i * var_j);
  const double correlation = sd > 0.0 ? covariance / sd : 0.0;

  FeatureVector fv;
  fv.names.assign(kGlcmStatNames.begin(), kGlcmStatNames.end());
  fv.values.resize(11);
  fv.values << contrast, dissimilarity, homogeneity, energy, entropy, correlation, max_prob, shade,
      prominence, autocorr, var_i;
  return fv;
}

FeatureVector extract_glcm_features(const GrayImage& img, int levels) {
  const QuantizedImage q = quantize(img, levels);
  FeatureVector out;
  for (std::size_t a = 0; a < kStandardOffsets.size(); ++a) {
    const FeatureVector stats = glcm_stats(compute_glcm(q, kStandardOffsets[a], true));
    FeatureVector named;
    named.values = stats.values;
    for (const auto& n : stats.names) {
      named.names.push_back("glcm_" + n + "_" + std::to_string(kStandardAngles[a]));
    }
    out.append(named);
  }
  return out;
}

QuantizedImage compute_lbp_image(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw std::invalid_argument("compute_lbp_image: image must be at least 3x3");
  }
  // Clockwise from top-left; the first neighbour is the most significant bit.
  static constexpr std::array<std::array<int, 2>, 8> kNeighbours{
      {{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};
  QuantizedImage codes;
  codes.levels = 256;
  codes.bins.resize(h - 2, w - 2);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const int centre = img(x, y);
      int code = 0;
      for (const auto& [nx, ny] : kNeighbours) {
        code = (code << 1) | (img(x + nx, y + ny) >= centre ? 1 : 0);
      }
      codes.bins(y - 1, x - 1) = code;
    }
  }
  return codes;
}

FeatureVector lbp_features(const QuantizedImage& codes, LbpMode mode) {
  if (codes.bins.size() == 0) {
    throw std::invalid_argument("lbp_features: empty code image");
  }
  FeatureVector fv;
  if (mode == LbpMode::Scalar) {
    fv.names = {"lbp_mean"};
    fv.values = Eigen::VectorXd::Constant(1, codes.bins.cast<double>().mean());
    return fv;
  }
  fv.values = Eigen::VectorXd::Zero(256);
  for (Eigen::Index i = 0; i < codes.bins.size(); ++i) fv.values(codes.bins.data()[i]) += 1.0;
  fv.values /= static_cast<double>(codes.bins.size());
  fv.names.reserve(256);
  char buf[16];
  for (int b = 0; b < 256; ++b) {
    std::snprintf(buf, sizeof(buf), "lbp_hist_%03d", b);
    fv.names.emplace_back(buf);
  }
  return fv;
}

namespace {

// Scan lines for a direction; each line is a list of (x, y) in walking order.
template <typename Visit>
void for_each_line(int w, int h, RunDirection dir, Visit&& visit) {
  std::vector<std::pair<int, int>> line;
  switch (dir) {
    case RunDirection::Deg0:
      for (int y = 0; y < h; ++y) {
        line.clear();
        for (int x = 0; x < w; ++x) line.emplace_back(x, y);
        visit(line);
      }
      break;
    case RunDirection::Deg90:
      for (int x = 0; x < w; ++x) {
        line.clear();
        for (int y = h - 1; y >= 0; --y) line.emplace_back(x, y);
        visit(line);
      }
      break;
    case RunDirection::Deg45:
      // x + y constant, walking up and to the right.
      for (int s = 0; s <= w + h - 2; ++s) {
        line.clear();
        for (int x = std::max(0, s - (h - 1)); x <= std::min(w - 1, s); ++x) line.emplace_back(x, s - x);
        visit(line);
      }
      break;
    case RunDirection::Deg135:
      // x - y constant, walking up and to the left.
      for (int d = -(h - 1); d <= w - 1; ++d) {
        line.clear();
        for (int x = std::min(w - 1, d + h - 1); x >= std::max(0, d); --x) line.emplace_back(x, x - d);
        visit(line);
      }
      break;
  }
}

}  // namespace

RunLengthMatrix compute_glrlm(const QuantizedImage& img, RunDirection direction) {
  const int w = img.width();
  const int h = img.height();
  if (w < 1 || h < 1) throw std::invalid_argument("compute_glrlm: empty image");
  RunLengthMatrix m;
  m.levels = img.levels;
  m.direction = direction;
  switch (direction) {
    case RunDirection::Deg0: m.max_run = w; break;
    case RunDirection::Deg90: m.max_run = h; break;
    default: m.max_run = std::min(w, h); break;
  }
  m.counts.setZero(img.levels, m.max_run);
  for_each_line(w, h, direction, [&](const std::vector<std::pair<int, int>>& line) {
    std::size_t start = 0;
    while (start < line.size()) {
      const int level = img(line[start].first, line[start].second);
      std::size_t end = start + 1;
      while (end < line.size() && img(line[end].first, line[end].second) == level) ++end;
      ++m.counts(level, static_cast<Eigen::Index>(end - start) - 1);
      start = end;
    }
  });
  return m;
}

FeatureVector glrlm_features(const RunLengthMatrix& m, std::int64_t n_pixels) {
  const double runs = static_cast<double>(m.total_runs());
  if (runs <= 0.0) throw std::invalid_argument("glrlm_features: matrix has no runs");
  if (n_pixels <= 0) throw std::invalid_argument("glrlm_features: pixel count must be positive");
  const Eigen::MatrixXd c = m.counts.cast<double>();
  double sre = 0.0, lre = 0.0;
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    const double len = static_cast<double>(j + 1);
    const double col = c.col(j).sum();
    sre += col / (len * len);
    lre += col * len * len;
  }
  const double gln = c.rowwise().sum().squaredNorm();
  const double rln = c.colwise().sum().squaredNorm();

  FeatureVector fv;
  fv.names.assign(kGlrlmStatNames.begin(), kGlrlmStatNames.end());
  fv.values.resize(5);
  fv.values << sre / runs, lre / runs, gln / runs, rln / runs, runs / static_cast<double>(n_pixels);
  return fv;
}

FeatureVector extract_traditional_features(const GrayImage& img, const TraditionalOptions& opts) {
  FeatureVector out = extract_glcm_features(img, opts.glcm_levels);
  const QuantizedImage codes = compute_lbp_image(img);
  out.append(lbp_features(codes, LbpMode::Histogram));
  out.append(lbp_features(codes, LbpMode::Scalar));

  const QuantizedImage q = quantize(img, opts.glrlm_levels);
  const auto n_pixels = static_cast<std::int64_t>(img.width()) * img.height();
  for (RunDirection dir : kRunDirections) {
    FeatureVector stats = glrlm_features(compute_glrlm(q, dir), n_pixels);
    for (auto& n : stats.names) n = "glrlm_" + n + "_" + std::to_string(static_cast<int>(dir));
    out.append(stats);
  }
  return out;
}

std::vector<std::string> traditional_feature_names() {
  return extract_traditional_features(GrayImage(3, 3)).names;
}

}  // namespace osteotex::texture
