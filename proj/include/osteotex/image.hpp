#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace osteotex {

/// Row-major 2D plane; rows index y, columns index x.
template <typename Scalar>
using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit grayscale radiograph.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  explicit GrayImage(Plane<std::uint8_t> pixels);

  int width() const { return static_cast<int>(pixels_.cols()); }
  int height() const { return static_cast<int>(pixels_.rows()); }
  bool empty() const { return pixels_.size() == 0; }

  std::uint8_t operator()(int x, int y) const { return pixels_(y, x); }
  std::uint8_t& operator()(int x, int y) { return pixels_(y, x); }

  const Plane<std::uint8_t>& pixels() const { return pixels_; }
  Plane<std::uint8_t>& pixels() { return pixels_; }

  bool operator==(const GrayImage& other) const {
    return pixels_.rows() == other.pixels_.rows() && pixels_.cols() == other.pixels_.cols() &&
           pixels_ == other.pixels_;
  }

 private:
  Plane<std::uint8_t> pixels_;
};

/// Gray-level bin indices in [0, levels).
struct QuantizedImage {
  int levels = 0;
  Plane<int> bins;

  int width() const { return static_cast<int>(bins.cols()); }
  int height() const { return static_cast<int>(bins.rows()); }
  int operator()(int x, int y) const { return bins(y, x); }
};

class PgmError : public std::runtime_error {
 public:
  enum class Kind { Io, MalformedHeader, UnsupportedDepth, TruncatedPayload };

  PgmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class PgmEncoding { Ascii, Binary };

/// Reads a P2 (ASCII) or P5 (binary) PGM with maxval <= 255. Comments are allowed in the header.
GrayImage load_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(const std::string& bytes);

void save_pgm(const std::filesystem::path& path, const GrayImage& img,
              PgmEncoding encoding = PgmEncoding::Binary);
std::string encode_pgm(const GrayImage& img, PgmEncoding encoding = PgmEncoding::Binary);

/// Catmull-Rom (a = -0.5) bicubic resampling with clamp-to-edge borders and
/// pixel-centre alignment. Results are rounded then clamped to [0, 255].
GrayImage resize_bicubic(const GrayImage& img, int out_width, int out_height);

/// Catmull-Rom kernel weight at offset t.
double cubic_kernel(double t);

/// Uniform-width binning: bin = floor(v * levels / 256), 2 <= levels <= 256.
QuantizedImage quantize(const GrayImage& img, int levels);

}  // namespace osteotex
