#include "osteotex/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace osteotex {

GrayImage::GrayImage(int width, int height, std::uint8_t fill) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GrayImage dimensions must be positive");
  }
  pixels_ = Plane<std::uint8_t>::Constant(height, width, fill);
}

GrayImage::GrayImage(Plane<std::uint8_t> pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() < 1 || pixels_.cols() < 1) {
    throw std::invalid_argument("GrayImage dimensions must be positive");
  }
}

namespace {

class PgmCursor {
 public:
  explicit PgmCursor(const std::string& bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments.
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool read_uint(long long& value) {
    skip_space();
    const std::size_t start = pos_;
    value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000LL) return false;
      ++pos_;
    }
    return pos_ > start;
  }

  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  char peek() const { return bytes_[pos_]; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(const std::string& bytes) {
  using Kind = PgmError::Kind;
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw PgmError(Kind::MalformedHeader, "malformed header: expected P2 or P5 magic");
  }
  const bool binary = bytes[1] == '5';
  PgmCursor cur(bytes);
  cur.advance(2);

  long long width = 0, height = 0, maxval = 0;
  if (!cur.read_uint(width) || !cur.read_uint(height) || !cur.read_uint(maxval)) {
    throw PgmError(Kind::MalformedHeader, "malformed header: missing width, height or maxval");
  }
  if (width < 1 || height < 1 || maxval < 1) {
    throw PgmError(Kind::MalformedHeader, "malformed header: non-positive dimension or maxval");
  }
  if (maxval > 255) {
    throw PgmError(Kind::UnsupportedDepth,
                   "unsupported depth: maxval " + std::to_string(maxval) + " exceeds 255");
  }

  Plane<std::uint8_t> pixels(height, width);
  const std::size_t count = static_cast<std::size_t>(width * height);
  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    if (cur.at_end() || !std::isspace(static_cast<unsigned char>(cur.peek()))) {
      throw PgmError(Kind::MalformedHeader, "malformed header: missing separator before raster");
    }
    cur.advance(1);
    if (bytes.size() - cur.pos() < count) {
      throw PgmError(Kind::TruncatedPayload, "truncated payload: expected " +
                                                 std::to_string(count) + " bytes, found " +
                                                 std::to_string(bytes.size() - cur.pos()));
    }
    const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + cur.pos());
    for (std::size_t i = 0; i < count; ++i) {
      if (src[i] > maxval) {
        throw PgmError(Kind::MalformedHeader, "pixel value exceeds declared maxval");
      }
      pixels.data()[i] = src[i];
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      long long v = 0;
      if (!cur.read_uint(v)) {
        throw PgmError(Kind::TruncatedPayload, "truncated payload: expected " +
                                                   std::to_string(count) + " samples, found " +
                                                   std::to_string(i));
      }
      if (v > maxval) {
        throw PgmError(Kind::MalformedHeader, "pixel value exceeds declared maxval");
      }
      pixels.data()[i] = static_cast<std::uint8_t>(v);
    }
  }
  return GrayImage(std::move(pixels));
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PgmError(PgmError::Kind::Io, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pgm(buf.str());
}

std::string encode_pgm(const GrayImage& img, PgmEncoding encoding) {
  std::ostringstream out;
  out << (encoding == PgmEncoding::Binary ? "P5" : "P2") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << 255 << '\n';
  const auto& px = img.pixels();
  if (encoding == PgmEncoding::Binary) {
    out.write(reinterpret_cast<const char*>(px.data()), px.size());
  } else {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        out << static_cast<int>(px(y, x)) << (x + 1 == img.width() ? '\n' : ' ');
      }
    }
  }
  return out.str();
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img, PgmEncoding encoding) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw PgmError(PgmError::Kind::Io, "cannot write " + path.string());
  }
  const std::string bytes = encode_pgm(img, encoding);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

double cubic_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::vector<int> index;      // 4 per output sample
  std::vector<double> weight;  // 4 per output sample
};

Taps make_taps(int in_size, int out_size) {
  Taps taps;
  taps.index.resize(4 * static_cast<std::size_t>(out_size));
  taps.weight.resize(4 * static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    for (int k = 0; k < 4; ++k) {
      const int idx = static_cast<int>(base) - 1 + k;
      taps.index[4 * o + k] = std::clamp(idx, 0, in_size - 1);
      taps.weight[4 * o + k] = cubic_kernel(t - (k - 1));
    }
  }
  return taps;
}

}  // namespace

GrayImage resize_bicubic(const GrayImage& img, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) {
    throw std::invalid_argument("resize_bicubic: target dimensions must be >= 1");
  }
  if (img.empty()) {
    throw std::invalid_argument("resize_bicubic: empty source image");
  }
  const int in_w = img.width();
  const int in_h = img.height();
  const Taps tx = make_taps(in_w, out_width);
  const Taps ty = make_taps(in_h, out_height);

  // Horizontal pass then vertical pass, both in double precision.
  Plane<double> rows(in_h, out_width);
  for (int y = 0; y < in_h; ++y) {
    for (int x = 0; x < out_width; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += tx.weight[4 * x + k] * img.pixels()(y, tx.index[4 * x + k]);
      }
      rows(y, x) = acc;
    }
  }

  Plane<std::uint8_t> out(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += ty.weight[4 * y + k] * rows(ty.index[4 * y + k], x);
      }
      out(y, x) = static_cast<std::uint8_t>(std::clamp(std::round(acc), 0.0, 255.0));
    }
  }
  return GrayImage(std::move(out));
}

QuantizedImage quantize(const GrayImage& img, int levels) {
  if (levels < 2 || levels > 256) {
    throw std::invalid_argument("quantize: levels must be in [2, 256], got " +
                                std::to_string(levels));
  }
  QuantizedImage q;
  q.levels = levels;
  q.bins = img.pixels().cast<int>().unaryExpr([levels](int v) { return v * levels / 256; });
  return q;
}

}  // namespace osteotex
