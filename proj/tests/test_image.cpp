#include <doctest.h>

#include <cmath>

#include "osteotex/image.hpp"
#include "support.hpp"

using namespace osteotex;
using testing_support::random_image;

namespace {

// Direct 2D Catmull-Rom resampler, written independently of the library's
// separable implementation.
double catmull_rom(double t) {
  t = std::abs(t);
  if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

GrayImage bicubic_oracle(const GrayImage& in, int ow, int oh) {
  GrayImage out(ow, oh);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double sx = (ox + 0.5) * in.width() / ow - 0.5;
      const double sy = (oy + 0.5) * in.height() / oh - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      double acc = 0.0;
      for (int n = -1; n <= 2; ++n) {
        const int yy = std::clamp(y0 + n, 0, in.height() - 1);
        double row = 0.0;
        for (int m = -1; m <= 2; ++m) {
          const int xx = std::clamp(x0 + m, 0, in.width() - 1);
          row += catmull_rom(sx - (x0 + m)) * in(xx, yy);
        }
        acc += catmull_rom(sy - (y0 + n)) * row;
      }
      out(ox, oy) = static_cast<std::uint8_t>(std::clamp(std::round(acc), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("image") {
  TEST_CASE("binary pgm transcribes pixels") {
    const std::string bytes = std::string("P5\n2 2\n255\n") + '\x00' + '\x80' + '\xff' + '\x07';
    const GrayImage img = parse_pgm(bytes);
    REQUIRE(img.width() == 2);
    REQUIRE(img.height() == 2);
    CHECK(img(0, 0) == 0);
    CHECK(img(1, 0) == 128);
    CHECK(img(0, 1) == 255);
    CHECK(img(1, 1) == 7);
  }

  TEST_CASE("ascii pgm with comments") {
    const GrayImage img = parse_pgm("P2\n# scanner\n2 2\n# depth\n255\n0 128\n255 7\n");
    CHECK(img(1, 0) == 128);
    CHECK(img(1, 1) == 7);
  }

  TEST_CASE("pgm errors are distinguished") {
    const auto kind_of = [](const std::string& bytes) {
      try {
        parse_pgm(bytes);
      } catch (const PgmError& e) {
        return e.kind();
      }
      FAIL("no error raised");
      return PgmError::Kind::Io;
    };
    CHECK(kind_of("P5\n2 2\n65535\n") == PgmError::Kind::UnsupportedDepth);
    CHECK(kind_of("P7\n2 2\n255\n") == PgmError::Kind::MalformedHeader);
    CHECK(kind_of("P5\n2 x\n255\n") == PgmError::Kind::MalformedHeader);
    CHECK(kind_of(std::string("P5\n2 2\n255\n") + "abc") == PgmError::Kind::TruncatedPayload);
    CHECK(kind_of("P2\n2 2\n255\n1 2 3\n") == PgmError::Kind::TruncatedPayload);
    try {
      parse_pgm("P5\n2 2\n65535\n");
    } catch (const PgmError& e) {
      CHECK(std::string(e.what()).find("unsupported depth") != std::string::npos);
    }
    CHECK_THROWS_AS(load_pgm("/nonexistent/file.pgm"), PgmError);
  }

  TEST_CASE("ascii and binary encodings decode identically") {
    const GrayImage img = random_image(8, 8, 11);
    const GrayImage a = parse_pgm(encode_pgm(img, PgmEncoding::Ascii));
    const GrayImage b = parse_pgm(encode_pgm(img, PgmEncoding::Binary));
    CHECK(a == img);
    CHECK(b == img);
  }

  TEST_CASE("save then load round trips") {
    const auto dir = testing_support::scratch_dir("image_rt");
    const GrayImage img = random_image(13, 7, 5);
    save_pgm(dir / "x.pgm", img);
    CHECK(load_pgm(dir / "x.pgm") == img);
  }

  TEST_CASE("resize to the same size is the identity") {
    const GrayImage img = random_image(9, 6, 3);
    CHECK(resize_bicubic(img, 9, 6) == img);
  }

  TEST_CASE("constant images stay constant") {
    for (int c : {0, 1, 128, 254, 255}) {
      const GrayImage img(5, 4, static_cast<std::uint8_t>(c));
      const GrayImage out = resize_bicubic(img, 17, 3);
      CHECK(out == GrayImage(17, 3, static_cast<std::uint8_t>(c)));
    }
  }

  TEST_CASE("bicubic matches direct oracle") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const GrayImage img = random_image(8, 8, seed);
      CHECK(resize_bicubic(img, 224, 224) == bicubic_oracle(img, 224, 224));
      CHECK(resize_bicubic(img, 5, 13) == bicubic_oracle(img, 5, 13));
    }
  }

  TEST_CASE("kernel values") {
    CHECK(cubic_kernel(0.0) == 1.0);
    CHECK(cubic_kernel(1.0) == 0.0);
    CHECK(cubic_kernel(2.0) == 0.0);
    CHECK(cubic_kernel(0.5) == doctest::Approx(0.5625));
    CHECK(cubic_kernel(-1.5) == doctest::Approx(-0.0625));
  }

  TEST_CASE("resize rejects empty targets") {
    CHECK_THROWS(resize_bicubic(GrayImage(3, 3), 0, 4));
    CHECK_THROWS(resize_bicubic(GrayImage(3, 3), 4, 0));
  }

  TEST_CASE("quantize") {
    GrayImage img(4, 1);
    img(0, 0) = 0;
    img(1, 0) = 127;
    img(2, 0) = 128;
    img(3, 0) = 255;
    const auto q2 = quantize(img, 2);
    CHECK(q2(0, 0) == 0);
    CHECK(q2(1, 0) == 0);
    CHECK(q2(2, 0) == 1);
    CHECK(q2(3, 0) == 1);

    const GrayImage r = random_image(16, 16, 9);
    const auto q256 = quantize(r, 256);
    const auto q8 = quantize(r, 8);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        CHECK(q256(x, y) == r(x, y));
        CHECK(q8(x, y) == r(x, y) / 32);
      }
    }
    int prev = 0;
    GrayImage ramp(256, 1);
    for (int v = 0; v < 256; ++v) ramp(v, 0) = static_cast<std::uint8_t>(v);
    const auto qr = quantize(ramp, 7);
    for (int v = 0; v < 256; ++v) {
      CHECK(qr(v, 0) >= prev);
      prev = qr(v, 0);
    }
    CHECK(prev == 6);
    CHECK_THROWS(quantize(r, 1));
    CHECK_THROWS(quantize(r, 257));
  }
}
