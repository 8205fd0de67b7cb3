#include <doctest.h>

#include <numeric>
#include <set>

#include "oracles.hpp"
#include "osteotex/texture.hpp"
#include "support.hpp"

using namespace osteotex;
using namespace osteotex::texture;
using testing_support::random_image;

namespace {

QuantizedImage from_rows(const std::vector<std::vector<int>>& rows, int levels) {
  QuantizedImage q;
  q.levels = levels;
  q.bins.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t y = 0; y < rows.size(); ++y) {
    for (std::size_t x = 0; x < rows[y].size(); ++x) q.bins(y, x) = rows[y][x];
  }
  return q;
}

Glcm glcm_from_probs(const std::vector<std::vector<double>>& p) {
  Glcm g;
  g.levels = static_cast<int>(p.size());
  g.probs.resize(g.levels, g.levels);
  for (int i = 0; i < g.levels; ++i) {
    for (int j = 0; j < g.levels; ++j) g.probs(i, j) = p[i][j];
  }
  return g;
}

}  // namespace

TEST_SUITE("texture") {
  TEST_CASE("glcm of a constant image is a single cell") {
    const auto q = quantize(GrayImage(6, 5, 200), 8);
    for (const auto& off : kStandardOffsets) {
      const Glcm g = compute_glcm(q, off, true);
      CHECK(g.probs(6, 6) == 1.0);
      CHECK(g.probs.sum() == 1.0);
    }
  }

  TEST_CASE("glcm single pair") {
    const auto q = from_rows({{0, 1}}, 2);
    const Glcm g = compute_glcm(q, {1, 0}, false);
    CHECK(g.counts(0, 1) == 1);
    CHECK(g.counts.sum() == 1);
  }

  TEST_CASE("glcm rejects degenerate offsets") {
    const auto q = quantize(random_image(4, 4, 1), 8);
    CHECK_THROWS(compute_glcm(q, {0, 0}, true));
    CHECK_THROWS(compute_glcm(q, {4, 0}, true));
    CHECK_THROWS(compute_glcm(q, {0, -4}, true));
  }

  TEST_CASE("glcm counts equal brute-force pair enumeration") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto q = quantize(random_image(8, 8, seed), 8);
      for (const auto& off : kStandardOffsets) {
        for (bool sym : {false, true}) {
          const Glcm g = compute_glcm(q, off, sym);
          const auto expect = oracle::glcm_counts(q, off.dx, off.dy, sym);
          for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) REQUIRE(g.counts(i, j) == expect[i][j]);
          }
          CHECK(g.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
          if (sym) CHECK(g.probs == g.probs.transpose());
        }
      }
    }
  }

  TEST_CASE("glcm statistics on hand-evaluated distributions") {
    const auto constant = glcm_stats(glcm_from_probs({{0, 0}, {0, 1}})).values;
    CHECK(constant(0) == 0.0);  // contrast
    CHECK(constant(1) == 0.0);  // dissimilarity
    CHECK(constant(2) == 1.0);  // homogeneity
    CHECK(constant(3) == 1.0);  // energy
    CHECK(constant(4) == 0.0);  // entropy
    CHECK(constant(5) == 0.0);  // correlation with zero variance
    CHECK(constant(6) == 1.0);  // max probability

    const auto diag = glcm_stats(glcm_from_probs({{0.5, 0}, {0, 0.5}})).values;
    CHECK(diag(0) == 0.0);
    CHECK(diag(3) == doctest::Approx(0.5));
    CHECK(diag(4) == doctest::Approx(1.0));
    CHECK(diag(5) == doctest::Approx(1.0));
  }

  TEST_CASE("glcm statistics match direct summation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto q = quantize(random_image(8, 8, seed + 100), 8);
      const Glcm g = compute_glcm(q, {1, -1}, true);
      const auto expect = oracle::glcm_stats(oracle::normalize(oracle::glcm_counts(q, 1, -1, true))).in_order();
      const auto got = glcm_stats(g);
      REQUIRE(got.size() == 11);
      for (int s = 0; s < 11; ++s) CHECK(got.values(s) == doctest::Approx(expect[s]).epsilon(1e-10));
      CHECK(got.values(3) > 0.0);
      CHECK(got.values(3) <= 1.0);
      CHECK(std::abs(got.values(5)) <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("contrast is invariant under intensity shift") {
    const GrayImage base = random_image(10, 10, 7, 200);
    GrayImage shifted = base;
    shifted.pixels().array() += std::uint8_t{40};
    const auto a = glcm_stats(compute_glcm(quantize(base, 256), {1, 0}, true)).values;
    const auto b = glcm_stats(compute_glcm(quantize(shifted, 256), {1, 0}, true)).values;
    CHECK(a(0) == doctest::Approx(b(0)));
    CHECK(a(3) == doctest::Approx(b(3)));
  }

  TEST_CASE("glcm feature vector layout") {
    const GrayImage img = random_image(12, 9, 3);
    const auto fv = extract_glcm_features(img);
    REQUIRE(fv.size() == 44);
    CHECK(fv.names.front() == "glcm_contrast_0");
    CHECK(fv.names[11] == "glcm_contrast_45");
    CHECK(fv.names.back() == "glcm_variance_135");
    const auto q = quantize(img, 8);
    for (int a = 0; a < 4; ++a) {
      const auto expect = oracle::glcm_stats(oracle::normalize(
                                                 oracle::glcm_counts(q, kStandardOffsets[a].dx, kStandardOffsets[a].dy, true)))
                              .in_order();
      for (int s = 0; s < 11; ++s) CHECK(fv.values(11 * a + s) == doctest::Approx(expect[s]).epsilon(1e-10));
    }
    const auto flat = extract_glcm_features(GrayImage(5, 5, 90));
    for (int a = 0; a < 4; ++a) {
      CHECK(flat.values(11 * a) == 0.0);
      CHECK(flat.values(11 * a + 3) == 1.0);
    }
  }

  TEST_CASE("lbp special cases") {
    const auto flat = compute_lbp_image(GrayImage(4, 4, 33));
    CHECK(flat.width() == 2);
    CHECK(flat.height() == 2);
    CHECK((flat.bins.array() == 255).all());

    GrayImage peak(3, 3, 0);
    peak(1, 1) = 255;
    CHECK(compute_lbp_image(peak)(0, 0) == 0);

    GrayImage one(3, 3, 0);
    one(1, 1) = 10;
    one(0, 0) = 10;  // top-left is the most significant bit
    CHECK(compute_lbp_image(one)(0, 0) == 128);
    CHECK_THROWS(compute_lbp_image(GrayImage(2, 5)));
  }

  TEST_CASE("lbp codes equal per-pixel oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const GrayImage img = random_image(5, 5, seed, seed % 2 ? 3 : 255);
      const auto codes = compute_lbp_image(img);
      const auto expect = oracle::lbp_codes(img);
      for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 3; ++x) CHECK(codes(x, y) == expect[y][x]);
      }
    }
  }

  TEST_CASE("lbp features") {
    const auto flat_hist = lbp_features(compute_lbp_image(GrayImage(5, 5, 1)), LbpMode::Histogram);
    REQUIRE(flat_hist.size() == 256);
    CHECK(flat_hist.values(255) == 1.0);
    CHECK(flat_hist.values.sum() == 1.0);
    CHECK(flat_hist.names[7] == "lbp_hist_007");
    CHECK(lbp_features(compute_lbp_image(GrayImage(5, 5, 1)), LbpMode::Scalar).values(0) == 255.0);

    const GrayImage img = random_image(9, 7, 21);
    const auto hist = lbp_features(compute_lbp_image(img), LbpMode::Histogram);
    CHECK(hist.values.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const auto codes = oracle::lbp_codes(img);
    double sum = 0;
    int n = 0;
    for (const auto& row : codes) {
      for (int c : row) {
        sum += c;
        ++n;
      }
    }
    const auto scalar = lbp_features(compute_lbp_image(img), LbpMode::Scalar);
    REQUIRE(scalar.size() == 1);
    CHECK(scalar.names[0] == "lbp_mean");
    CHECK(scalar.values(0) == doctest::Approx(sum / n).epsilon(1e-12));
  }

  TEST_CASE("glrlm small cases") {
    const auto m = compute_glrlm(from_rows({{0, 0, 1, 1}}, 2), RunDirection::Deg0);
    CHECK(m.count(0, 2) == 1);
    CHECK(m.count(1, 2) == 1);
    CHECK(m.total_runs() == 2);

    const auto c = compute_glrlm(quantize(GrayImage(5, 3, 255), 8), RunDirection::Deg0);
    CHECK(c.max_run == 5);
    CHECK(c.count(7, 5) == 3);
    CHECK(c.total_runs() == 3);
    CHECK(compute_glrlm(quantize(GrayImage(5, 3, 255), 8), RunDirection::Deg90).max_run == 3);
    CHECK(compute_glrlm(quantize(GrayImage(5, 3, 255), 8), RunDirection::Deg45).max_run == 3);
  }

  TEST_CASE("glrlm equals run-scanning oracle and conserves pixels") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto q = quantize(random_image(8, 8, seed, seed % 3 == 0 ? 80 : 255), 8);
      for (RunDirection dir : kRunDirections) {
        const auto m = compute_glrlm(q, dir);
        const auto runs = oracle::glrlm_runs(q, static_cast<int>(dir));
        long long covered = 0;
        for (int level = 0; level < m.levels; ++level) {
          for (int len = 1; len <= m.max_run; ++len) {
            const auto it = runs.find({level, len});
            CHECK(m.count(level, len) == (it == runs.end() ? 0 : it->second));
            covered += len * m.count(level, len);
          }
        }
        CHECK(covered == 64);
        const auto fv = glrlm_features(m, 64);
        const auto expect = oracle::galloway(runs, 64);
        for (int s = 0; s < 5; ++s) CHECK(fv.values(s) == doctest::Approx(expect[s]).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("glrlm features hand cases") {
    const auto constant = glrlm_features(compute_glrlm(quantize(GrayImage(4, 4, 10), 8), RunDirection::Deg0), 16);
    REQUIRE(constant.size() == 5);
    CHECK(constant.values(4) == doctest::Approx(0.25));
    CHECK(constant.values(1) == doctest::Approx(16.0));

    const auto stripes = glrlm_features(compute_glrlm(from_rows({{0, 1, 0, 1}, {1, 0, 1, 0}}, 2), RunDirection::Deg0), 8);
    CHECK(stripes.values(0) == doctest::Approx(1.0));
    CHECK(stripes.values(4) == doctest::Approx(1.0));

    RunLengthMatrix empty;
    empty.levels = 2;
    empty.max_run = 2;
    empty.counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(2, 2);
    CHECK_THROWS(glrlm_features(empty, 4));
  }

  TEST_CASE("traditional vector") {
    const auto fv = extract_traditional_features(random_image(16, 16, 4));
    CHECK(fv.size() == 321);
    CHECK(fv.names == traditional_feature_names());
    const std::set<std::string> unique(fv.names.begin(), fv.names.end());
    CHECK(unique.size() == fv.names.size());
    CHECK(fv.values.allFinite());
  }
}
