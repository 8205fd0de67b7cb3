#include <doctest.h>

#include <fstream>

#include "osteotex/model_io.hpp"
#include "support.hpp"

using namespace osteotex;
using namespace osteotex::classifiers;

namespace {

ModelBundle trained(Kind kind) {
  Eigen::MatrixXd x = testing_support::gaussian_matrix(30, 4, 17);
  Eigen::VectorXi y(30);
  for (int i = 0; i < 30; ++i) {
    y(i) = i % 2;
    x(i, 0) += 1.5 * y(i);
  }
  Params p;
  p.forest_trees = 7;
  return {fit(kind, x, y, p, 3), {"a", "b", "c", "d"}, R"({"approach":"traditional"})"};
}

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("round trip preserves predictions for every kind") {
    const Eigen::MatrixXd probe = testing_support::gaussian_matrix(20, 4, 99) * 2.0;
    for (Kind k : {Kind::NaiveBayes, Kind::LsSvm, Kind::DecisionTree, Kind::RandomForest,
                   Kind::NearestNeighbor}) {
      CAPTURE(to_string(k));
      const ModelBundle bundle = trained(k);
      const std::string bytes = encode_model(bundle);
      CHECK(bytes.substr(0, 4) == "OTMD");
      const ModelBundle back = decode_model(bytes);
      CHECK(back.model.kind == k);
      CHECK(back.model.dimension == 4);
      CHECK(back.feature_names == bundle.feature_names);
      CHECK(back.metadata_json == bundle.metadata_json);
      const auto a = predict(bundle.model, probe);
      const auto b = predict(back.model, probe);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].score == b[i].score);
      }
      CHECK(encode_model(back) == bytes);
    }
  }

  TEST_CASE("file round trip") {
    const auto dir = testing_support::scratch_dir("model_io");
    const ModelBundle bundle = trained(Kind::RandomForest);
    save_model(dir / "m.otmd", bundle);
    CHECK(encode_model(load_model(dir / "m.otmd")) == encode_model(bundle));
    CHECK_THROWS(load_model(dir / "missing.otmd"));
  }

  TEST_CASE("corruption is detected") {
    const std::string bytes = encode_model(trained(Kind::NaiveBayes));
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS(decode_model(flipped));
    CHECK_THROWS(decode_model(bytes.substr(0, bytes.size() - 1)));
    CHECK_THROWS(decode_model(bytes + "x"));
    std::string magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS(decode_model(magic));
    std::string version = bytes;
    version[4] = 9;
    CHECK_THROWS(decode_model(version));
  }
}
