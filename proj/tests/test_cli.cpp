#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "app/commands.hpp"
#include "osteotex/binary_io.hpp"
#include "osteotex/cnn/network.hpp"
#include "osteotex/feature_table.hpp"
#include "osteotex/model_io.hpp"
#include "support.hpp"

using namespace osteotex;
namespace fs = std::filesystem;

namespace {

const char* kTinySpec = R"({
  "name": "tiny",
  "input": {"height": 6, "width": 6, "channels": 3},
  "mean_subtraction": [100, 50, 25],
  "channel_mode": "first-slice-only",
  "layers": [
    {"name": "conv1", "kind": "conv", "out_channels": 2, "kernel": [2, 2], "stride": 1, "pad": 0},
    {"name": "relu1", "kind": "relu"},
    {"name": "fc1", "kind": "fc", "out_dim": 4},
    {"name": "relu2", "kind": "relu"}
  ],
  "feature_tap": 2
})";

struct Run {
  int status = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "osteotex");
  std::ostringstream out, err;
  Run r;
  r.status = app::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Directory with `per_class` flat-ish and `per_class` noisy 16x16 images,
/// a labelled manifest and the tiny network.
struct Fixture {
  fs::path dir;
  fs::path images;
  fs::path manifest;
  fs::path spec;
  fs::path weights;

  explicit Fixture(const std::string& name, int per_class = 6) : dir(testing_support::scratch_dir(name)) {
    images = dir / "images";
    fs::create_directories(images);
    std::string rows = "id,filename,label\n";
    for (int i = 0; i < 2 * per_class; ++i) {
      const bool noisy = i % 2 == 1;
      const GrayImage img = testing_support::random_image(16, 16, 500 + i, noisy ? 255 : 12);
      const std::string file = "img" + std::to_string(i) + ".pgm";
      save_pgm(images / file, img);
      rows += "s" + std::to_string(i) + "," + file + "," + (noisy ? "osteoporosis" : "control") + "\n";
    }
    manifest = dir / "manifest.csv";
    write_file_bytes(manifest, rows);
    spec = dir / "tiny.json";
    write_file_bytes(spec, kTinySpec);
    weights = dir / "tiny.otwt";
    cnn::save_weights(weights, cnn::make_random_weights(cnn::parse_network_spec(kTinySpec), 5));
  }

  std::vector<std::string> sources() const {
    return {"--images", images.string(), "--manifest", manifest.string()};
  }
  std::vector<std::string> net() const { return {"--net-spec", spec.string(), "--weights", weights.string()}; }
};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("extract traditional and deep tables") {
    const Fixture fx("cli_extract", 2);
    const auto out = fx.dir / "out";
    const Run r = cli(join(join({"extract", "--approach", "merged", "--out", out.string()}, fx.sources()), fx.net()));
    CHECK_MESSAGE(r.status == 0, r.err);
    const FeatureTable trad = read_feature_csv(out / "traditional.csv");
    CHECK(trad.rows() == 4);
    CHECK(trad.cols() == 321);
    CHECK(trad.has_labels());
    const FeatureTable deep = read_feature_csv(out / "deep.csv");
    CHECK(deep.rows() == 4);
    CHECK(deep.cols() == 4);
    CHECK(deep.names().front().rfind("deep_", 0) == 0);
    CHECK((deep.values().array() >= 0).all());
  }

  TEST_CASE("unreadable image fails the run but keeps the rest") {
    const Fixture fx("cli_badimage", 2);
    std::ofstream(fx.manifest, std::ios::app) << "bad,missing.pgm,control\n";
    const auto out = fx.dir / "out";
    const Run r = cli(join({"extract", "--out", out.string()}, fx.sources()));
    CHECK(r.status != 0);
    CHECK(r.err.find("missing.pgm") != std::string::npos);
    CHECK(read_feature_csv(out / "traditional.csv").rows() == 4);
  }

  TEST_CASE("empty manifest warns") {
    const Fixture fx("cli_empty", 1);
    write_file_bytes(fx.manifest, "id,filename,label\n");
    const Run r = cli(join({"extract", "--out", (fx.dir / "out").string()}, fx.sources()));
    CHECK(r.err.find("warning") != std::string::npos);
  }

  TEST_CASE("cross-validation writes reports and reruns byte-identically") {
    const Fixture fx("cli_cv");
    const auto out = fx.dir / "out";
    const auto args = join({"cv", "--folds", "3", "--k-features", "5", "--classifier", "nb", "--out", out.string()},
                           fx.sources());
    const Run first = cli(args);
    REQUIRE_MESSAGE(first.status == 0, first.err);
    const std::string json = read_file_bytes(out / "cv_report.json");
    const std::string text = read_file_bytes(out / "cv_report.txt");
    CHECK(json.find("\"classifier\": \"nb\"") != std::string::npos);
    CHECK(text.find("Naive Bayes") != std::string::npos);
    CHECK(read_file_bytes(out / "cv_report_roc.csv").rfind("threshold,fpr,tpr\n", 0) == 0);
    REQUIRE(cli(args).status == 0);
    CHECK(read_file_bytes(out / "cv_report.json") == json);
    CHECK(read_file_bytes(out / "cv_report.txt") == text);

    const Run rendered = cli({"report", "--in", (out / "cv_report.json").string()});
    CHECK(rendered.status == 0);
    CHECK(rendered.out == text);
  }

  TEST_CASE("cv from precomputed tables and merged sources") {
    const Fixture fx("cli_cv_tables");
    const auto ex = fx.dir / "ex";
    REQUIRE(cli(join(join({"extract", "--approach", "merged", "--out", ex.string()}, fx.sources()), fx.net())).status == 0);
    const auto out = fx.dir / "out";
    const Run r = cli({"cv", "--approach", "merged", "--trad-features", (ex / "traditional.csv").string(),
                       "--deep-features", (ex / "deep.csv").string(), "--folds", "3", "--k-features", "2",
                       "--out", out.string()});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    const std::string json = read_file_bytes(out / "cv_report.json");
    CHECK(json.find("\"deep:deep_") != std::string::npos);
    CHECK(json.find("\"trad:") != std::string::npos);
    CHECK(read_file_bytes(out / "cv_report.txt").find("4 (2 deep + 2 traditional features)") != std::string::npos);
  }

  TEST_CASE("validation errors are reported together") {
    const Fixture fx("cli_invalid", 3);
    const auto ex = fx.dir / "ex";
    REQUIRE(cli(join({"extract", "--out", ex.string()}, fx.sources())).status == 0);
    const Run r = cli({"cv", "--trad-features", (ex / "traditional.csv").string(), "--k-features", "400",
                       "--folds", "5", "--out", (fx.dir / "out").string()});
    CHECK(r.status != 0);
    CHECK(r.err.find("k_features 400") != std::string::npos);
    CHECK(r.err.find("each class needs") != std::string::npos);
    CHECK_FALSE(fs::exists(fx.dir / "out" / "cv_report.json"));

    CHECK(cli({"cv", "--classifier", "knn", "--trad-features", (ex / "traditional.csv").string()}).status != 0);
    CHECK(cli({"frobnicate"}).status != 0);
  }

  TEST_CASE("train then predict") {
    const Fixture fx("cli_train");
    const auto ex = fx.dir / "ex";
    REQUIRE(cli(join({"extract", "--out", ex.string()}, fx.sources())).status == 0);
    const auto table = (ex / "traditional.csv").string();
    const auto model_dir = fx.dir / "model";
    const Run t = cli({"train", "--trad-features", table, "--classifier", "nn1", "--k-features", "8", "--out",
                       model_dir.string()});
    REQUIRE_MESSAGE(t.status == 0, t.err);
    const ModelBundle bundle = load_model(model_dir / "model.otmd");
    CHECK(bundle.feature_names.size() == 8);
    CHECK(bundle.metadata_json.find("\"training_rows\":12") != std::string::npos);
    CHECK(read_file_bytes(model_dir / "ranking_traditional.csv").rfind("rank,feature,score\n", 0) == 0);

    const auto pred_dir = fx.dir / "pred";
    const Run p = cli({"predict", "--trad-features", table, "--model", (model_dir / "model.otmd").string(), "--out",
                       pred_dir.string()});
    REQUIRE_MESSAGE(p.status == 0, p.err);
    const std::string csv = read_file_bytes(pred_dir / "predictions.csv");
    CHECK(csv.rfind("id,label,score\n", 0) == 0);
    // nn1 reproduces every training label.
    const std::string json = read_file_bytes(pred_dir / "predict_report.json");
    CHECK(json.find("\"accuracy\": 1.0") != std::string::npos);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    int n = 0;
    while (std::getline(lines, line)) {
      const int idx = std::stoi(line.substr(1, line.find(',') - 1));
      CHECK(line.substr(line.find(',') + 1, 1) == std::to_string(idx % 2));
      ++n;
    }
    CHECK(n == 12);
  }

  TEST_CASE("blind prediction with withheld labels") {
    const Fixture fx("cli_blind");
    const auto ex = fx.dir / "ex";
    REQUIRE(cli(join({"extract", "--out", ex.string()}, fx.sources())).status == 0);
    REQUIRE(cli({"train", "--trad-features", (ex / "traditional.csv").string(), "--classifier", "dtree", "--out",
                 (fx.dir / "model").string()})
                .status == 0);

    std::string blind = "id,filename,label\n";
    for (int i = 0; i < 12; ++i) blind += "s" + std::to_string(i) + ",img" + std::to_string(i) + ".pgm,?\n";
    write_file_bytes(fx.dir / "blind.csv", blind);
    const auto unl = fx.dir / "unl";
    REQUIRE(cli({"extract", "--images", fx.images.string(), "--manifest", (fx.dir / "blind.csv").string(), "--out",
                 unl.string()})
                .status == 0);
    CHECK_FALSE(read_feature_csv(unl / "traditional.csv").has_labels());

    const auto model = (fx.dir / "model" / "model.otmd").string();
    const auto pred = fx.dir / "pred";
    REQUIRE(cli({"predict", "--trad-features", (unl / "traditional.csv").string(), "--model", model, "--out",
                 pred.string()})
                .status == 0);
    CHECK_FALSE(fs::exists(pred / "predict_report.json"));

    const Run scored = cli({"predict", "--trad-features", (unl / "traditional.csv").string(), "--model", model,
                            "--labels", fx.manifest.string(), "--out", pred.string()});
    REQUIRE_MESSAGE(scored.status == 0, scored.err);
    const std::string text = read_file_bytes(pred / "predict_report.txt");
    CHECK(text.find("Folds                  none (blind)") != std::string::npos);
    CHECK(text.find("Decision Tree") != std::string::npos);

    CHECK(cli({"predict", "--trad-features", (unl / "traditional.csv").string(), "--model",
               (fx.dir / "nope.otmd").string()})
              .status != 0);
  }

  TEST_CASE("ztest") {
    const Run r = cli({"ztest", "--acc1", "0.5", "--n1", "100", "--acc2", "0.5", "--n2", "100"});
    CHECK(r.status == 0);
    CHECK(r.out == "z = 0.0000\np (two-tailed) = 1.000000\n");
    const Run reference = cli({"ztest", "--acc1", "0.793103", "--n1", "116", "--acc2", "0.603448", "--n2", "116"});
    REQUIRE(reference.out.rfind("z = ", 0) == 0);
    CHECK(std::abs(std::stod(reference.out.substr(4)) - 3.15) < 0.01);
    const Run degenerate = cli({"ztest", "--acc1", "1", "--n1", "5", "--acc2", "1", "--n2", "5"});
    CHECK(degenerate.out.find("undefined") != std::string::npos);
    CHECK(cli({"ztest", "--acc1", "2", "--n1", "5", "--acc2", "1", "--n2", "5"}).status != 0);
  }

  TEST_CASE("config file with flag override") {
    const Fixture fx("cli_config");
    const auto ex = fx.dir / "ex";
    REQUIRE(cli(join({"extract", "--out", ex.string()}, fx.sources())).status == 0);
    const auto out = fx.dir / "out";
    write_file_bytes(fx.dir / "cfg.json", R"({"trad_features": ")" + (ex / "traditional.csv").string() +
                                              R"(", "classifier": "svm", "folds": 3, "k_features": 4, "out": ")" +
                                              out.string() + R"("})");
    const Run r = cli({"cv", "--config", (fx.dir / "cfg.json").string(), "--classifier", "dtree"});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    const std::string json = read_file_bytes(out / "cv_report.json");
    CHECK(json.find("\"classifier\": \"dtree\"") != std::string::npos);
    CHECK(json.find("\"k_features\": 4") != std::string::npos);
    CHECK(json.find("\"folds\": 3") != std::string::npos);

    write_file_bytes(fx.dir / "bad.json", R"({"folds": "ten", "colour": 1})");
    const Run bad = cli({"cv", "--config", (fx.dir / "bad.json").string()});
    CHECK(bad.status != 0);
    CHECK(bad.err.find("folds") != std::string::npos);
    CHECK(bad.err.find("colour") != std::string::npos);
  }
}
