#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "ffd/feature_io.hpp"
#include "ffd/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ffd;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun ffd_cli(const fs::path& work, const std::string& args) {
  const fs::path out = work / "stdout.txt", err = work / "stderr.txt";
  const std::string cmd = std::string(FFD_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::read_text(out);
  r.err = testutil::read_text(err);
  return r;
}

// Small easy-separation dataset and quick model settings.
fs::path write_small_config(const fs::path& dir) {
  PipelineConfig c = default_pipeline_config();
  for (auto& row : c.generator.counts) row = {20, 4, 10};
  c.generator.separation = separation_preset("easy");
  c.models = {{"random_forest", {{"n_estimators", 40}}},
              {"gradient_boosting", {{"n_estimators", 60}, {"learning_rate", 0.1}}},
              {"mlp", {{"max_iter", 100}}}};
  const fs::path p = dir / "config.json";
  write_json_file(p, to_json(c));
  return p;
}

// synth -> baseline -> extract -> train -> eval under `dir`.
void full_pipeline(const fs::path& dir, const std::string& family = "random_forest") {
  const fs::path cfg = write_small_config(dir);
  const std::string base = "--config " + cfg.string() + " --seed 3 ";
  const std::string d = dir.string();
  ASSERT_EQ(ffd_cli(dir, base + "synth --out " + d + "/data").code, 0);
  ASSERT_EQ(ffd_cli(dir, base + "baseline --data " + d + "/data/train.csv --out " + d + "/baselines.json").code, 0);
  for (const char* split : {"train", "test"})
    ASSERT_EQ(ffd_cli(dir, base + "extract --data " + d + "/data/" + split + ".csv --baselines " + d +
                               "/baselines.json --out " + d + "/" + split + ".jsonl")
                  .code,
              0);
  ASSERT_EQ(
      ffd_cli(dir, base + "train --features " + d + "/train.jsonl --family " + family + " --out " + d + "/model.json")
          .code,
      0);
  const CliRun ev = ffd_cli(dir, base + "eval --model " + d + "/model.json --features " + d + "/test.jsonl --out " + d +
                                  "/report");
  ASSERT_EQ(ev.code, 0) << ev.err;
}

}  // namespace

TEST(Cli, FullPipelineWritesReport) {
  testutil::TempDir dir;
  full_pipeline(dir.path());
  ASSERT_TRUE(fs::exists(dir.path() / "report" / "report.json"));
  const nlohmann::json rep = read_json_file(dir.path() / "report" / "report.json");
  EXPECT_EQ(rep["format"], "ffd-report");
  EXPECT_EQ(rep["conditions"]["confusion"]["counts"].size(), 4u);
  EXPECT_GE(rep["fit_unfit"]["overall_accuracy"].get<double>(), 0.9);
  EXPECT_TRUE(fs::exists(dir.path() / "train.jsonl.layout.json"));
  EXPECT_NE(testutil::read_text(dir.path() / "report" / "report.txt").find("fit/unfit"), std::string::npos);
}

TEST(Cli, EndToEndDeterministic) {
  testutil::TempDir a, b;
  full_pipeline(a.path(), "gradient_boosting");
  full_pipeline(b.path(), "gradient_boosting");
  for (const char* f : {"data/train.csv", "data/test.csv", "baselines.json", "train.jsonl", "test.jsonl",
                        "model.json", "report/report.json", "report/report.txt"})
    EXPECT_EQ(testutil::read_text(a.path() / f), testutil::read_text(b.path() / f)) << f;
}

TEST(Cli, RerunningOverwritesIdentically) {
  testutil::TempDir dir;
  full_pipeline(dir.path(), "mlp");
  const std::string d = dir.path().string();
  const std::string before = testutil::read_text(dir.path() / "test.jsonl");
  const std::string model = testutil::read_text(dir.path() / "model.json");
  const std::string cfg = "--config " + d + "/config.json --seed 3 ";
  ASSERT_EQ(ffd_cli(dir.path(), cfg + "extract --data " + d + "/data/test.csv --baselines " + d +
                                    "/baselines.json --out " + d + "/test.jsonl")
                .code,
            0);
  ASSERT_EQ(
      ffd_cli(dir.path(), cfg + "train --features " + d + "/train.jsonl --family mlp --out " + d + "/model.json").code,
      0);
  EXPECT_EQ(testutil::read_text(dir.path() / "test.jsonl"), before);
  EXPECT_EQ(testutil::read_text(dir.path() / "model.json"), model);
}

TEST(Cli, PredictFlagsControlSequenceAsFit) {
  testutil::TempDir dir;
  full_pipeline(dir.path());
  const auto train = read_features(dir.path() / "train.jsonl");
  const auto test = read_features(dir.path() / "test.jsonl");
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& fv : train) {
    x.push_back(fv.values);
    y.push_back(fv.condition == Condition::control ? 0 : 1);
  }
  const oracle::NearestCentroid nc(x, y);
  // First control test sequence the oracle also places on the fit side.
  const FeatureVector* pick = nullptr;
  for (const auto& fv : test)
    if (fv.condition == Condition::control && nc.predict(fv.values) == 0) {
      pick = &fv;
      break;
    }
  ASSERT_NE(pick, nullptr);

  const CliRun r = ffd_cli(dir.path(), "predict --model " + (dir.path() / "model.json").string() + " --features " +
                                        (dir.path() / "test.jsonl").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line, found;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    if (line.rfind(pick->id + " ", 0) == 0) found = line;
  }
  EXPECT_EQ(lines, test.size());
  ASSERT_FALSE(found.empty());
  EXPECT_NE(found.find("fitness=fit"), std::string::npos) << found;
  EXPECT_NE(found.find("p_control="), std::string::npos);
  EXPECT_NE(found.find("unfit_score="), std::string::npos);
}

TEST(Cli, ExtractWithoutBaselineNamesTheFile) {
  testutil::TempDir dir;
  const std::string d = dir.path().string();
  ASSERT_EQ(ffd_cli(dir.path(), "--config " + write_small_config(dir.path()).string() + " synth --out " + d + "/data")
                .code,
            0);
  const CliRun r = ffd_cli(dir.path(), "extract --data " + d + "/data/train.csv --baselines " + d +
                                        "/nowhere.json --out " + d + "/f.jsonl");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nowhere.json"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("ffd baseline"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir.path() / "f.jsonl"));
}

TEST(Cli, ExitCodes) {
  testutil::TempDir dir;
  const std::string d = dir.path().string();
  const CliRun help = ffd_cli(dir.path(), "--help");
  EXPECT_EQ(help.code, 0);
  for (const char* cmd : {"synth", "localize", "baseline", "extract", "train", "predict", "eval", "report"})
    EXPECT_NE(help.out.find(cmd), std::string::npos) << cmd;
  const CliRun sub_help = ffd_cli(dir.path(), "train --help");
  EXPECT_EQ(sub_help.code, 0);
  EXPECT_NE(sub_help.out.find("--family"), std::string::npos);

  EXPECT_EQ(ffd_cli(dir.path(), "").code, 1);
  EXPECT_EQ(ffd_cli(dir.path(), "frobnicate").code, 1);
  EXPECT_EQ(ffd_cli(dir.path(), "synth --out " + d + "/x --bogus").code, 1);
  EXPECT_EQ(ffd_cli(dir.path(), "synth").code, 1);
  EXPECT_EQ(ffd_cli(dir.path(), "synth --out " + d + "/x --separation loose").code, 1);

  const CliRun missing = ffd_cli(dir.path(), "baseline --data " + d + "/absent.csv --out " + d + "/b.json");
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("absent.csv"), std::string::npos);
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);

  testutil::write_text(dir.path() / "bad.json", R"({"seed": 1, "colour": "red"})");
  const CliRun bad_cfg = ffd_cli(dir.path(), "--config " + d + "/bad.json synth --out " + d + "/x");
  EXPECT_EQ(bad_cfg.code, 1);
  EXPECT_NE(bad_cfg.err.find("colour"), std::string::npos) << bad_cfg.err;

  testutil::write_text(dir.path() / "broken.csv", "id,eye\nA,R\n");
  EXPECT_EQ(ffd_cli(dir.path(), "baseline --data " + d + "/broken.csv --out " + d + "/b.json").code, 1);

  testutil::write_text(dir.path() / "file", "");
  EXPECT_EQ(ffd_cli(dir.path(), "synth --out " + d + "/file/sub").code, 1);
  EXPECT_EQ(ffd_cli(dir.path(), "train --features " + d + "/bad.json --family svm --out " + d + "/m.json").code, 1);
}

TEST(Cli, MaskCorpusLocalises) {
  testutil::TempDir dir;
  const std::string d = dir.path().string();
  const std::string cfg = "--config " + write_small_config(dir.path()).string() + " ";
  const CliRun s = ffd_cli(dir.path(), cfg + "synth --out " + d + "/data --masks " + d + "/masks --mask-sequences 2");
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(s.out.find("wrote 300 masks"), std::string::npos) << s.out;
  const CliRun l = ffd_cli(dir.path(), cfg + "localize --manifest " + d + "/masks/manifest.csv --out " + d + "/loc.csv");
  ASSERT_EQ(l.code, 0) << l.err;
  EXPECT_NE(l.out.find("in 2 sequences"), std::string::npos) << l.out;
  const std::string csv = testutil::read_text(dir.path() / "loc.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 301);
}

TEST(Cli, BehaviouralReport) {
  testutil::TempDir dir;
  const std::string d = dir.path().string();
  const std::string cfg = "--config " + write_small_config(dir.path()).string() + " ";
  ASSERT_EQ(ffd_cli(dir.path(), cfg + "synth --out " + d + "/data").code, 0);
  ASSERT_EQ(ffd_cli(dir.path(), cfg + "baseline --data " + d + "/data/train.csv --out " + d + "/b.json").code, 0);
  const CliRun r = ffd_cli(dir.path(), cfg + "report --data " + d + "/data/train.csv --baselines " + d +
                                        "/b.json --out " + d + "/plots");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "plots" / "ratio_x.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "plots" / "baseline_lines.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "plots" / "dispersion.csv"));
}

TEST(Cli, CrossValidationAndGridSearch) {
  testutil::TempDir dir;
  full_pipeline(dir.path());
  const std::string d = dir.path().string();
  testutil::write_text(dir.path() / "grid.json", R"({"max_depth": [2, 4], "n_estimators": [10, 20]})");
  const std::string cfg = "--config " + d + "/config.json ";
  const CliRun r = ffd_cli(dir.path(), cfg + "train --features " + d + "/train.jsonl --family rf --cv --grid " + d +
                                        "/grid.json --validation " + d + "/test.jsonl --out " + d + "/g.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("5-fold cv accuracy"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("grid search: 4 combinations"), std::string::npos) << r.out;
}
