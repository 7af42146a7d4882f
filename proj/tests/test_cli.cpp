#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sfdet/cli.hpp"
#include "sfdet/report.hpp"
#include "sfdet/tensor_io.hpp"

using namespace sfdet;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sfdet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }

  std::string tensor(const std::string& name, std::vector<std::uint32_t> dims, float fill) {
    Tensor t{dims, std::vector<float>(1, fill)};
    t.data.assign(t.element_count(), fill);
    const fs::path p = dir_ / name;
    save_tensor(p, t);
    return p.string();
  }

  fs::path dir_;
};

const char* kLabels =
    "imagesource:GoogleEarth\n"
    "10 10 26 10 26 26 10 26 plane 0\n"
    "100 100 140 100 140 120 100 120 ship 1\n"
    "300 300 306 300 306 306 300 306 small-vehicle 0\n";

}  // namespace

TEST_F(CliTest, HelpAndVersion) {
  EXPECT_EQ(run({"--help"}).code, 0);
  const CliResult v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("0.1.0"), std::string::npos);
}

TEST_F(CliTest, ErrorsAreOneLineDiagnostics) {
  const CliResult bad_opt = run({"worstcase", "--bogus"});
  EXPECT_EQ(bad_opt.code, 2);
  EXPECT_EQ(bad_opt.err.rfind("sfdet: error: ", 0), 0u) << bad_opt.err;
  EXPECT_EQ(std::count(bad_opt.err.begin(), bad_opt.err.end(), '\n'), 1);

  const CliResult missing = run({"flops", "--model", "no-such-model"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(missing.err.rfind("sfdet: error: ", 0), 0u);
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);
  EXPECT_TRUE(missing.out.empty());

  const CliResult bad_labels = run({"stats", "--annotations", write("bad.txt", "1 2 3 plane\n")});
  EXPECT_EQ(bad_labels.code, 1);
  EXPECT_NE(bad_labels.err.find("line 1"), std::string::npos);
}

TEST_F(CliTest, CoverageReport) {
  const std::string labels = write("P0001.txt", kLabels);
  const CliResult r = run({"coverage", "--annotations", labels, "--image-size", "512", "512", "--compare"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc["command"], "coverage");
  ASSERT_EQ(doc["reports"].size(), 2u);
  for (const Json& rep : doc["reports"]) {
    double sum = rep["unmatched_fraction"].get<double>();
    for (const Json& l : rep["levels"]) sum += l["matched_fraction"].get<double>();
    EXPECT_NEAR(sum, 1.0, 1e-5);  // fractions are rounded to 6 places
    EXPECT_EQ(rep["object_count"], 3);
  }
  const CliResult csv = run({"--format", "csv", "coverage", "--annotations", labels, "--image-size", "512", "512"});
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(csv.out.rfind("level,matched_count,matched_fraction\n", 0), 0u);
  EXPECT_NE(csv.out.find("unmatched"), std::string::npos);
}

TEST_F(CliTest, ZeroLevelAnchorConfigRejected) {
  const std::string cfg = write("cfg.json", R"({"anchors": {"base_sizes": [], "aspect_ratios": [1.0], "strides": []}})");
  const CliResult r = run({"--config", cfg, "coverage", "--annotations", write("a.txt", kLabels)});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("sfdet: error: ", 0), 0u);
}

TEST_F(CliTest, WorstCaseGolden) {
  const CliResult r = run({"--format", "csv", "worstcase", "--anchor-sizes", "16", "--strides", "8", "4",
                     "--object-sizes", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "anchor_size,stride,object_size,worst_iou,below_threshold\n"
            "16.000000,4.000000,16.000000,0.620253,0\n"
            "16.000000,8.000000,16.000000,0.391304,1\n");
  const CliResult v = run({"--seed", "3", "worstcase", "--anchor-sizes", "16", "--strides", "8", "--object-sizes", "16",
                     "--verify"});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_EQ(v.out, run({"--seed", "3", "worstcase", "--anchor-sizes", "16", "--strides", "8", "--object-sizes", "16",
                        "--verify"}).out);
}

TEST_F(CliTest, ProposeAndSweep) {
  const std::string scores = tensor("scores.sft", {16, 16, 15}, 0.0f);
  const std::string deltas = tensor("deltas.sft", {16, 16, 75}, 0.0f);
  const CliResult r = run({"propose", "--scores", scores, "--deltas", deltas, "--k-pre", "200", "--k-post", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc["proposal_count"], 50);
  EXPECT_EQ(doc["proposals"].size(), 50u);

  const CliResult sweep = run({"propose", "--scores", scores, "--deltas", deltas, "--sweep"});
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  const Json rows = Json::parse(sweep.out)["sweep"];
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["budget"], 2000);
  EXPECT_EQ(rows[2]["budget"], 10000);
  const CliResult explicit_budgets = run({"propose", "--scores", scores, "--deltas", deltas, "--sweep", "10", "20"});
  ASSERT_EQ(explicit_budgets.code, 0) << explicit_budgets.err;
  EXPECT_EQ(Json::parse(explicit_budgets.out)["sweep"][1]["proposal_count"], 20);
  EXPECT_EQ(run({"propose", "--scores", scores, "--deltas", deltas, "--sweep", "0"}).code, 1);
  EXPECT_EQ(run({"propose", "--scores", scores, "--deltas", deltas, "--sweep", "ten"}).code, 1);

  const CliResult mismatch = run({"propose", "--scores", scores, "--deltas", tensor("d2.sft", {16, 16, 10}, 0.0f)});
  EXPECT_EQ(mismatch.code, 1);
}

TEST_F(CliTest, FilterConstantAndImpulse) {
  const std::string out = (dir_ / "out.sft").string();
  const CliResult c = run({"--output", out, "filter", "--input", tensor("c.sft", {8, 8, 2}, 0.3f)});
  ASSERT_EQ(c.code, 0) << c.err;
  for (float v : load_tensor(out).data) EXPECT_NEAR(v, 0.3f, 1e-6);

  const std::string csv = write("impulse.csv", "0,0,0,0,0\n0,0,0,0,0\n0,0,0.5,0,0\n0,0,0,0,0\n0,0,0,0,0\n");
  const CliResult i = run({"--output", out, "filter", "--input", csv, "--kind", "identity", "--size", "3"});
  ASSERT_EQ(i.code, 0) << i.err;
  const Tensor t = load_tensor(out);
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{5, 5, 1}));
  EXPECT_FLOAT_EQ(t.data[12], 0.5f);

  EXPECT_EQ(run({"filter", "--input", csv}).code, 1);
}

TEST_F(CliTest, NmsOnCsv) {
  const std::string in = write("p.csv",
                               "cx,cy,w,h,theta,score\n"
                               "10,10,8,8,0,0.9\n"
                               "10,10,8,8,0,0.8\n"
                               "50,50,8,8,0,0.7\n");
  const CliResult r = run({"nms", "--input", in});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc["input_count"], 3);
  EXPECT_EQ(doc["kept_count"], 2);
  EXPECT_EQ(run({"nms", "--input", write("bad.csv", "1,2,3\n")}).code, 1);
}

TEST_F(CliTest, FlopsForBundledModels) {
  for (const char* name : {"oriented-rcnn", "lsknet-t", "lsknet-s"}) {
    const CliResult r = run({"flops", "--model", name});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json doc = Json::parse(r.out);
    EXPECT_LT(doc["simplified"]["total"].get<double>(), doc["baseline"]["total"].get<double>());
    const std::string path = std::string(SFDET_SOURCE_DIR) + "/configs/" + name + ".json";
    const CliResult from_file = run({"flops", "--model", path});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    EXPECT_EQ(Json::parse(from_file.out)["simplified"], doc["simplified"]);
  }
  const CliResult t = run({"--format", "table", "flops", "--model", "lsknet-t"});
  EXPECT_NE(t.out.find("High-pass filter"), std::string::npos);
  const Json doc = Json::parse(run({"flops", "--model", "lsknet-t", "--no-hpf"}).out);
  EXPECT_EQ(doc["simplified"]["high_pass_filter"], 0.0);
}

TEST_F(CliTest, TilePlanAndTransfer) {
  const CliResult plan = run({"tile", "--image-size", "4000", "4000"});
  ASSERT_EQ(plan.code, 0) << plan.err;
  EXPECT_EQ(Json::parse(plan.out)["windows"].size(), 25u);

  const std::string labels = write("P0002.txt", kLabels);
  const fs::path out_dir = dir_ / "tiles";
  const CliResult r = run({"tile", "--annotations", labels, "--image-size", "600", "600", "--patch", "256", "--overlap",
                     "56", "--output-dir", out_dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out_dir / "P0002__0__0.txt"));
  EXPECT_NE(slurp(out_dir / "P0002__0__0.txt").find("plane"), std::string::npos);
  EXPECT_EQ(run({"tile", "--image-size", "100", "100", "--overlap", "10", "--step", "10"}).code, 1);
}

TEST_F(CliTest, StatsHistogram) {
  const CliResult r = run({"stats", "--annotations", write("s.txt", kLabels), "--bins", "0", "8", "32", "64"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc["object_count"], 3);
  EXPECT_EQ(doc["histogram"]["counts"], Json::parse("[1, 2, 0]"));
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  const std::string labels = write("d.txt", kLabels);
  const std::vector<std::vector<std::string>> cmds{
      {"coverage", "--annotations", labels, "--threads", "3"},
      {"stats", "--annotations", labels},
      {"flops"},
      {"--format", "csv", "tile", "--image-size", "3000", "2000"},
  };
  for (const auto& c : cmds) {
    const CliResult a = run(c), b = run(c);
    EXPECT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
  }
  const fs::path f1 = dir_ / "r1.json", f2 = dir_ / "r2.json";
  ASSERT_EQ(run({"-o", f1.string(), "worstcase", "--anchor-sizes", "16", "32", "--strides", "4", "8", "--object-sizes",
                 "8", "16"}).code, 0);
  ASSERT_EQ(run({"-o", f2.string(), "worstcase", "--anchor-sizes", "16", "32", "--strides", "4", "8", "--object-sizes",
                 "8", "16"}).code, 0);
  EXPECT_EQ(slurp(f1), slurp(f2));
  EXPECT_FALSE(slurp(f1).empty());
}
