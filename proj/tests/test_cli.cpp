#include <gtest/gtest.h>
#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out, err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mmec_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" MMEC_CLI_PATH "' " + args + " >stdout.txt 2>stderr.txt";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read("stdout.txt");
    r.err = read("stderr.txt");
    fs::remove(dir_ / "stdout.txt");
    fs::remove(dir_ / "stderr.txt");
    return r;
  }
  std::string read(const fs::path& rel) const {
    std::ifstream in(dir_ / rel);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  void write(const fs::path& rel, const std::string& text) const {
    fs::create_directories((dir_ / rel).parent_path());
    std::ofstream(dir_ / rel) << text;
  }
  std::size_t count(const fs::path& rel) const {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir_ / rel)) n += e.is_regular_file();
    return n;
  }
  void small_config() const {
    write("small.cfg", "epochs=2\nd_model=8\nheads=2\nhead_dim=4\nhead_hidden=8\nembedding_dim=4\nbatch_size=16\n");
  }

  fs::path dir_;
};

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t occurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
  return n;
}

TEST_F(CliTest, GenerateWritesRequestedCountWithManifest) {
  const Outcome r = run("--seed 5 generate --task paired --n 10000 -o data/paired.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(read("data/paired.jsonl")), 10000u);
  const auto m = nlohmann::json::parse(read("data/generate.manifest.json"));
  EXPECT_EQ(m["command"], "generate");
  EXPECT_EQ(m["seed"], 5);
  EXPECT_EQ(m["artifacts"].size(), 1u);
  EXPECT_TRUE(m.contains("version"));
  EXPECT_TRUE(m.contains("started"));
  EXPECT_TRUE(m.contains("config"));
}

TEST_F(CliTest, GenerateIsDeterministic) {
  ASSERT_EQ(run("--seed 9 generate --task structured-arrival --n 300 -o a.jsonl").code, 0);
  ASSERT_EQ(run("--seed 9 generate --task structured-arrival --n 300 -o b.jsonl").code, 0);
  ASSERT_EQ(run("--seed 10 generate --task structured-arrival --n 300 -o c.jsonl").code, 0);
  EXPECT_EQ(read("a.jsonl"), read("b.jsonl"));
  EXPECT_NE(read("a.jsonl"), read("c.jsonl"));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  Outcome r = run("generate --task audio --n 3 -o x.jsonl");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("audio"), std::string::npos);
  EXPECT_NE(r.err.find("--task"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "x.jsonl"));
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("train --objective larm").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, MissingDatasetLeavesNoOutputs) {
  const Outcome r = run("--out-dir out train --data missing.jsonl");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("missing.jsonl"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  EXPECT_EQ(run("--out-dir out2 sweep --data missing.jsonl").code, 1);
  EXPECT_FALSE(fs::exists(dir_ / "out2"));
}

TEST_F(CliTest, UnknownConfigKeyNamed) {
  ASSERT_EQ(run("generate --task paired --n 20 -o d.jsonl").code, 0);
  write("bad.cfg", "epochs=1\nwarmup_steps=3\n");
  const Outcome r = run("--config bad.cfg --out-dir out train --data d.jsonl");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("warmup_steps"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(CliTest, TrainWritesLabeledArtifacts) {
  small_config();
  ASSERT_EQ(run("--seed 2 generate --task paired --n 120 -o d.jsonl").code, 0);
  const Outcome r = run("--config small.cfg --out-dir out train --data d.jsonl --objective larm --mu 0.01");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"model_larm.json", "training_log_larm.csv", "points_larm.csv", "rollouts_larm.csv",
                        "train.manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
  EXPECT_EQ(lines(read("out/training_log_larm.csv")), 3u);
  const auto m = nlohmann::json::parse(read("out/train.manifest.json"));
  EXPECT_EQ(m["objective"], "larm");
  EXPECT_EQ(m["config"]["mu"], "0.01");
}

TEST_F(CliTest, SweepWritesCheckpointPerCellAndPooledPoints) {
  small_config();
  ASSERT_EQ(run("generate --task paired --n 120 -o d.jsonl").code, 0);
  const Outcome r = run("--config small.cfg --out-dir sw --workers 2 sweep --data d.jsonl --objective cis");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count("sw/checkpoints"), 15u);
  EXPECT_EQ(count("sw/logs"), 15u);
  EXPECT_EQ(lines(read("sw/points_cis.csv")), 1u + 15u * 2u);
  const auto m = nlohmann::json::parse(read("sw/sweep.manifest.json"));
  EXPECT_EQ(m["cells"].size(), 15u);
  EXPECT_EQ(m["artifacts"].size(), 32u);
}

TEST_F(CliTest, SweepIsReproducibleAcrossWorkerCounts) {
  small_config();
  ASSERT_EQ(run("generate --task paired --n 80 -o d.jsonl").code, 0);
  ASSERT_EQ(run("--config small.cfg --out-dir a --workers 1 sweep --data d.jsonl --mu-list 0.001,0.1 --trials 2").code,
            0);
  ASSERT_EQ(run("--config small.cfg --out-dir b --workers 3 sweep --data d.jsonl --mu-list 0.001,0.1 --trials 2").code,
            0);
  EXPECT_EQ(read("a/points_cis.csv"), read("b/points_cis.csv"));
  EXPECT_EQ(read("a/checkpoints/cis_mu1_trial1.json"), read("b/checkpoints/cis_mu1_trial1.json"));
}

TEST_F(CliTest, ReportComputesAucAndSkipsSvgByDefault) {
  write("points_cis.csv", "mu,trial,epoch,mean_T,accuracy\n0.1,0,1,1,0.6\n0.1,0,2,2,0.7\n0.1,0,3,2.5,0.65\n");
  write("r.csv", "stop_time,predicted,truth,signature\n1,0,0,a>b\n2,1,0,a>b\n2,1,1,b>a\n");
  const Outcome r = run("--out-dir rep report points_cis.csv --t-end 3 --chance 0.5 --rollouts cis=r.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read("rep/auc_summary.csv"), "method,trial,auc,mean_auc\ncis,0,0.6499999999999999,0.6499999999999999\n");
  EXPECT_EQ(read("rep/frontier.csv"), "method,trial,mu,epoch,mean_T,accuracy\ncis,0,0.1,1,1,0.6\ncis,0,0.1,2,2,0.7\n");
  EXPECT_EQ(read("rep/histogram_cis.csv"), "T,count\n1,1\n2,2\n");
  EXPECT_EQ(read("rep/flows_cis.csv"), "signature,T,count\na>b,1,1\na>b,2,1\nb>a,2,1\n");
  for (const auto& e : fs::directory_iterator(dir_ / "rep")) EXPECT_NE(e.path().extension(), ".svg");
}

TEST_F(CliTest, ReportSvgHasOneMarkerPerFrontierPoint) {
  write("points_larm.csv", "mu,trial,epoch,mean_T,accuracy\n0.1,0,1,1,0.6\n0.1,0,2,2,0.7\n0.1,1,1,3,0.9\n");
  write("rollouts_larm.csv", "stop_time,predicted,truth,signature\n1,0,0,a\n3,1,1,a\n");
  const Outcome r = run("--out-dir rep report points_larm.csv --t-end 4 --rollouts rollouts_larm.csv --svg");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string svg = read("rep/frontier.svg");
  EXPECT_EQ(occurrences(svg, "<circle"), 3u);
  EXPECT_EQ(occurrences(svg, "data-method=\"larm\""), 2u);
  EXPECT_EQ(occurrences(read("rep/histogram_larm.svg"), "<rect"), 2u);
}

TEST_F(CliTest, ReportNamesMalformedLine) {
  write("points_cis.csv", "mu,trial,epoch,mean_T,accuracy\n0.1,0,1,1,0.6\n0.1,0,two,2,0.7\n");
  const Outcome r = run("--out-dir rep report points_cis.csv --t-end 3");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "rep"));
}

}  // namespace
