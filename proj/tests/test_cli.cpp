#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(testing::TempDir()) /
           ("entlab_cli_" + std::string(testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str({});
    err_.str({});
    return entlab::cli::run(args, out_, err_);
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  // hwp0 = 0 sends |1,0> and |0,1> straight to the two detectors.
  std::string model(double loss, double hwp0 = 0.0) const {
    const std::string p = path("model.json");
    write("model.json", json{{"eta1", 0.209}, {"eta2", 0.201}, {"loss", loss}, {"hwp0_deg", hwp0}, {"pbs", true}}.dump());
    return p;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, SimulateWritesOneFilePerRepetition) {
  ASSERT_EQ(run({"simulate", "--model", model(0.0), "--reps", "6", "--shots", "100000", "--out", path("sim")}), 0)
      << err_.str();
  for (int k = 1; k <= 6; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "counts_rep%02d.json", k);
    const json j = json::parse(slurp(path("sim/") + name));
    EXPECT_EQ(j.size(), 19u);
  }
  const json manifest = json::parse(slurp(path("sim/manifest.json")));
  EXPECT_EQ(manifest["command"], "simulate");
  EXPECT_EQ(manifest["artifacts"].size(), 6u);
  EXPECT_EQ(manifest["seed"], 1);
}

TEST_F(Cli, SimulateIsByteDeterministic) {
  ASSERT_EQ(run({"simulate", "--model", model(0.5), "--reps", "1", "--seed", "9", "--out", path("a")}), 0);
  ASSERT_EQ(run({"simulate", "--model", model(0.5), "--reps", "1", "--seed", "9", "--out", path("b")}), 0);
  EXPECT_EQ(slurp(path("a/counts_rep01.json")), slurp(path("b/counts_rep01.json")));
}

TEST_F(Cli, SimulateRejectsZeroShots) {
  EXPECT_EQ(run({"simulate", "--model", model(0.0), "--shots", "0", "--out", path("x")}), 2);
  EXPECT_NE(err_.str().find("shots"), std::string::npos);
}

TEST_F(Cli, ReconstructExactProbabilities) {
  ASSERT_EQ(run({"simulate", "--model", model(1.0), "--exact", "--out", path("ex")}), 0);
  ASSERT_EQ(run({"reconstruct", "--exact", path("ex/exact.json"), "--out", path("rec.json")}), 0) << err_.str();
  const json r = json::parse(slurp(path("rec.json")));
  EXPECT_LE(r["residual"].get<double>(), 1e-8);
  EXPECT_TRUE(r["converged"].get<bool>());
  EXPECT_EQ(r["on_4x4"]["n"], 4);
  EXPECT_EQ(r["on"]["n"], 6);
}

TEST_F(Cli, ReconstructSimulatedCountsRecoversEfficiencies) {
  ASSERT_EQ(run({"simulate", "--model", model(0.0), "--reps", "1", "--out", path("sim")}), 0);
  ASSERT_EQ(run({"reconstruct", "--counts", path("sim/counts_rep01.json"), "--out", path("rec.json")}), 0);
  const json on = json::parse(slurp(path("rec.json")))["on"]["re_im"];
  EXPECT_NEAR(on[7][0].get<double>(), 0.209, 0.01);   // (1,0),(1,0)
  EXPECT_NEAR(on[14][0].get<double>(), 0.201, 0.01);  // (0,1),(0,1)
}

TEST_F(Cli, ReconstructErrors) {
  write("bad.json", "[{\"probe_id\": \"e01\",");
  EXPECT_EQ(run({"reconstruct", "--counts", path("bad.json"), "--out", path("r.json")}), 2);
  EXPECT_NE(err_.str().find("line 1"), std::string::npos) << err_.str();

  write("unknown.json", R"([{"probe_id":"zz","shots":10,"on_count":1}])");
  EXPECT_EQ(run({"reconstruct", "--counts", path("unknown.json"), "--out", path("r.json")}), 2);
  EXPECT_NE(err_.str().find("zz"), std::string::npos);

  EXPECT_EQ(run({"reconstruct", "--counts", path("missing.json"), "--out", path("r.json")}), 4);
  EXPECT_EQ(run({"reconstruct", "--out", path("r.json")}), 2);
}

TEST_F(Cli, ReconstructNonConvergenceExitsThree) {
  json counts = json::array();
  for (int k = 1; k <= 19; ++k) {
    char id[8];
    std::snprintf(id, sizeof id, "e%02d", k);
    counts.push_back({{"probe_id", id}, {"shots", 100}, {"on_count", 100}});
  }
  write("all.json", counts.dump());
  EXPECT_EQ(run({"reconstruct", "--counts", path("all.json"), "--max-iters", "1", "--tol", "1e-300", "--out",
                 path("r.json")}),
            3);
  EXPECT_FALSE(json::parse(slurp(path("r.json")))["converged"].get<bool>());
}

TEST_F(Cli, MeasureProductAndReconstruction) {
  json product{{"n", 4}, {"labels", {{0, 0}, {0, 1}, {1, 0}, {1, 1}}}, {"re_im", json::array()}};
  for (int i = 0; i < 16; ++i) product["re_im"].push_back({i % 5 == 0 ? 0.25 * (1 + i / 5) : 0.0, 0.0});
  write("product.json", product.dump());
  ASSERT_EQ(run({"measure", path("product.json"), "--out", path("m.json")}), 0) << err_.str();
  EXPECT_EQ(json::parse(slurp(path("m.json")))["m_ln"], 0.0);

  ASSERT_EQ(run({"simulate", "--model", model(1.0, 22.5), "--exact", "--out", path("ex")}), 0);
  ASSERT_EQ(run({"reconstruct", "--exact", path("ex/exact.json"), "--out", path("rec.json")}), 0);
  ASSERT_EQ(run({"measure", "--povm", path("rec.json"), "--out", path("m1.json")}), 0);
  const double m = json::parse(slurp(path("m1.json")))["m_ln"].get<double>();
  EXPECT_GT(m, 0.2);
  EXPECT_LT(m, 0.35);
}

TEST_F(Cli, MeasureRejectsNonPsd) {
  json bad{{"n", 4}, {"labels", {{0, 0}, {0, 1}, {1, 0}, {1, 1}}}, {"re_im", json::array()}};
  for (int i = 0; i < 16; ++i) bad["re_im"].push_back({i == 0 ? -1.0 : (i % 5 == 0 ? 1.0 : 0.0), 0.0});
  write("bad.json", bad.dump());
  EXPECT_EQ(run({"measure", path("bad.json"), "--out", path("m.json")}), 2);
  EXPECT_NE(err_.str().find("positive semidefinite"), std::string::npos);
}

TEST_F(Cli, SweepWritesCsvAndPovms) {
  ASSERT_EQ(run({"sweep", "--grid", "0:1:3", "--out", path("sweep.csv"), "--emit-povms"}), 0) << err_.str();
  const std::string csv = slurp(path("sweep.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "L,m_ln,stderr,source");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const json povms = json::parse(slurp(path("sweep.povms.json")));
  EXPECT_EQ(povms["points"].size(), 3u);
  EXPECT_EQ(povms["points"][0]["povm"]["n"], 4);
  EXPECT_EQ(run({"sweep", "--mode", "bogus", "--out", path("s.csv")}), 2);
  EXPECT_EQ(run({"sweep", "--grid", "0:2:3", "--out", path("s.csv")}), 2);
}

TEST_F(Cli, SwapCheck) {
  ASSERT_EQ(run({"swap-check", "--trials", "1000", "--seed", "3", "--out", path("a.json")}), 0);
  EXPECT_EQ(out_.str().substr(0, 4), "PASS");
  ASSERT_EQ(run({"swap-check", "--trials", "1000", "--seed", "3", "--out", path("b.json")}), 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_LE(json::parse(slurp(path("a.json")))["max_abs_difference"].get<double>(), 1e-9);
  EXPECT_EQ(run({"swap-check", "--trials", "0", "--out", path("c.json")}), 2);
}

TEST_F(Cli, ProbesReport) {
  ASSERT_EQ(run({"probes", "--probes", "minimal14", "--out", path("p.json")}), 0);
  EXPECT_EQ(json::parse(slurp(path("p.json"))).size(), 14u);
  EXPECT_EQ(json::parse(slurp(path("p.conditioning.json")))["rank"], 14);
}

TEST_F(Cli, ReplayReproducesOutputs) {
  ASSERT_EQ(run({"sweep", "--mode", "simulated", "--grid", "0.5:1:2", "--shots", "5000", "--reps", "2", "--out",
                 path("s.csv")}),
            0);
  const std::string first = slurp(path("s.csv"));
  fs::remove(path("s.csv"));
  ASSERT_EQ(run({"replay", path("s.csv.manifest.json")}), 0);
  EXPECT_EQ(slurp(path("s.csv")), first);
  const json manifest = json::parse(slurp(path("s.csv.manifest.json")));
  EXPECT_EQ(manifest["artifacts"][0], path("s.csv"));
  EXPECT_EQ(manifest["parameters"]["mode"], "simulated");
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"simulate", "--out", path("x")}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(Cli, ExecutableRuns) {
  const std::string cmd = std::string(ENTLAB_CLI_PATH) + " swap-check --trials 10 --out " + path("r.json") +
                          " > " + path("stdout.txt");
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp(path("stdout.txt")).substr(0, 4), "PASS");
}
