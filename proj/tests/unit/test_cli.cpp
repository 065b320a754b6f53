#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gformula/csv.hpp"
#include "gformula/ingest.hpp"
#include "gformula/simulation.hpp"

namespace fs = std::filesystem;
using namespace gformula;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(GFORMULA_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gformula_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }
  std::string analysis_json(const std::string& clusters) const {
    return R"({"input": {"clusters": ")" + clusters +
           R"(", "covariates": ["L1", "L2"]}, "policies": {"alphas": [0.4, 0.6], "contrasts": [[0.6, 0.4]]},
               "run": {"output_dir": ")" + (dir_ / "out").string() + R"("}})";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TruthPrintsTheAnalyticTable) {
  const CliRun r = run("truth");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  const CsvTable t = CsvTable::parse(in);
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t.cell(0, 0), "mu(0.4)");
  EXPECT_NEAR(t.number(0, 1), 0.418, 5e-4);
  EXPECT_EQ(t.cell(3, 0), "delta(0.6,0.4)");
  EXPECT_NEAR(t.number(3, 1), -0.038, 5e-4);
}

TEST_F(CliTest, EstimateWritesOutputs) {
  write("c.csv", cluster_table_csv(generate_dataset(standard_dgp_config(), 3), {"L1", "L2"}));
  const fs::path cfg = write("a.json", analysis_json("c.csv"));
  const CliRun r = run("estimate -c " + cfg.string());
  ASSERT_EQ(r.status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "estimates.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "contrasts.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
  const CliRun again = run("estimate -c " + (dir_ / "out" / "manifest.json").string());
  EXPECT_EQ(again.status, 0);
  const CliRun fit = run("fit -c " + cfg.string());
  ASSERT_EQ(fit.status, 0);
  EXPECT_NE(fit.out.find("\"treatment\""), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("--help").status, 0);
  EXPECT_EQ(run("nonsense").status, 4);
  EXPECT_EQ(run("estimate").status, 4);
  EXPECT_EQ(run("estimate -c " + (dir_ / "absent.json").string()).status, 4);
  EXPECT_EQ(run("estimate -c " + write("k.json", R"({"bogus": 1})").string()).status, 4);

  write("bad.csv", "id,n,s,y,y_denominator,L1,L2\nx,4,0.3,0.5,4,40,1\n");
  EXPECT_EQ(run("estimate -c " + write("bad.json", analysis_json("bad.csv")).string()).status, 2);

  Dataset all = generate_dataset(standard_dgp_config(), 4);
  for (auto& r : all) r.s = 1.0;
  write("all.csv", cluster_table_csv(all, {"L1", "L2"}));
  EXPECT_EQ(run("estimate -c " + write("all.json", analysis_json("all.csv")).string()).status, 3);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "estimates.csv"));
}

TEST_F(CliTest, SimulateAndClusterGeo) {
  const fs::path sim = write("s.json", R"({"dgp": {"m": 60}, "study": {"replicates": 4}})");
  const CliRun r = run("simulate -c " + sim.string() + " -o " + (dir_ / "study.csv").string());
  ASSERT_EQ(r.status, 0);
  const CsvTable t = CsvTable::read(dir_ / "study.csv");
  EXPECT_EQ(t.size(), 6u);

  write("people.csv",
        "household_id,lat,lon,stratum,treated,outcome\n"
        "a,0,0,child,1,1\nb,0,0.05,child,0,0\nc,0,0.1,child,1,0\nd,3,3,child,0,1\n");
  const fs::path cfg = write("g.json", R"({"input": {"individuals": "people.csv"},
      "policies": {"alphas": [0.5]}, "clustering": {"threshold_km": 6}})");
  const CliRun g = run("cluster-geo -c " + cfg.string() + " --assignment " + (dir_ / "assign.csv").string());
  ASSERT_EQ(g.status, 0);
  std::istringstream in(g.out);
  EXPECT_EQ(CsvTable::parse(in).size(), 2u);
  const CsvTable a = CsvTable::read(dir_ / "assign.csv");
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a.cell(2, 1), "0");
  EXPECT_EQ(a.cell(3, 1), "1");
}
