#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gmsde/commands.hpp"

using namespace gmsde;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(const fs::path& dir) {
  ExperimentConfig c;
  c.preset_params.k_trunc = 30;
  c.preset_params.m = 4;
  c.paths_per_scenario = 10;
  c.steps_per_unit_time = 128;
  c.eps_list = {0.1, 0.03, 0.01};
  c.output_dir = dir.string();
  c.threads = 1;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gmsde-test-" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(CmdRun, WritesArtifactsDeterministically) {
  const auto dir = scratch("run");
  std::ostringstream out, err;
  const int a = cmd_run(tiny(dir / "a"), out, err);
  const int b = cmd_run(tiny(dir / "b"), out, err);
  EXPECT_TRUE(a == 0 || a == 2);
  EXPECT_EQ(a, b);
  const auto csv = slurp(dir / "a" / "rates.csv");
  EXPECT_EQ(csv.rfind("eps,horizon,err2p,stderr,capacity@0.050000000000000003,capacity@0.10000000000000001,"
                      "capacity@0.20000000000000001\n",
                      0),
            0u);
  EXPECT_EQ(csv, slurp(dir / "b" / "rates.csv"));
  auto sa = json::parse(slurp(dir / "a" / "summary.json"));
  auto sb = json::parse(slurp(dir / "b" / "summary.json"));
  sa["config"].erase("output_dir");
  sb["config"].erase("output_dir");
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa["version"], kVersion);
  EXPECT_TRUE(sa.contains("slope"));
  EXPECT_TRUE(sa["pass"].contains("all"));
  EXPECT_EQ(sa["seeds"]["base_seed"], 42);
  const auto plot = slurp(dir / "a" / "plot.gp");
  EXPECT_EQ(plot.rfind("# generated ", 0), 0u);
  EXPECT_NE(plot.find("rates.csv"), std::string::npos);
  // Everything after the timestamp line matches.
  const auto pb = slurp(dir / "b" / "plot.gp");
  EXPECT_EQ(plot.substr(plot.find('\n')), pb.substr(pb.find('\n')));
  EXPECT_FALSE(fs::exists(dir / "a" / "paths.csv"));
}

TEST(CmdRun, ZeroPresetPassesTrivially) {
  const auto dir = scratch("zero");
  auto c = tiny(dir);
  c.preset = "zero";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(c, out, err), 0);
  const auto s = json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(s["identically_zero"].get<bool>());
  EXPECT_TRUE(s["slope"].is_null());
}

TEST(CmdRun, EmitsPathsWhenAsked) {
  const auto dir = scratch("paths");
  auto c = tiny(dir);
  c.emit_paths = true;
  c.eps_list = {0.1, 0.05, 0.02};
  std::ostringstream out, err;
  cmd_run(c, out, err);
  const auto paths = slurp(dir / "paths.csv");
  EXPECT_EQ(paths.rfind("scenario,path,t,B,QV\n", 0), 0u);
  EXPECT_GT(std::count(paths.begin(), paths.end(), '\n'), 8 * 64);
}

TEST(CmdRun, UnwritableOutputIsExitOne) {
  const auto dir = scratch("unwritable");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  auto c = tiny(dir / "file" / "sub");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(c, out, err), 1);
  EXPECT_NE(err.str().find("error"), std::string::npos);
  EXPECT_EQ(cmd_check(c, out, err), 1);
  EXPECT_EQ(cmd_demo_example4(c, out, err), 1);
}

TEST(CmdCheck, PrintsTableAndPasses) {
  const auto dir = scratch("check");
  auto c = tiny(dir);
  c.paths_per_scenario = 20;
  std::ostringstream out, err;
  const int code = cmd_check(c, out, err);
  EXPECT_EQ(code, 0) << out.str();
  EXPECT_NE(out.str().find("PASS  expectation axioms"), std::string::npos);
  EXPECT_NE(out.str().find("B-D-G"), std::string::npos);
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
}

TEST(CmdDemo, WritesIntoSubdirectoryWithDeviation) {
  const auto dir = scratch("demo");
  auto c = tiny(dir);
  c.scheme.kind = "projection";
  std::ostringstream out, err;
  const int code = cmd_demo_example4(c, out, err);
  EXPECT_TRUE(code == 0 || code == 2) << err.str();
  const auto sub = dir / "demo-example4";
  for (const char* f : {"rates.csv", "summary.json", "plot.gp", "deviation.csv"}) EXPECT_TRUE(fs::exists(sub / f));
  const auto s = json::parse(slurp(sub / "summary.json"));
  EXPECT_EQ(s["preset"], "example4");
  ASSERT_TRUE(s.contains("deviation"));
  EXPECT_EQ(s["deviation"]["rows"].size(), 16u);
  for (const auto& row : s["deviation"]["rows"]) EXPECT_GT(row["dev_f"].get<double>(), 0.0);
  const auto dev = slurp(sub / "deviation.csv");
  EXPECT_EQ(dev.rfind("x,T1,dev_f,dev_g,dev_sigma_sq,cesaro_f,cesaro_g,cesaro_sigma\n", 0), 0u);
}
