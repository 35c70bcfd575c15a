#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "mchain");
  std::ostringstream out, err;
  const int code = mchain::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("mchain_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"toy", "--help"}).code, 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train"}).code, 2);
  EXPECT_EQ(run({"toy", "--lr", "abc"}).code, 2);
  EXPECT_EQ(run({"toy", "--variants", "plain,deep"}).code, 2);
  EXPECT_EQ(run({"depth-sweep", "--variants", "plain"}).code, 2);
  const Outcome o = run({"simulate", "--L", "1"});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("L must be >= 2"), std::string::npos);
}

TEST(Cli, ConfigWithUnknownKeyExitsTwo) {
  const auto dir = scratch("cfg");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"steps": 10, "momentun": 0.9})";
  EXPECT_EQ(run({"toy", "--config", (dir / "bad.json").string()}).code, 2);
  EXPECT_EQ(run({"toy", "--config", (dir / "missing.json").string()}).code, 2);
  std::filesystem::remove_all(dir);
}

TEST(Cli, NoiselessFullCorrectionSimulationPasses) {
  const auto dir = scratch("sim");
  const Outcome o = run({"simulate", "--sigma", "0", "--kappa", "1", "--trials", "200", "--out", dir.string()});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out.rfind("PASS empirical_mse=0 ", 0), 0u) << o.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "simulate.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Cli, ShortToyRunWritesOutputs) {
  const auto dir = scratch("toy");
  const Outcome o = run({"toy", "--steps", "50", "--log-every", "10", "--out", dir.string()});
  EXPECT_EQ(o.code, 0) << o.err;
  for (const char* f : {"toy-plain-seed0.csv", "toy-skip-seed0.csv", "toy-markov-seed0.csv", "toy-summary.csv",
                        "toy.svg", "toy-run.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::filesystem::remove_all(dir);
}

TEST(Cli, GradcheckPasses) {
  const Outcome o = run({"gradcheck", "--cases", "5"});
  EXPECT_EQ(o.code, 0) << o.out;
}
