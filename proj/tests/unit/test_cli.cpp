#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using ftheat::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ftheat_test_cli_" + name);
}

}  // namespace

TEST(Cli, CelticsPooledPairStats) {
  const auto events = call({"celtics"});
  ASSERT_EQ(events.code, 0) << events.err;
  const auto r = call({"pair-stats", "--pooled"}, events.out);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2049"), std::string::npos);
  EXPECT_NE(r.out.find("71.9%"), std::string::npos);
  EXPECT_NE(r.out.find("77.6%"), std::string::npos);
  EXPECT_NE(r.out.find("5.7%"), std::string::npos);
  EXPECT_NE(r.out.find("4.22"), std::string::npos);
}

TEST(Cli, CsvCarriesFullPrecision) {
  const auto events = call({"celtics"});
  const auto r = call({"--format", "csv", "pair-stats", "--pooled"}, events.out);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Total,2049,1473,1590,"), std::string::npos);
}

TEST(Cli, MalformedRowNamesLine) {
  const std::string bad =
      "game_id,player_id,elapsed_seconds,shot_in_trip,shots_in_trip,made\n"
      "g1,A,10,1,2,1\n"
      "g1,A,10,2,2,maybe\n";
  const auto r = call({"ingest-check"}, bad);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(call({"bogus"}).code, 1);
  EXPECT_EQ(call({}).code, 1);
  EXPECT_EQ(call({"--format", "xml", "celtics"}).code, 1);
  EXPECT_EQ(call({"power", "--p1", "0.7", "--p2", "0.8", "--replicates", "100"}).code, 1);
  EXPECT_EQ(call({"posterior"}).code, 1);
  EXPECT_EQ(call({"--help"}).code, 0);
}

TEST(Cli, ResolvedConfigurationOnStderr) {
  const auto r = call({"--seed", "9", "celtics"});
  EXPECT_NE(r.err.find("seed = 9"), std::string::npos);
  EXPECT_NE(r.err.find("celtics.output = -"), std::string::npos);
  EXPECT_EQ(r.err.find("pair-stats."), std::string::npos);
}

TEST(Cli, SimulateAndFitAreDeterministic) {
  const std::vector<std::string> sim = {"--seed", "5", "simulate", "--mu", "1.0,1.3",
                                        "--sigma", "0.3,0.1,0.3", "--players", "30", "--games", "20"};
  const auto a = call(sim), b = call(sim);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const std::vector<std::string> fit = {"--format", "json", "fit-model1", "--m", "2"};
  const auto fa = call(fit, a.out), fb = call(fit, a.out);
  ASSERT_EQ(fa.code, 0) << fa.err;
  EXPECT_EQ(fa.out, fb.out);
  EXPECT_NE(fa.out.find("\"components\""), std::string::npos);
}

TEST(Cli, ConfigFileFromEnvironment) {
  const auto path = temp_file("config.toml");
  {
    std::ofstream f(path);
    f << "format = \"csv\"\n";
  }
  ::setenv("FTHEAT_CONFIG", path.c_str(), 1);
  const auto events = call({"celtics"});
  const auto r = call({"pair-stats", "--pooled"}, events.out);
  ::unsetenv("FTHEAT_CONFIG");
  std::filesystem::remove(path);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("format = csv"), std::string::npos);
  EXPECT_EQ(r.out.rfind("Player,N,", 0), 0u) << r.out;
}

TEST(Cli, RecoverCelticsRoundTrip) {
  const auto r = call({"--format", "csv", "recover-gvt", "--celtics"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Bird"), std::string::npos);
}

TEST(Cli, PowerFromProbabilities) {
  const auto r = call({"--format", "csv", "power", "--p1", "0.73", "--p2", "0.78"});
  ASSERT_EQ(r.code, 0) << r.err;
  // Conditional rates 0.78594 / 0.76394 differ by the default 0.022 gap.
  EXPECT_NE(r.out.find("0.78594"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(",10000,"), std::string::npos) << r.out;
}
