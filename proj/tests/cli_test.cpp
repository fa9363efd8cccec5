// Drives the installed gbfuzz binary end to end; GBFUZZ_BIN is injected by
// the build.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct CommandResult {
  int exit_code;
  std::string out;
};

CommandResult run_cli(const std::string& args) {
  const fs::path out_path =
      fs::temp_directory_path() / "gbfuzz_cli_test_out.txt";
  const std::string cmd = std::string(GBFUZZ_BIN) + " " + args + " > " +
                          out_path.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  fs::remove(out_path);
  return {WEXITSTATUS(rc), buf.str()};
}

fs::path write_zero_seed(size_t n) {
  const fs::path p = fs::temp_directory_path() / "gbfuzz_cli_test_seed.bin";
  std::ofstream f(p, std::ios::binary);
  const std::string zeros(n, '\0');
  f.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
  return p;
}

TEST(Cli, CorpusListsBuiltins) {
  const auto res = run_cli("corpus");
  EXPECT_EQ(res.exit_code, 0);
  for (const char* name : {"fig_branches", "fig_intervals", "fig_loopcount",
                           "magic_deep", "wide_shallow"}) {
    EXPECT_NE(res.out.find(name), std::string::npos) << name;
  }
}

TEST(Cli, CorpusDumpPrintsParsableSource) {
  const auto res = run_cli("corpus --dump fig_intervals");
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_NE(res.out.find("if x[2] > 10 {"), std::string::npos);
  EXPECT_NE(run_cli("corpus --dump nonesuch").exit_code, 0);
}

TEST(Cli, CovAnalyzeReproducesPaperCell) {
  const auto res = run_cli("cov-analyze --n-bits 16 --m 4 --edges 8000");
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_EQ(res.out, "0.701\n");
}

TEST(Cli, CovAnalyzeTableHasFiveRows) {
  const auto res = run_cli("cov-analyze --table --n-bits 16");
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_NE(res.out.find("m/edges,3000"), std::string::npos);
  EXPECT_NE(res.out.find("0.701"), std::string::npos);
  EXPECT_NE(res.out.find("0.871"), std::string::npos);
}

TEST(Cli, TaintReportsLine6Offset100) {
  const auto seed = write_zero_seed(1024);
  const auto res =
      run_cli("taint --program fig_branches --seed " + seed.string());
  EXPECT_EQ(res.exit_code, 0);
  const auto j = nlohmann::json::parse(res.out);
  ASSERT_TRUE(j["branches"].contains("6"));
  EXPECT_EQ(j["branches"]["6"], nlohmann::json::array({100}));
  fs::remove(seed);
}

TEST(Cli, SolvePrintsTheFig3System) {
  const auto seed_path =
      fs::temp_directory_path() / "gbfuzz_cli_test_seed100.bin";
  {
    std::string bytes(1024, '\0');
    bytes[2] = static_cast<char>(100);
    std::ofstream f(seed_path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  const auto res = run_cli("solve --program fig_intervals --seed " +
                           seed_path.string() + " --branch 9");
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_NE(res.out.find("x[2:1] in [11,200]"), std::string::npos);
  EXPECT_NE(res.out.find("unsolved branch 9:0"), std::string::npos);
  fs::remove(seed_path);
}

TEST(Cli, FuzzZeroIterationsYieldsHeaderOnlyTimeline) {
  const fs::path timeline =
      fs::temp_directory_path() / "gbfuzz_cli_test_timeline.csv";
  const auto res = run_cli("fuzz --program magic_deep --iterations 0 "
                           "--timeline-out " + timeline.string());
  EXPECT_EQ(res.exit_code, 0);
  std::ifstream in(timeline);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 2u);  // header plus the initial seed row
  EXPECT_EQ(lines[0], "iteration,coverage");
  EXPECT_EQ(lines[1].substr(0, 2), "0,");
  fs::remove(timeline);
}

TEST(Cli, UnknownFlagFailsWithNonzeroExit) {
  EXPECT_NE(run_cli("fuzz --program magic_deep --no-such-flag").exit_code, 0);
  EXPECT_NE(run_cli("frobnicate").exit_code, 0);
}

TEST(Cli, ProgramParseErrorsAreDiagnosed) {
  const fs::path bad = fs::temp_directory_path() / "gbfuzz_cli_bad.gbf";
  std::ofstream(bad) << "input 4\nbogus statement\n";
  const auto res = run_cli("fuzz --program " + bad.string());
  EXPECT_NE(res.exit_code, 0);
  fs::remove(bad);
}

TEST(Cli, StatsStreamsAreByteIdenticalAcrossRuns) {
  const fs::path s1 = fs::temp_directory_path() / "gbfuzz_cli_stats1.jsonl";
  const fs::path s2 = fs::temp_directory_path() / "gbfuzz_cli_stats2.jsonl";
  const std::string base =
      "fuzz --program fig_branches --iterations 20 --rng-seed 9 --stats-out ";
  EXPECT_EQ(run_cli(base + s1.string()).exit_code, 0);
  EXPECT_EQ(run_cli(base + s2.string()).exit_code, 0);
  std::ifstream f1(s1), f2(s2);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  EXPECT_EQ(b1.str(), b2.str());
  EXPECT_FALSE(b1.str().empty());
  fs::remove(s1);
  fs::remove(s2);
}

TEST(Cli, ConfigFileUsesDocumentedKeys) {
  const fs::path cfg = fs::temp_directory_path() / "gbfuzz_cli_test.cfg";
  std::ofstream(cfg) << "max_iterations = 5\nrng_seed = 3\n";
  const auto res = run_cli("fuzz --program fig_branches --config " +
                           cfg.string());
  EXPECT_EQ(res.exit_code, 0);
  const auto j = nlohmann::json::parse(res.out);
  EXPECT_EQ(j["iterations"], 5);
  fs::remove(cfg);
}

}  // namespace
