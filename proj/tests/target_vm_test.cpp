#include "gbfuzz/target_vm.hpp"

#include <gtest/gtest.h>

#include "gbfuzz/corpus.hpp"
#include "test_support.hpp"

namespace gbf {
namespace {

using testing::seed_with;
using testing::zeros;

TEST(Parser, RejectsUnknownStatements) {
  try {
    parse_program("input 4\nfrobnicate x\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_NE(std::string(e.what()).find("unknown statement"), std::string::npos);
  }
}

TEST(Parser, RejectsUnclosedBlock) {
  EXPECT_THROW(parse_program("input 4\nif x[0] == 1 {\n"), ParseError);
}

TEST(Parser, RejectsMissingInput) {
  EXPECT_THROW(parse_program("let a = 1\n"), ParseError);
}

TEST(Parser, RejectsOutOfRangeLoad) {
  EXPECT_THROW(parse_program("input 4\nlet a = x[3:2]\n"), ParseError);
}

TEST(Parser, RejectsUndefinedVariable) {
  EXPECT_THROW(parse_program("input 4\nlet a = b + 1\n"), ParseError);
}

TEST(Parser, ReportsColumnInDiagnostics) {
  try {
    parse_program("input 4\nlet a = x[0] $ 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_GT(e.col, 1);
  }
}

TEST(Execute, FigBranchesLine6Record) {
  const auto prog = builtin_program("fig_branches");
  const auto input = seed_with(1024, {{100, 40}});
  const auto res = execute(prog, input, ExecMode::Record);
  const BranchRecord* rec = testing::find_branch(res, 6);
  ASSERT_NE(rec, nullptr);
  EXPECT_EQ(rec->lhs_value, 50u);  // A = x[100] + 10
  EXPECT_EQ(rec->op, CmpOp::Eq);
  EXPECT_EQ(rec->rhs_value, 50u);
  EXPECT_TRUE(rec->taken);
}

TEST(Execute, ForcedReplayOfOwnTraceIsIdentity) {
  const auto prog = builtin_program("fig_branches");
  const auto input = seed_with(1024, {{100, 40}, {200, 7}, {236, 250}});
  const auto rec = execute(prog, input, ExecMode::Record);
  const auto forced = execute(prog, input, ExecMode::Forced, &rec.trace);
  EXPECT_EQ(forced.outcome, Outcome::Normal);
  EXPECT_EQ(forced.edges, rec.edges);
}

TEST(Execute, ForcedModeTakesStoredEdgeAgainstCondition) {
  // Record with x[2]=100 (line 5 "x[2] > 10" taken), then force an input
  // with x[2]=5 onto that trace: the branch must still take the true edge.
  const auto prog = builtin_program("fig_intervals");
  const auto base = seed_with(1024, {{2, 100}});
  const auto rec = execute(prog, base, ExecMode::Record);
  const BranchRecord* base_b5 = testing::find_branch(rec, 5);
  ASSERT_NE(base_b5, nullptr);
  ASSERT_TRUE(base_b5->taken);

  const auto other = seed_with(1024, {{2, 5}});
  const auto forced = execute(prog, other, ExecMode::Forced, &rec.trace);
  const BranchRecord* b5 = testing::find_branch(forced, 5);
  ASSERT_NE(b5, nullptr);
  EXPECT_TRUE(b5->taken);
  EXPECT_EQ(b5->lhs_value, 5u);  // operand reflects the real input
  EXPECT_EQ(forced.edges, rec.edges);
}

TEST(Execute, DeterministicAcrossRuns) {
  Rng rng(11);
  for (const auto& prog : builtin_corpus()) {
    std::vector<uint8_t> input(prog.input_size);
    for (auto& b : input) b = rng.byte();
    const auto a = execute(prog, input, ExecMode::Record);
    const auto b = execute(prog, input, ExecMode::Record);
    EXPECT_EQ(a.edges, b.edges) << prog.name;
    EXPECT_EQ(a.duration, b.duration) << prog.name;
    EXPECT_EQ(a.outcome, b.outcome) << prog.name;
    ASSERT_EQ(a.trace.size(), b.trace.size()) << prog.name;
    for (size_t i = 0; i < a.trace.size(); ++i) {
      EXPECT_EQ(a.trace[i].lhs_value, b.trace[i].lhs_value);
      EXPECT_EQ(a.trace[i].taken, b.trace[i].taken);
    }
  }
}

TEST(Execute, ForcedFidelityOnRandomInputs) {
  // Forcing a trace recorded from s onto any s' yields s's edge list.
  Rng rng(22);
  const auto prog = builtin_program("fig_loopcount");
  for (int t = 0; t < 20; ++t) {
    std::vector<uint8_t> s(prog.input_size), s2(prog.input_size);
    for (auto& b : s) b = rng.byte();
    for (auto& b : s2) b = rng.byte();
    const auto rec = execute(prog, s, ExecMode::Record);
    const auto forced = execute(prog, s2, ExecMode::Forced, &rec.trace);
    EXPECT_EQ(forced.edges, rec.edges);
    EXPECT_EQ(forced.outcome, Outcome::Normal);
  }
}

TEST(Execute, TruncatedForcedTraceDiverges) {
  const auto prog = builtin_program("fig_branches");
  const auto input = zeros(1024);
  auto rec = execute(prog, input, ExecMode::Record);
  ASSERT_GT(rec.trace.size(), 1u);
  rec.trace.pop_back();
  const auto forced = execute(prog, input, ExecMode::Forced, &rec.trace);
  EXPECT_EQ(forced.outcome, Outcome::ForcedDivergence);
}

TEST(Execute, OverlongForcedTraceDiverges) {
  const auto prog = builtin_program("fig_branches");
  const auto input = zeros(1024);
  auto rec = execute(prog, input, ExecMode::Record);
  rec.trace.push_back(rec.trace.back());
  const auto forced = execute(prog, input, ExecMode::Forced, &rec.trace);
  EXPECT_EQ(forced.outcome, Outcome::ForcedDivergence);
}

TEST(Execute, InputSizeContract) {
  const auto prog = builtin_program("fig_branches");
  EXPECT_THROW(execute(prog, zeros(10)), std::invalid_argument);
  EXPECT_THROW(execute(prog, zeros(1024), ExecMode::Forced, nullptr),
               std::invalid_argument);
}

TEST(Execute, DurationPositiveAndEdgesNonEmpty) {
  const auto prog = parse_program("input 1\ncrash 3\n");
  const auto res = execute(prog, zeros(1));
  EXPECT_GT(res.duration, 0u);
  EXPECT_FALSE(res.edges.empty());
  EXPECT_EQ(res.outcome, Outcome::Crash);
  EXPECT_EQ(res.crash_site, 3u);
}

TEST(Execute, DivisionByZeroCrashes) {
  const auto prog = parse_program("input 2\nlet q = 7 / x[0]\n");
  EXPECT_EQ(execute(prog, seed_with(2, {{0, 2}})).outcome, Outcome::Normal);
  const auto res = execute(prog, zeros(2));
  EXPECT_EQ(res.outcome, Outcome::Crash);
  EXPECT_EQ(res.crash_site, 2u);  // crash site is the statement line
}

TEST(Corpus, ContainsRequiredPrograms) {
  const auto names = {"fig_branches", "fig_intervals", "fig_loopcount",
                      "magic_deep", "wide_shallow"};
  for (const auto* n : names) {
    EXPECT_NO_THROW(builtin_program(n));
  }
  EXPECT_THROW(builtin_program("nonesuch"), std::invalid_argument);
}

TEST(Corpus, FigBranchesLine8SourceBytes) {
  const auto prog = builtin_program("fig_branches");
  const BranchSite* site = prog.site(8);
  ASSERT_NE(site, nullptr);
  // S = B + C is not a verbatim copy, so the oracle annotation is empty; the
  // two loads behind it are at offsets 200 and 236.
  EXPECT_TRUE(site->source_bytes.empty());
  const BranchSite* c_site = prog.site(10);
  ASSERT_NE(c_site, nullptr);
  EXPECT_EQ(c_site->source_bytes,
            (std::vector<uint32_t>{236, 237, 238, 239}));
}

TEST(Corpus, FigLoopcountTripCount) {
  const auto prog = builtin_program("fig_loopcount");
  const auto res = execute(prog, seed_with(64, {{0, 13}}), ExecMode::Record);
  // The head->body edge multiplicity equals the loop count.
  const Stmt& loop = prog.body[5];
  ASSERT_EQ(loop.kind, Stmt::Kind::Loop);
  size_t trips = 0;
  for (const auto& e : res.edges) {
    if (e.first == loop.entry_block && e.second == loop.body_block) ++trips;
  }
  EXPECT_EQ(trips, 13u);
}

TEST(Corpus, MagicDeepCrashesOnMagicBytes) {
  const auto prog = builtin_program("magic_deep");
  const auto res =
      execute(prog, seed_with(1024, {{0, 222}, {1, 173}, {2, 190}, {3, 239}}));
  EXPECT_EQ(res.outcome, Outcome::Crash);
  EXPECT_EQ(res.crash_site, 1u);
  EXPECT_EQ(execute(prog, zeros(1024)).outcome, Outcome::Normal);
}

TEST(Corpus, WideShallowBranchCount) {
  const auto prog = builtin_program("wide_shallow");
  // 64 pages of 79 single-byte branches plus the page selectors.
  size_t single_byte = 0;
  for (const auto& site : prog.branch_sites) {
    single_byte += site.source_bytes.size() == 1;
  }
  EXPECT_GE(single_byte, 5000u);
  EXPECT_EQ(prog.input_size, 64u * 79u + 1u);
}

TEST(Corpus, SourceBytesAgreeWithByteFlipOracle) {
  // Flipping any annotated byte must change the branch operand for at least
  // one of the 255 non-identity values.
  for (const auto* name : {"fig_intervals", "fig_loopcount"}) {
    const auto prog = builtin_program(name);
    // x[2]=100 keeps the nested fig_intervals guards on the executed path.
    const auto seed = seed_with(prog.input_size, {{2, 100}});
    const auto base = execute(prog, seed, ExecMode::Record);
    for (const auto& site : prog.branch_sites) {
      bool observed = false;
      for (const auto& r : base.trace) observed |= r.branch_id == site.line;
      if (!observed) continue;
      for (uint32_t off : site.source_bytes) {
        bool changed = false;
        auto input = seed;
        for (int v = 1; v < 256 && !changed; ++v) {
          input[off] = static_cast<uint8_t>(v);
          const auto res = execute(prog, input, ExecMode::Forced, &base.trace);
          for (size_t k = 0; k < res.trace.size(); ++k) {
            if (base.trace[k].branch_id == site.line &&
                res.trace[k].lhs_value != base.trace[k].lhs_value) {
              changed = true;
              break;
            }
          }
        }
        input[off] = seed[off];
        EXPECT_TRUE(changed) << name << " line " << site.line << " byte " << off;
      }
    }
  }
}

TEST(Labels, AssignedPerBlockWithinRange) {
  auto prog = builtin_program("fig_branches");
  Rng rng(3);
  prog.assign_labels(4, 10, rng);
  ASSERT_EQ(prog.label_count(), 4);
  for (const auto& table : prog.labels) {
    ASSERT_EQ(table.size(), prog.block_count);
    for (uint32_t l : table) EXPECT_LT(l, 1u << 10);
  }
}

}  // namespace
}  // namespace gbf
