#include "gbfuzz/mutators.hpp"

#include <gtest/gtest.h>

#include <set>

#include "gbfuzz/corpus.hpp"
#include "test_support.hpp"

namespace gbf {
namespace {

using testing::seed_with;
using testing::zeros;

SeedEntry make_seed(std::vector<uint8_t> bytes) {
  SeedEntry e;
  e.bytes = std::move(bytes);
  e.duration = 1;
  return e;
}

TEST(MutationChoice, ParamDomainValidation) {
  MutationChoice c;
  c.strategy = Strategy::MutateRandBytes;
  c.mrb_ga = true;
  for (int k : kMrbGaCounts) {
    c.mrb_ga_count = k;
    EXPECT_TRUE(c.valid());
  }
  c.mrb_ga_count = 3;
  EXPECT_FALSE(c.valid());

  c = MutationChoice{};
  c.strategy = Strategy::Combiner;
  c.combiner_number = 9;
  EXPECT_FALSE(c.valid());
  c.combiner_number = 8;
  EXPECT_TRUE(c.valid());

  c = MutationChoice{};
  c.strategy = Strategy::Mingler;
  c.mingler_number = 7;
  EXPECT_FALSE(c.valid());
  c.mingler_number = 6;
  EXPECT_TRUE(c.valid());
}

TEST(Mutate, DataflowWithoutTaintIsAContractViolation) {
  const SeedEntry seed = make_seed(zeros(16));
  MutationChoice c;
  c.strategy = Strategy::MutateBytes;
  MutationContext ctx;
  Rng rng(1);
  EXPECT_THROW(mutate(seed, c, ctx, rng), std::invalid_argument);
}

struct DataflowFixture {
  TargetProgram prog = builtin_program("fig_branches");
  std::vector<uint8_t> seed_bytes = zeros(1024);
  SeedEntry seed = make_seed(seed_bytes);
  ExecutionResult seed_run;
  TaintReport taint;
  DirectCopyMap dcm;
  MutationHistory history;
  Rng rng{11};

  DataflowFixture() {
    seed_run = execute(prog, seed_bytes, ExecMode::Record);
    taint = fti_infer(prog, seed_bytes, 1);
    dcm = detect_direct_copies(prog, seed_bytes, taint);
  }

  MutationContext ctx(uint32_t branch_line) {
    MutationContext c;
    c.program = &prog;
    c.history = &history;
    c.taint = &taint;
    c.dcm = &dcm;
    c.seed_trace = &seed_run.trace;
    const auto keys = trace_keys(seed_run.trace);
    for (size_t k = 0; k < keys.size(); ++k) {
      if (keys[k].branch_id == branch_line) {
        c.target = BranchTarget{keys[k], k};
        break;
      }
    }
    return c;
  }
};

TEST(Mutate, MutateBytesTouchesOnlyDependentBytes) {
  DataflowFixture f;
  MutationChoice c;
  c.strategy = Strategy::MutateBytes;
  const std::set<uint32_t> allowed = {200, 201, 202, 203, 236, 237, 238, 239};
  for (int number : kMutateBytesNumbers) {
    c.mb_number = number;
    for (int t = 0; t < 20; ++t) {
      auto ctx = f.ctx(8);
      const auto out = mutate(f.seed, c, ctx, f.rng);
      ASSERT_FALSE(out.noop);
      size_t touched = 0;
      for (size_t i = 0; i < out.bytes.size(); ++i) {
        if (out.bytes[i] != f.seed.bytes[i]) {
          EXPECT_TRUE(allowed.contains(static_cast<uint32_t>(i)));
          ++touched;
        }
      }
      EXPECT_LE(touched, static_cast<size_t>(number));
    }
  }
}

TEST(Mutate, InvertStrategiesStayInsideTaint) {
  DataflowFixture f;
  for (Strategy s : {Strategy::InvertBranches, Strategy::InvertBranchesGa}) {
    MutationChoice c;
    c.strategy = s;
    for (int t = 0; t < 5; ++t) {
      auto ctx = f.ctx(6);
      uint64_t execs = 0;
      ctx.executions = &execs;
      const auto out = mutate(f.seed, c, ctx, f.rng);
      if (out.noop) continue;
      for (size_t i = 0; i < out.bytes.size(); ++i) {
        if (out.bytes[i] != f.seed.bytes[i]) {
          EXPECT_EQ(i, 100u) << to_string(s);
        }
      }
    }
  }
}

TEST(Mutate, CopyRemoveZeroOpsIsIdentity) {
  const SeedEntry seed = make_seed({1, 2, 3, 4, 5});
  MutationChoice c;
  c.strategy = Strategy::CopyRemove;
  c.cr_number = 0;
  MutationContext ctx;
  Rng rng(2);
  const auto out = mutate(seed, c, ctx, rng);
  EXPECT_EQ(out.bytes, seed.bytes);
}

TEST(Mutate, CrRealOnlyRearrangesExistingBytes) {
  // CR-real copies sequences already in the seed; CR-rand may invent bytes.
  const std::vector<uint8_t> base(64, 0xAA);
  const SeedEntry seed = make_seed(base);
  MutationContext ctx;
  Rng rng(3);

  MutationChoice real;
  real.strategy = Strategy::CopyRemove;
  real.cr_number = 16;
  real.cr_mode = CrMode::Real;
  for (int t = 0; t < 20; ++t) {
    const auto out = mutate(seed, real, ctx, rng);
    for (uint8_t b : out.bytes) EXPECT_EQ(b, 0xAA);
  }

  MutationChoice rand;
  rand.strategy = Strategy::CopyRemove;
  rand.cr_number = 16;
  rand.cr_mode = CrMode::Rand;
  bool saw_new_byte = false;
  for (int t = 0; t < 20 && !saw_new_byte; ++t) {
    const auto out = mutate(seed, rand, ctx, rng);
    for (uint8_t b : out.bytes) saw_new_byte |= b != 0xAA;
  }
  EXPECT_TRUE(saw_new_byte);
}

TEST(Mutate, CombinerCrossoverIsPositionMapped) {
  SeedPool pool;
  CoverageSet c0;
  pool.add(std::vector<uint8_t>(32, 0x11), c0, 1, false, 1);
  pool.add(std::vector<uint8_t>(32, 0x22), c0, 1, false, 1);

  const SeedEntry seed = make_seed(std::vector<uint8_t>(32, 0x11));
  MutationChoice c;
  c.strategy = Strategy::Combiner;
  c.combiner_number = 2;
  c.combiner_select = CombineSelect::Random;
  c.combiner_mode = CombineMode::Random;
  MutationContext ctx;
  ctx.pool = &pool;
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto out = mutate(seed, c, ctx, rng);
    ASSERT_EQ(out.bytes.size(), 32u);
    for (uint8_t b : out.bytes) {
      EXPECT_TRUE(b == 0x11 || b == 0x22);
    }
  }
}

TEST(Mingle, SplicesArchivedSolutions) {
  MutationHistory history;
  history.archive.push_back({0, {'F', 'O', 'R', 'M'}});
  Rng rng(5);
  bool noop = true;
  const auto out = mingle(zeros(16), history, 1, rng, &noop);
  EXPECT_FALSE(noop);
  EXPECT_EQ(out[0], 'F');
  EXPECT_EQ(out[1], 'O');
  EXPECT_EQ(out[2], 'R');
  EXPECT_EQ(out[3], 'M');
}

TEST(Mingle, CountClampsToArchiveAndSkipsOutOfBounds) {
  MutationHistory history;
  history.archive.push_back({0, {9}});
  history.archive.push_back({2, {8}});
  history.archive.push_back({100, {7}});  // outside the 8-byte seed
  Rng rng(6);
  bool noop = true;
  const auto out = mingle(zeros(8), history, 6, rng, &noop);
  EXPECT_FALSE(noop);
  EXPECT_EQ(out[0], 9);
  EXPECT_EQ(out[2], 8);

  MutationHistory empty;
  mingle(zeros(8), empty, 1, rng, &noop);
  EXPECT_TRUE(noop);
}

TEST(GaPositions, FindsTheOnlyInfluentialByte) {
  // Only byte 0 feeds any branch; the exhaustive single-offset oracle is {0}.
  const auto prog = parse_program(
      "input 32\n"
      "let a = x[0]\n"
      "if a < 100 {\n"
      "}\n"
      "if a == 200 {\n"
      "}\n");
  Rng rng(7);
  uint64_t execs = 0;
  const auto offsets =
      ga_positions(prog, zeros(32), 1, 6, 16, rng, &execs);
  EXPECT_EQ(offsets, (std::vector<uint32_t>{0}));
  EXPECT_GT(execs, 0u);
}

TEST(GaPositions, ZeroGenerationsStillReturnsKOffsets) {
  const auto prog = builtin_program("fig_branches");
  Rng rng(8);
  const auto offsets = ga_positions(prog, zeros(1024), 4, 0, 8, rng);
  EXPECT_EQ(offsets.size(), 4u);
  std::set<uint32_t> uniq(offsets.begin(), offsets.end());
  EXPECT_EQ(uniq.size(), 4u);
}

TEST(GaInvert, SolvesSingleByteEquality) {
  // if (x[3] == 5) with seed x[3]=200: distance |x-5| reaches zero.
  const auto prog = parse_program(
      "input 8\n"
      "let a = x[3]\n"
      "if a == 5 {\n"
      "}\n");
  const auto seed = seed_with(8, {{3, 200}});
  const auto run = execute(prog, seed, ExecMode::Record);
  DependencyVector deps(8);
  deps.set(3);
  Rng rng(9);
  const auto out =
      ga_invert_branch(prog, seed, run.trace, 0, !run.trace[0].taken, deps,
                       32, 32, rng);
  ASSERT_TRUE(out.success);
  EXPECT_EQ(out.bytes[3], 5);
  EXPECT_EQ(out.best_distance, 0u);
  for (size_t i = 0; i < 8; ++i) {
    if (i != 3) EXPECT_EQ(out.bytes[i], seed[i]);
  }
}

TEST(GaInvert, AlreadyAtTargetEdgeSucceedsImmediately) {
  // Forced execution pinned the branch against its actual condition value,
  // so the desired direction already holds for the unmutated seed.
  const auto prog = parse_program(
      "input 4\n"
      "if x[0] == 5 {\n"
      "}\n");
  const auto base = seed_with(4, {{0, 5}});
  const auto rec = execute(prog, base, ExecMode::Record);  // taken = true
  const auto other = seed_with(4, {{0, 9}});
  const auto forced = execute(prog, other, ExecMode::Forced, &rec.trace);
  ASSERT_TRUE(forced.trace[0].taken);  // forced, though 9 != 5

  DependencyVector deps(4);
  deps.set(0);
  Rng rng(10);
  // Inverting relative to the forced direction asks for the false edge,
  // which the seed's actual value 9 already satisfies.
  const auto out = ga_invert_branch(prog, other, rec.trace, 0,
                                    /*want_taken=*/false, deps, 8, 8, rng);
  EXPECT_TRUE(out.success);
  EXPECT_EQ(out.executions, 1u);  // just the seed evaluation
  EXPECT_EQ(out.bytes, other);
}

TEST(GaInvert, MonotoneConditionsSolveWithinBudget) {
  // x < c and x > c over one byte: at most 256 fitness evaluations.
  for (const char* cond : {"if a < 20 {", "if a > 235 {"}) {
    const std::string src =
        "input 4\nlet a = x[0]\n" + std::string(cond) + "\n}\n";
    const auto prog = parse_program(src);
    const auto seed = seed_with(4, {{0, 128}});
    const auto run = execute(prog, seed, ExecMode::Record);
    DependencyVector deps(4);
    deps.set(0);
    Rng rng(11);
    const auto out = ga_invert_branch(prog, seed, run.trace, 0,
                                      !run.trace[0].taken, deps, 7, 32, rng);
    EXPECT_TRUE(out.success) << cond;
    EXPECT_LE(out.executions, 256u) << cond;
  }
}

TEST(GaInvert, BestDistanceIsNonIncreasing) {
  const auto prog = parse_program(
      "input 4\n"
      "let a = x[0:4]\n"
      "if a == 123456789 {\n"
      "}\n");
  const auto seed = zeros(4);
  const auto run = execute(prog, seed, ExecMode::Record);
  DependencyVector deps(4, true);
  Rng rng(12);
  const auto out =
      ga_invert_branch(prog, seed, run.trace, 0, true, deps, 12, 16, rng);
  for (size_t g = 1; g < out.distance_trace.size(); ++g) {
    EXPECT_LE(out.distance_trace[g], out.distance_trace[g - 1]);
  }
}

TEST(InversionDistance, ZeroExactlyAtInversion) {
  for (CmpOp op : {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt,
                   CmpOp::Ge}) {
    for (bool want : {false, true}) {
      for (uint64_t lhs = 0; lhs < 40; ++lhs) {
        const uint64_t d = inversion_distance(op, want, lhs, 20);
        EXPECT_EQ(d == 0, eval_cmp(op, lhs, 20) == want)
            << to_string(op) << " want=" << want << " lhs=" << lhs;
      }
    }
  }
}

}  // namespace
}  // namespace gbf
