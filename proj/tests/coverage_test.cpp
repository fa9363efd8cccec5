#include "gbfuzz/coverage.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gbfuzz/corpus.hpp"
#include "test_support.hpp"

namespace gbf {
namespace {

using testing::seed_with;
using testing::zeros;

TEST(ShowMap, ZeroLabelsHashToIndexZero) {
  ShowMap map(16);
  const std::vector<uint32_t> labels = {0, 0};
  const std::vector<Edge> edges = {{0, 1}};
  record_edges(map, edges, labels);
  EXPECT_EQ(map.counters[0], 1);
}

TEST(ShowMap, ShiftOverflowReducesModuloMapSize) {
  ShowMap map(16);
  const std::vector<uint32_t> labels = {0x8000, 0x0001};
  const std::vector<Edge> edges = {{0, 1}};
  record_edges(map, edges, labels);
  // (0x8000 << 1) mod 2^16 = 0, xor 1 -> index 1.
  EXPECT_EQ(map.counters[1], 1);
}

TEST(ShowMap, CountersSaturateAt255) {
  ShowMap map(16);
  const std::vector<uint32_t> labels = {5, 9};
  std::vector<Edge> edges(300, {0, 1});
  record_edges(map, edges, labels);
  const uint32_t idx = ((5u << 1) ^ 9u) & map.index_mask();
  EXPECT_EQ(map.counters[idx], 255);
}

TEST(ShowMap, CountersMonotoneWithinARun) {
  Rng rng(4);
  ShowMap map(10);
  std::vector<uint32_t> labels(8);
  for (auto& l : labels) l = static_cast<uint32_t>(rng.below(1 << 10));
  std::vector<uint8_t> prev(map.counters.size(), 0);
  for (int round = 0; round < 50; ++round) {
    std::vector<Edge> edges;
    for (int i = 0; i < 40; ++i) {
      edges.push_back({static_cast<uint32_t>(rng.below(8)),
                       static_cast<uint32_t>(rng.below(8))});
    }
    record_edges(map, edges, labels);
    for (size_t i = 0; i < map.counters.size(); ++i) {
      EXPECT_GE(map.counters[i], prev[i]);
      prev[i] = map.counters[i];
    }
  }
}

TEST(Bucketize, LogarithmicBuckets) {
  auto count_to_bucket = [](int count) {
    ShowMap map(16);
    const std::vector<uint32_t> labels = {3, 4};
    std::vector<Edge> edges(count, {0, 1});
    record_edges(map, edges, labels);
    const CoverageSet s = bucketize(map);
    EXPECT_EQ(s.entries.size(), 1u);
    return s.entries[0].bucket;
  };
  EXPECT_EQ(count_to_bucket(13), 3);  // floor(log2 13)
  EXPECT_EQ(count_to_bucket(14), 3);  // same bucket: no new coverage
  EXPECT_EQ(count_to_bucket(1), 0);
  EXPECT_EQ(count_to_bucket(255), 7);
}

TEST(CoverageIncrease, SetArithmetic) {
  CoverageSet current{0, {{5, 0}, {5, 3}, {9, 1}}};
  CoverageSet acc{0, {{5, 0}}};
  EXPECT_EQ(coverage_increase(current, acc), 2u);

  CoverageSet empty{0, {}};
  EXPECT_EQ(coverage_increase(current, empty), 3u);

  CoverageSet subset{0, {{5, 0}}};
  CoverageSet super{0, {{5, 0}, {5, 3}, {9, 1}}};
  EXPECT_EQ(coverage_increase(subset, super), 0u);
}

TEST(CoverageIncrease, LabelMismatchIsContractViolation) {
  CoverageSet a{0, {{1, 0}}};
  CoverageSet b{1, {{1, 0}}};
  EXPECT_THROW(coverage_increase(a, b), std::invalid_argument);
}

TEST(Accumulator, MatchesSetDifferenceSemantics) {
  Rng rng(9);
  CoverageAccumulator acc(10, 0);
  CoverageSet reference{0, {}};
  for (int round = 0; round < 100; ++round) {
    CoverageSet s;
    s.label_index = 0;
    for (int i = 0; i < 20; ++i) {
      s.entries.push_back({static_cast<uint32_t>(rng.below(1 << 10)),
                           static_cast<uint8_t>(rng.below(8))});
    }
    std::sort(s.entries.begin(), s.entries.end());
    s.entries.erase(std::unique(s.entries.begin(), s.entries.end()),
                    s.entries.end());
    EXPECT_EQ(acc.increase_of(s), coverage_increase(s, reference));
    acc.add(s);
    reference = coverage_union(reference, s);
    EXPECT_EQ(acc.size(), reference.size());
  }
  EXPECT_EQ(acc.to_set().entries, reference.entries);
}

TEST(SwitchLabels, SingleTableIsAFixpoint) {
  auto prog = builtin_program("fig_branches");
  Rng rng(5);
  prog.assign_labels(1, 16, rng);
  ShowMap map(16);
  const std::vector<std::vector<uint8_t>> seeds = {zeros(1024)};
  const auto res = execute(prog, seeds[0]);
  record_edges(map, res.edges, prog.labels[0]);
  const CoverageSet before = bucketize(map);
  map.clear();
  const CoverageSet rebuilt = switch_label_index(map, prog, seeds);
  EXPECT_EQ(map.active_label_index, 0);
  EXPECT_EQ(rebuilt.entries, before.entries);
}

TEST(SwitchLabels, IndexAdvancesCyclically) {
  auto prog = builtin_program("fig_branches");
  Rng rng(5);
  prog.assign_labels(4, 16, rng);
  ShowMap map(16);
  map.active_label_index = 3;
  const std::vector<std::vector<uint8_t>> seeds = {zeros(1024)};
  switch_label_index(map, prog, seeds);
  EXPECT_EQ(map.active_label_index, 0);
}

TEST(SwitchLabels, UnmasksCollidedEdge) {
  // Two behaviors whose edges collide under table 0 but not under table 1:
  // after switching, the second behavior contributes new coverage.
  auto prog = parse_program("input 1\nif x[0] == 1 {\n}\n", "tiny");
  Rng rng(6);
  prog.assign_labels(2, 16, rng);
  // Table 0: all blocks share one label, so every edge hashes identically.
  for (auto& l : prog.labels[0]) l = 7;
  // Table 1: distinct labels (keep the random ones).

  const std::vector<uint8_t> seed_a = {0};  // branch not taken: 2 edge events
  const std::vector<uint8_t> seed_b = {1};  // branch taken: 3 edge events

  ShowMap map(16);
  CoverageAccumulator acc(16, 0);
  const auto res_a = execute(prog, seed_a);
  record_edges(map, res_a.edges, prog.labels[0]);
  acc.add(bucketize(map));
  map.clear();

  const auto res_b = execute(prog, seed_b);
  record_edges(map, res_b.edges, prog.labels[0]);
  const CoverageSet cov_b0 = bucketize(map);
  map.clear();
  EXPECT_EQ(acc.increase_of(cov_b0), 0u);  // masked by the collision

  const std::vector<std::vector<uint8_t>> pool = {seed_a};
  const CoverageSet rebuilt = switch_label_index(map, prog, pool);
  CoverageAccumulator acc1(16, map.active_label_index);
  acc1.add(rebuilt);
  record_edges(map, res_b.edges, prog.labels[map.active_label_index]);
  const CoverageSet cov_b1 = bucketize(map);
  map.clear();
  EXPECT_GT(acc1.increase_of(cov_b1), 0u);  // collision resolved
}

TEST(CollisionFormula, PaperValues) {
  EXPECT_NEAR(collision_free_probability(16, 4, 8000), 0.701, 0.001);
  EXPECT_NEAR(collision_free_probability(16, 5, 10000), 0.871, 0.001);
  EXPECT_EQ(collision_free_probability(16, 3, 1), 1.0);  // empty product
}

TEST(CollisionFormula, Monotonicity) {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const int n_bits = 8 + static_cast<int>(rng.below(9));
    const int m = 1 + static_cast<int>(rng.below(5));
    const uint64_t edges = 2 + rng.below(4000);
    const double p = collision_free_probability(n_bits, m, edges);
    EXPECT_LE(collision_free_probability(n_bits, m, edges + 100), p + 1e-12);
    EXPECT_GE(collision_free_probability(n_bits, m + 1, edges), p - 1e-12);
    EXPECT_GE(collision_free_probability(n_bits + 1, m, edges), p - 1e-12);
  }
}

TEST(CollisionSimulation, SingleEdgeAlwaysUnique) {
  Rng rng(1);
  EXPECT_EQ(simulate_collisions(16, 3, 1, 5, rng), 1.0);
}

TEST(CollisionSimulation, BirthdayRegimeMatchesFormula) {
  // m=1, 2^9 edges in a 16-bit space: the classic birthday probability.
  Rng rng(77);
  const double analytic = collision_free_probability(16, 1, 512);
  EXPECT_NEAR(analytic, std::exp(-512.0 * 512.0 / (2.0 * 65536.0)), 0.02);
  const int trials = 800;
  const double empirical = simulate_collisions(16, 1, 512, trials, rng);
  const double sigma = std::sqrt(analytic * (1 - analytic) / trials);
  EXPECT_NEAR(empirical, analytic, 3 * sigma);
}

TEST(Serialization, JsonRoundTrip) {
  CoverageSet s{2, {{1, 0}, {700, 7}, {65535, 3}}};
  const CoverageSet back = coverage_from_json(coverage_to_json(s));
  EXPECT_EQ(back.label_index, s.label_index);
  EXPECT_EQ(back.entries, s.entries);
}

TEST(Serialization, BinaryRoundTrip) {
  CoverageSet s{1, {{0, 0}, {123, 5}}};
  std::stringstream buf;
  save_coverage(s, buf);
  const CoverageSet back = load_coverage(buf);
  EXPECT_EQ(back.label_index, s.label_index);
  EXPECT_EQ(back.entries, s.entries);
}

}  // namespace
}  // namespace gbf
