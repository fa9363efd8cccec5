#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "gbfuzz/rng.hpp"
#include "gbfuzz/target_vm.hpp"

namespace gbf {

// Non-adaptive group-test vector: bit j set iff input byte j is mutated in
// the corresponding test execution.
class TestVector {
 public:
  explicit TestVector(size_t n = 0) : n_(n), words_((n + 63) / 64, 0) {}

  size_t size() const { return n_; }
  bool test(size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1;
  }
  void set(size_t i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }
  void reset(size_t i) { words_[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
  size_t count() const;
  const std::vector<uint64_t>& words() const { return words_; }
  std::vector<uint64_t>& words() { return words_; }

 private:
  size_t n_;
  std::vector<uint64_t> words_;
};

// Canonical non-adaptive test vectors: 2*ceil(log2 n) vectors where the pair
// (V_{2j}, V_{2j+1}) alternates runs of 2^j set and unset positions with
// complementary starts (V_0 = 1010..., V_1 = 0101..., V_2 = 1100..., ...).
// When a permutation is given, bit p of each vector is the canonical bit at
// permutation[p]. For n below the next power of two the excess positions are
// simply never set.
std::vector<TestVector> build_test_vectors(
    size_t n, const std::vector<uint32_t>* permutation = nullptr);

// Group-test family used by the repeated passes: balanced random partitions
// at 4-byte-word granularity filling the same 2*ceil(log2 n) vector budget,
// four classes per partition plus one complementary pair when the budget is
// not a multiple of four. Word granularity keeps multi-byte operands inside
// one group; a uniform byte permutation would scatter them and leave every
// test changed, eliminating nothing.
std::vector<TestVector> build_partition_vectors(size_t n, Rng& rng);

enum class Response : uint8_t { Unchanged, Changed, Undefined };

struct ResponseVector {
  std::vector<Response> bits;  // one per test vector
};

// Identifies one conditional occurrence within a trace, so loop iterations
// of the same source line stay distinguishable.
struct BranchKey {
  uint32_t branch_id = 0;
  uint32_t occurrence = 0;
  auto operator<=>(const BranchKey&) const = default;
};

// (branch_id, occurrence) key for every record of a trace, in order.
std::vector<BranchKey> trace_keys(const std::vector<BranchRecord>& trace);

// Per-branch dependency bit-vector over input bytes.
class DependencyVector {
 public:
  explicit DependencyVector(size_t n = 0, bool all_set = false);

  size_t size() const { return n_; }
  bool test(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set(size_t i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }
  size_t count() const;
  std::vector<uint32_t> offsets() const;

  void remove(const TestVector& v);         // D &= ~V
  void intersect(const DependencyVector& o);  // D &= o

  bool operator==(const DependencyVector& o) const = default;

 private:
  size_t n_;
  std::vector<uint64_t> words_;
};

// Replaces the bytes selected by a test vector; returns the mutated value of
// one byte given its offset and seed value.
using MutatePolicy = std::function<uint8_t(size_t offset, uint8_t seed_byte)>;

struct ResponseReport {
  std::map<BranchKey, ResponseVector> responses;
  std::vector<size_t> crashed_tests;  // indices of vectors whose run crashed
  uint64_t executions = 0;            // mutated executions (seed run excluded)
};

// Runs one forced execution per test vector against the seed's recorded
// trace and reports, per branch occurrence, whether any operand value moved.
// Occurrences cut short by a crash or divergence become Undefined.
ResponseReport collect_responses(const TargetProgram& program,
                                 std::span<const uint8_t> seed,
                                 std::span<const TestVector> vectors,
                                 const MutatePolicy& mutator);

// Group-testing decode: D starts all-set; every Unchanged response removes
// its vector's positions; Undefined responses remove nothing.
DependencyVector decode(const ResponseVector& y,
                        std::span<const TestVector> vectors);

struct ByteRange {
  uint32_t lo = 0;
  uint32_t hi = 0;  // inclusive
  auto operator<=>(const ByteRange&) const = default;
};

// Clears every position inside the excluded ranges.
void mask_vector(TestVector& v, std::span<const ByteRange> ranges);

struct TaintReport {
  std::map<BranchKey, DependencyVector> deps;
  std::vector<ByteRange> crash_ranges;
  uint64_t mutated_executions = 0;

  // Union of per-occurrence dependencies, keyed by branch line.
  std::map<uint32_t, DependencyVector> by_branch() const;
};

// TaintFAST: `repeats` decode passes, the first over the identity layout and
// the rest over fresh random permutations, intersecting the candidates.
// Exactly repeats * 2*ceil(log2 n) mutated executions when no test crashes;
// crashing tests trigger crash-range elimination and cost extra probes.
TaintReport infer_taint(const TargetProgram& program,
                        std::span<const uint8_t> seed, int repeats, Rng& rng);

// Byte-by-byte inference oracle: mutates each byte through values_per_byte
// XOR deltas and records which branch operands move. n * values_per_byte
// executions.
TaintReport fti_infer(const TargetProgram& program,
                      std::span<const uint8_t> seed, int values_per_byte);

// Bisects the mutated set of every crashing group test down to the minimal
// contiguous byte ranges whose mutation crashes the forced run.
std::vector<ByteRange> eliminate_crash_ranges(const TargetProgram& program,
                                              std::span<const uint8_t> seed,
                                              Rng& rng,
                                              uint64_t* probes = nullptr);

}  // namespace gbf
