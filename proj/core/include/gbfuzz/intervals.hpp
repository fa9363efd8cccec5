#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbfuzz/rng.hpp"
#include "gbfuzz/taint.hpp"
#include "gbfuzz/target_vm.hpp"

namespace gbf {

// Largest value representable in `width` bytes.
uint64_t width_max(int width);

struct Interval {
  uint64_t lo = 0;
  uint64_t hi = 0;  // inclusive
  auto operator<=>(const Interval&) const = default;
};

// Sorted, pairwise-disjoint, adjacency-merged intervals over one byte group.
class IntervalSet {
 public:
  IntervalSet() = default;
  IntervalSet(int width, std::vector<Interval> intervals);

  static IntervalSet full(int width);
  static IntervalSet none(int width);

  int width() const { return width_; }
  bool empty() const { return intervals_.empty(); }
  const std::vector<Interval>& intervals() const { return intervals_; }
  bool contains(uint64_t v) const;

  // Number of values in the union; saturates at UINT64_MAX for the full
  // 8-byte domain.
  uint64_t cardinality() const;

  // Uniform draw over the union via precomputed cumulative sizes.
  uint64_t sample(Rng& rng) const;

  bool operator==(const IntervalSet& o) const {
    return width_ == o.width_ && intervals_ == o.intervals_;
  }

 private:
  int width_ = 1;
  std::vector<Interval> intervals_;
  std::vector<unsigned __int128> cumulative_;
};

// Exact solution set of (x op constant) over the width-byte domain, or of its
// negation when invert is set. Constants beyond the domain are handled
// exactly (e.g. x < 300 over one byte is the full range).
IntervalSet condition_to_intervals(CmpOp op, uint64_t constant, int width,
                                   bool invert);

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);

struct ByteGroup {
  uint32_t offset = 0;
  uint8_t width = 1;
  auto operator<=>(const ByteGroup&) const = default;
  bool overlaps(const ByteGroup& o) const {
    return offset < o.offset + o.width && o.offset < offset + width;
  }
};

// Branches whose compared operand is a verbatim little-endian copy of
// contiguous input bytes, keyed by trace occurrence.
struct DirectCopyMap {
  std::map<BranchKey, ByteGroup> groups;
};

// Runtime direct-copy detection: a branch operand qualifies when its taint
// dependency is exactly `width` contiguous bytes and the observed operand
// value equals the little-endian load of those bytes for the seed and for
// one probe input with those bytes changed. Costs two executions.
DirectCopyMap detect_direct_copies(const TargetProgram& program,
                                   std::span<const uint8_t> seed,
                                   const TaintReport& taint,
                                   uint64_t* executions = nullptr);

enum class SolverMode { StAll, StOne };

struct GroupConstraint {
  ByteGroup group;
  IntervalSet set;
};

struct ConstraintSystem {
  std::vector<GroupConstraint> groups;  // sorted by group offset
  std::vector<BranchKey> unsolved;      // branches not expressible as intervals
  bool satisfiable = true;
  std::optional<BranchKey> conflict;  // first branch that emptied a group

  const IntervalSet* find(const ByteGroup& g) const;
};

// Builds the interval system for inverting `target`: the target's own
// condition enters inverted, every preceding direct-copy branch sharing
// bytes with target_bytes enters in its observed direction. StAll adds the
// sharers in trace order at once; StOne adds them nearest-first one by one,
// stopping at the first conflict. max_preceding caps how many preceding
// sharers are admitted (for the gradual StOne schedule).
ConstraintSystem build_system(const std::vector<BranchRecord>& trace,
                              const BranchKey& target,
                              std::span<const uint32_t> target_bytes,
                              const DirectCopyMap& dcm, SolverMode mode,
                              size_t max_preceding = SIZE_MAX);

// Returns the seed with every constrained byte group overwritten by a value
// drawn uniformly from its interval set. Throws std::invalid_argument when
// the system is unsatisfiable.
std::vector<uint8_t> sample_solution(const ConstraintSystem& system,
                                     std::span<const uint8_t> seed, Rng& rng);

// Renders the system in the CLI format: one "x[off:w] in [a,b] u [c,d]" line
// per group plus the unsolved branch list.
std::string format_system(const ConstraintSystem& system);

}  // namespace gbf
