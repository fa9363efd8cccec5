#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gbfuzz/rng.hpp"
#include "gbfuzz/target_vm.hpp"

namespace gbf {

// Hashed edge-counter array. An executed edge (B_j, B_k) increments the
// counter at ((L_j << 1) ^ L_k) mod 2^map_bits, where L are the blocks'
// labels under the active label table. Counters saturate at 255 instead of
// wrapping, so a 256-times-executed edge never looks unvisited.
struct ShowMap {
  explicit ShowMap(int map_bits = 16);

  int map_bits;
  int active_label_index = 0;
  std::vector<uint8_t> counters;
  std::vector<uint32_t> touched;  // indices with non-zero counters

  void clear();
  uint32_t index_mask() const {
    return static_cast<uint32_t>((uint64_t{1} << map_bits) - 1);
  }
};

struct CoverageEntry {
  uint32_t index;
  uint8_t bucket;
  auto operator<=>(const CoverageEntry&) const = default;
};

// The unit of "new coverage": (edge index, floor(log2 count)) pairs observed
// under one label table. Entries from different label tables never mix.
struct CoverageSet {
  int label_index = 0;
  std::vector<CoverageEntry> entries;  // sorted, unique

  size_t size() const { return entries.size(); }
  bool contains(uint32_t index, uint8_t bucket) const;
};

void record_edges(ShowMap& map, std::span<const Edge> edges,
                  const std::vector<uint32_t>& labels);

// One entry per non-zero counter; bucket = floor(log2 counter) in [0,7].
CoverageSet bucketize(const ShowMap& map);

// |current \ accumulated|. Throws std::invalid_argument on label mismatch.
size_t coverage_increase(const CoverageSet& current,
                         const CoverageSet& accumulated);

CoverageSet coverage_union(const CoverageSet& a, const CoverageSet& b);
CoverageSet coverage_difference(const CoverageSet& a, const CoverageSet& b);

// Accumulated-coverage membership with O(1) per-entry updates; the campaign
// hot path uses this instead of sorted-set arithmetic.
class CoverageAccumulator {
 public:
  explicit CoverageAccumulator(int map_bits = 16, int label_index = 0);

  void reset(int label_index);
  size_t add(const CoverageSet& s);                // returns newly added pairs
  size_t increase_of(const CoverageSet& s) const;  // coverage_increase, fast
  bool contains(uint32_t index, uint8_t bucket) const;
  CoverageSet to_set() const;
  size_t size() const { return total_; }
  int label_index() const { return label_index_; }

 private:
  int map_bits_;
  int label_index_;
  std::vector<uint8_t> bucket_mask_;
  size_t total_ = 0;
};

// Advances the map's active label index cyclically and rebuilds accumulated
// coverage by re-executing every seed under the new table.
CoverageSet switch_label_index(ShowMap& map, const TargetProgram& program,
                               std::span<const std::vector<uint8_t>> seeds);

// Probability that every one of `edges` hashed edges is unique under at
// least one of m independent n-bit labels:
//   prod_{k=1..edges-1} (1 - (k / 2^n)^m)
double collision_free_probability(int n_bits, int m, uint64_t edges);

// Monte-Carlo counterpart. Each trial inserts `edges` hashes sequentially and
// fails when an insertion collides with previously occupied cells under all m
// labels; every label table keeps exactly k occupied cells after k edges,
// which is the occupancy process the closed form models.
double simulate_collisions(int n_bits, int m, uint64_t edges, int trials,
                           Rng& rng);

// Snapshot serialization: JSON and a compact binary form (see README).
std::string coverage_to_json(const CoverageSet& s);
CoverageSet coverage_from_json(const std::string& text);
void save_coverage(const CoverageSet& s, std::ostream& out);
CoverageSet load_coverage(std::istream& in);

}  // namespace gbf
