#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gbfuzz/coverage.hpp"
#include "gbfuzz/rng.hpp"

namespace gbf {

enum class SeedClass { FastEdges, FastMultipleEdges, All };
enum class SeedCriterion { Count, Speed, Length, Crash, Cov, Random };

const char* to_string(SeedClass c);
const char* to_string(SeedCriterion c);

struct SeedEntry {
  uint64_t id = 0;
  std::vector<uint8_t> bytes;
  CoverageSet coverage;       // coverage this seed produced when admitted
  uint64_t duration = 1;      // abstract execution cost
  uint64_t sample_count = 0;
  bool crashed = false;
  size_t last_cov_increase = 0;

  size_t length() const { return bytes.size(); }
};

class SeedPool {
 public:
  SeedEntry& add(std::vector<uint8_t> bytes, CoverageSet coverage,
                 uint64_t duration, bool crashed, size_t cov_increase);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  SeedEntry& at(size_t i) { return entries_[i]; }
  const SeedEntry& at(size_t i) const { return entries_[i]; }
  const std::vector<SeedEntry>& entries() const { return entries_; }
  std::vector<SeedEntry>& entries() { return entries_; }

  // Candidate subset per seed class, as pool indices.
  //   FastEdges: the cheapest seed per covered edge index.
  //   FastMultipleEdges: additionally the cheapest per (edge, bucket > 0).
  //   All: every seed.
  // Throws std::invalid_argument on an empty pool.
  std::vector<size_t> classify(SeedClass c) const;

  // Samples one candidate per the criterion and bumps its sample_count.
  // Crash/Cov fall back to Random when their subset is empty.
  size_t sample(std::span<const size_t> candidates, SeedCriterion crit,
                Rng& rng);

  // Raw seed files plus a JSON metadata index.
  void save(const std::filesystem::path& dir) const;
  static SeedPool load(const std::filesystem::path& dir);

 private:
  std::vector<SeedEntry> entries_;
  uint64_t next_id_ = 0;
};

}  // namespace gbf
