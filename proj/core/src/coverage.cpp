#include "gbfuzz/coverage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <cstring>
#include <stdexcept>

#include "json.hpp"

namespace gbf {

ShowMap::ShowMap(int map_bits_) : map_bits(map_bits_) {
  if (map_bits < 1 || map_bits > 24) {
    throw std::invalid_argument("map_bits must be in [1,24]");
  }
  counters.assign(size_t{1} << map_bits, 0);
}

void ShowMap::clear() {
  for (uint32_t idx : touched) counters[idx] = 0;
  touched.clear();
}

void record_edges(ShowMap& map, std::span<const Edge> edges,
                  const std::vector<uint32_t>& labels) {
  const uint32_t mask = map.index_mask();
  for (const Edge& e : edges) {
    const uint32_t idx = ((labels[e.first] << 1) ^ labels[e.second]) & mask;
    uint8_t& c = map.counters[idx];
    if (c == 0) map.touched.push_back(idx);
    if (c != 255) ++c;
  }
}

bool CoverageSet::contains(uint32_t index, uint8_t bucket) const {
  CoverageEntry probe{index, bucket};
  return std::binary_search(entries.begin(), entries.end(), probe);
}

CoverageSet bucketize(const ShowMap& map) {
  CoverageSet out;
  out.label_index = map.active_label_index;
  out.entries.reserve(map.touched.size());
  for (uint32_t idx : map.touched) {
    const uint8_t c = map.counters[idx];
    if (c == 0) continue;
    out.entries.push_back(
        {idx, static_cast<uint8_t>(std::bit_width(static_cast<unsigned>(c)) - 1)});
  }
  std::sort(out.entries.begin(), out.entries.end());
  out.entries.erase(std::unique(out.entries.begin(), out.entries.end()),
                    out.entries.end());
  return out;
}

size_t coverage_increase(const CoverageSet& current,
                         const CoverageSet& accumulated) {
  if (current.label_index != accumulated.label_index) {
    throw std::invalid_argument(
        "coverage_increase: label index mismatch (" +
        std::to_string(current.label_index) + " vs " +
        std::to_string(accumulated.label_index) + ")");
  }
  size_t count = 0;
  auto it = accumulated.entries.begin();
  for (const auto& e : current.entries) {
    while (it != accumulated.entries.end() && *it < e) ++it;
    if (it == accumulated.entries.end() || !(*it == e)) ++count;
  }
  return count;
}

CoverageSet coverage_union(const CoverageSet& a, const CoverageSet& b) {
  if (a.label_index != b.label_index) {
    throw std::invalid_argument("coverage_union: label index mismatch");
  }
  CoverageSet out;
  out.label_index = a.label_index;
  std::set_union(a.entries.begin(), a.entries.end(), b.entries.begin(),
                 b.entries.end(), std::back_inserter(out.entries));
  return out;
}

CoverageSet coverage_difference(const CoverageSet& a, const CoverageSet& b) {
  if (a.label_index != b.label_index) {
    throw std::invalid_argument("coverage_difference: label index mismatch");
  }
  CoverageSet out;
  out.label_index = a.label_index;
  std::set_difference(a.entries.begin(), a.entries.end(), b.entries.begin(),
                      b.entries.end(), std::back_inserter(out.entries));
  return out;
}

CoverageAccumulator::CoverageAccumulator(int map_bits, int label_index)
    : map_bits_(map_bits), label_index_(label_index) {
  bucket_mask_.assign(size_t{1} << map_bits_, 0);
}

void CoverageAccumulator::reset(int label_index) {
  label_index_ = label_index;
  std::fill(bucket_mask_.begin(), bucket_mask_.end(), 0);
  total_ = 0;
}

size_t CoverageAccumulator::add(const CoverageSet& s) {
  if (s.label_index != label_index_) {
    throw std::invalid_argument("CoverageAccumulator::add: label index mismatch");
  }
  size_t added = 0;
  for (const auto& e : s.entries) {
    const uint8_t bit = static_cast<uint8_t>(1u << e.bucket);
    if (!(bucket_mask_[e.index] & bit)) {
      bucket_mask_[e.index] |= bit;
      ++added;
    }
  }
  total_ += added;
  return added;
}

size_t CoverageAccumulator::increase_of(const CoverageSet& s) const {
  if (s.label_index != label_index_) {
    throw std::invalid_argument(
        "CoverageAccumulator::increase_of: label index mismatch");
  }
  size_t count = 0;
  for (const auto& e : s.entries) {
    if (!(bucket_mask_[e.index] & (1u << e.bucket))) ++count;
  }
  return count;
}

bool CoverageAccumulator::contains(uint32_t index, uint8_t bucket) const {
  return (bucket_mask_[index] & (1u << bucket)) != 0;
}

CoverageSet CoverageAccumulator::to_set() const {
  CoverageSet out;
  out.label_index = label_index_;
  out.entries.reserve(total_);
  for (uint32_t idx = 0; idx < bucket_mask_.size(); ++idx) {
    const uint8_t mask = bucket_mask_[idx];
    if (!mask) continue;
    for (uint8_t b = 0; b < 8; ++b) {
      if (mask & (1u << b)) out.entries.push_back({idx, b});
    }
  }
  return out;
}

CoverageSet switch_label_index(ShowMap& map, const TargetProgram& program,
                               std::span<const std::vector<uint8_t>> seeds) {
  if (program.label_count() < 1) {
    throw std::invalid_argument("program has no label tables assigned");
  }
  map.active_label_index =
      (map.active_label_index + 1) % program.label_count();

  CoverageAccumulator acc(map.map_bits, map.active_label_index);
  ExecutionResult res;
  for (const auto& seed : seeds) {
    execute_into(program, seed, ExecMode::Normal, nullptr, res);
    map.clear();
    record_edges(map, res.edges, program.labels[map.active_label_index]);
    acc.add(bucketize(map));
  }
  map.clear();
  return acc.to_set();
}

double collision_free_probability(int n_bits, int m, uint64_t edges) {
  if (n_bits < 1 || m < 1 || edges < 1) {
    throw std::invalid_argument(
        "collision_free_probability: n_bits, m, edges must be >= 1");
  }
  const double space = std::ldexp(1.0, n_bits);
  double p = 1.0;
  for (uint64_t k = 1; k < edges; ++k) {
    const double f = 1.0 - std::pow(static_cast<double>(k) / space, m);
    if (f <= 0.0) return 0.0;
    p *= f;
  }
  return p;
}

double simulate_collisions(int n_bits, int m, uint64_t edges, int trials,
                           Rng& rng) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (n_bits < 1 || n_bits > 24 || m < 1 || m > 16) {
    throw std::invalid_argument("simulate_collisions: bad parameters");
  }
  const uint64_t space = uint64_t{1} << n_bits;
  if (edges > space) return 0.0;  // pigeonhole: some label table overflows

  // Epoch-stamped occupancy tables avoid clearing 2^n cells per trial.
  std::vector<std::vector<uint32_t>> stamp(
      m, std::vector<uint32_t>(space, ~uint32_t{0}));
  int ok = 0;
  for (int t = 0; t < trials; ++t) {
    const uint32_t epoch = static_cast<uint32_t>(t);
    bool good = true;
    for (uint64_t e = 0; e < edges && good; ++e) {
      bool all_hit = e > 0;
      uint64_t hashes[16];
      for (int j = 0; j < m; ++j) {
        hashes[j] = rng.below(space);
        if (stamp[j][hashes[j]] != epoch) all_hit = false;
      }
      if (all_hit) {
        good = false;
        break;
      }
      // Keep every table at exactly e+1 occupied cells.
      for (int j = 0; j < m; ++j) {
        uint64_t h = hashes[j];
        while (stamp[j][h] == epoch) h = rng.below(space);
        stamp[j][h] = epoch;
      }
    }
    ok += good;
  }
  return static_cast<double>(ok) / trials;
}

std::string coverage_to_json(const CoverageSet& s) {
  nlohmann::json j;
  j["label_index"] = s.label_index;
  auto& pairs = j["entries"] = nlohmann::json::array();
  for (const auto& e : s.entries) {
    pairs.push_back({e.index, e.bucket});
  }
  return j.dump();
}

CoverageSet coverage_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  CoverageSet s;
  s.label_index = j.at("label_index").get<int>();
  for (const auto& p : j.at("entries")) {
    s.entries.push_back({p.at(0).get<uint32_t>(), p.at(1).get<uint8_t>()});
  }
  std::sort(s.entries.begin(), s.entries.end());
  return s;
}

namespace {
constexpr char kCoverageMagic[4] = {'g', 'b', 'c', '1'};
}

void save_coverage(const CoverageSet& s, std::ostream& out) {
  out.write(kCoverageMagic, 4);
  const uint32_t label = static_cast<uint32_t>(s.label_index);
  const uint64_t n = s.entries.size();
  out.write(reinterpret_cast<const char*>(&label), sizeof(label));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const auto& e : s.entries) {
    out.write(reinterpret_cast<const char*>(&e.index), sizeof(e.index));
    out.write(reinterpret_cast<const char*>(&e.bucket), sizeof(e.bucket));
  }
}

CoverageSet load_coverage(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCoverageMagic, 4) != 0) {
    throw std::runtime_error("bad coverage snapshot header");
  }
  uint32_t label = 0;
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&label), sizeof(label));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  CoverageSet s;
  s.label_index = static_cast<int>(label);
  s.entries.resize(n);
  for (auto& e : s.entries) {
    in.read(reinterpret_cast<char*>(&e.index), sizeof(e.index));
    in.read(reinterpret_cast<char*>(&e.bucket), sizeof(e.bucket));
  }
  if (!in) throw std::runtime_error("truncated coverage snapshot");
  std::sort(s.entries.begin(), s.entries.end());
  return s;
}

}  // namespace gbf
