#include "gbfuzz/intervals.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace gbf {

uint64_t width_max(int width) {
  if (width < 1 || width > 8) {
    throw std::invalid_argument("width must be in [1,8]");
  }
  if (width == 8) return ~uint64_t{0};
  return (uint64_t{1} << (8 * width)) - 1;
}

IntervalSet::IntervalSet(int width, std::vector<Interval> intervals)
    : width_(width), intervals_(std::move(intervals)) {
  const uint64_t max = width_max(width_);
  for (auto& iv : intervals_) {
    if (iv.lo > iv.hi || iv.hi > max) {
      throw std::invalid_argument("interval outside the width domain");
    }
  }
  std::sort(intervals_.begin(), intervals_.end());
  std::vector<Interval> merged;
  for (const auto& iv : intervals_) {
    if (!merged.empty() &&
        (iv.lo <= merged.back().hi ||
         (merged.back().hi != ~uint64_t{0} && iv.lo == merged.back().hi + 1))) {
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    } else {
      merged.push_back(iv);
    }
  }
  intervals_ = std::move(merged);
  cumulative_.clear();
  unsigned __int128 total = 0;
  for (const auto& iv : intervals_) {
    total += static_cast<unsigned __int128>(iv.hi - iv.lo) + 1;
    cumulative_.push_back(total);
  }
}

IntervalSet IntervalSet::full(int width) {
  return IntervalSet(width, {{0, width_max(width)}});
}

IntervalSet IntervalSet::none(int width) { return IntervalSet(width, {}); }

bool IntervalSet::contains(uint64_t v) const {
  auto it = std::upper_bound(
      intervals_.begin(), intervals_.end(), v,
      [](uint64_t value, const Interval& iv) { return value < iv.lo; });
  if (it == intervals_.begin()) return false;
  --it;
  return v >= it->lo && v <= it->hi;
}

uint64_t IntervalSet::cardinality() const {
  if (cumulative_.empty()) return 0;
  const unsigned __int128 total = cumulative_.back();
  if (total > static_cast<unsigned __int128>(~uint64_t{0})) return ~uint64_t{0};
  return static_cast<uint64_t>(total);
}

uint64_t IntervalSet::sample(Rng& rng) const {
  if (intervals_.empty()) {
    throw std::invalid_argument("cannot sample from an empty interval set");
  }
  const unsigned __int128 total = cumulative_.back();
  unsigned __int128 u;
  if (total > static_cast<unsigned __int128>(~uint64_t{0})) {
    u = rng.next();  // full 64-bit domain
  } else {
    u = rng.below(static_cast<uint64_t>(total));
  }
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const size_t idx = static_cast<size_t>(it - cumulative_.begin());
  const unsigned __int128 prefix = idx == 0 ? 0 : cumulative_[idx - 1];
  return intervals_[idx].lo + static_cast<uint64_t>(u - prefix);
}

namespace {

// Solution set of (x op c) over the width domain, exact for out-of-domain
// constants.
IntervalSet satisfy_set(CmpOp op, uint64_t c, int width) {
  const uint64_t max = width_max(width);
  switch (op) {
    case CmpOp::Eq:
      if (c > max) return IntervalSet::none(width);
      return IntervalSet(width, {{c, c}});
    case CmpOp::Ne:
      if (c > max) return IntervalSet::full(width);
      if (c == 0) {
        if (max == 0) return IntervalSet::none(width);
        return IntervalSet(width, {{1, max}});
      }
      if (c == max) return IntervalSet(width, {{0, max - 1}});
      return IntervalSet(width, {{0, c - 1}, {c + 1, max}});
    case CmpOp::Lt:
      if (c == 0) return IntervalSet::none(width);
      if (c > max) return IntervalSet::full(width);
      return IntervalSet(width, {{0, c - 1}});
    case CmpOp::Le:
      if (c >= max) return IntervalSet::full(width);
      return IntervalSet(width, {{0, c}});
    case CmpOp::Gt:
      if (c >= max) return IntervalSet::none(width);
      return IntervalSet(width, {{c + 1, max}});
    case CmpOp::Ge:
      if (c == 0) return IntervalSet::full(width);
      if (c > max) return IntervalSet::none(width);
      return IntervalSet(width, {{c, max}});
  }
  return IntervalSet::none(width);
}

}  // namespace

IntervalSet condition_to_intervals(CmpOp op, uint64_t constant, int width,
                                   bool invert) {
  return satisfy_set(invert ? negate(op) : op, constant, width);
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
  if (a.width() != b.width()) {
    throw std::invalid_argument("intersect: width mismatch");
  }
  std::vector<Interval> out;
  const auto& av = a.intervals();
  const auto& bv = b.intervals();
  size_t i = 0, j = 0;
  while (i < av.size() && j < bv.size()) {
    const uint64_t lo = std::max(av[i].lo, bv[j].lo);
    const uint64_t hi = std::min(av[i].hi, bv[j].hi);
    if (lo <= hi) out.push_back({lo, hi});
    if (av[i].hi < bv[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return IntervalSet(a.width(), std::move(out));
}

DirectCopyMap detect_direct_copies(const TargetProgram& program,
                                   std::span<const uint8_t> seed,
                                   const TaintReport& taint,
                                   uint64_t* executions) {
  DirectCopyMap dcm;
  const ExecutionResult seed_run =
      execute(program, seed, ExecMode::Record, nullptr);
  const auto keys = trace_keys(seed_run.trace);
  uint64_t execs = 1;

  auto load_le = [](std::span<const uint8_t> bytes, uint32_t off, int w) {
    uint64_t v = 0;
    for (int i = w - 1; i >= 0; --i) v = (v << 8) | bytes[off + i];
    return v;
  };

  // Candidates: dependency is exactly `width` contiguous bytes and the
  // observed operand equals their little-endian load.
  struct Candidate {
    size_t trace_pos;
    ByteGroup group;
  };
  std::vector<Candidate> candidates;
  for (size_t k = 0; k < keys.size(); ++k) {
    auto it = taint.deps.find(keys[k]);
    if (it == taint.deps.end()) continue;
    const auto offsets = it->second.offsets();
    const int w = seed_run.trace[k].operand_width;
    if (offsets.empty() || offsets.size() != static_cast<size_t>(w)) continue;
    bool contiguous = true;
    for (size_t i = 1; i < offsets.size(); ++i) {
      if (offsets[i] != offsets[0] + i) contiguous = false;
    }
    if (!contiguous) continue;
    if (offsets[0] + w > seed.size()) continue;
    if (load_le(seed, offsets[0], w) != seed_run.trace[k].lhs_value) continue;
    candidates.push_back({k, {offsets[0], static_cast<uint8_t>(w)}});
  }

  if (!candidates.empty()) {
    // One probe run with all candidate groups changed at once; each branch is
    // confirmed only if its operand tracks its own group's new value.
    std::vector<uint8_t> probe(seed.begin(), seed.end());
    for (const auto& c : candidates) {
      for (int i = 0; i < c.group.width; ++i) {
        probe[c.group.offset + i] =
            static_cast<uint8_t>(seed[c.group.offset + i] ^ 0xA5);
      }
    }
    const ExecutionResult probe_run =
        execute(program, probe, ExecMode::Forced, &seed_run.trace);
    ++execs;
    for (const auto& c : candidates) {
      if (c.trace_pos >= probe_run.trace.size()) continue;
      if (probe_run.trace[c.trace_pos].lhs_value ==
          load_le(probe, c.group.offset, c.group.width)) {
        dcm.groups[keys[c.trace_pos]] = c.group;
      }
    }
  }
  if (executions) *executions = execs;
  return dcm;
}

const IntervalSet* ConstraintSystem::find(const ByteGroup& g) const {
  for (const auto& gc : groups) {
    if (gc.group == g) return &gc.set;
  }
  return nullptr;
}

namespace {

struct SystemBuilder {
  ConstraintSystem sys;

  // Returns false when the addition empties a group.
  bool add(const ByteGroup& group, const IntervalSet& ivs,
           const BranchKey& origin) {
    for (auto& gc : sys.groups) {
      if (gc.group == group) {
        gc.set = intersect(gc.set, ivs);
        if (gc.set.empty()) {
          sys.satisfiable = false;
          sys.conflict = origin;
          return false;
        }
        return true;
      }
      if (gc.group.overlaps(group)) {
        // Overlapping but non-identical groups are not modeled.
        sys.unsolved.push_back(origin);
        return true;
      }
    }
    if (ivs.empty()) {
      sys.satisfiable = false;
      sys.conflict = origin;
      return false;
    }
    sys.groups.push_back({group, ivs});
    return true;
  }
};

bool group_shares_bytes(const ByteGroup& g,
                        std::span<const uint32_t> target_bytes) {
  for (uint32_t b : target_bytes) {
    if (b >= g.offset && b < g.offset + g.width) return true;
  }
  return false;
}

}  // namespace

ConstraintSystem build_system(const std::vector<BranchRecord>& trace,
                              const BranchKey& target,
                              std::span<const uint32_t> target_bytes,
                              const DirectCopyMap& dcm, SolverMode mode,
                              size_t max_preceding) {
  const auto keys = trace_keys(trace);
  size_t target_pos = keys.size();
  for (size_t k = 0; k < keys.size(); ++k) {
    if (keys[k] == target) {
      target_pos = k;
      break;
    }
  }
  if (target_pos == keys.size()) {
    throw std::invalid_argument("build_system: target branch not in trace");
  }

  SystemBuilder builder;
  const BranchRecord& trec = trace[target_pos];

  // Target first, inverted relative to its observed direction.
  auto target_it = dcm.groups.find(target);
  if (target_it != dcm.groups.end()) {
    const ByteGroup g = target_it->second;
    const IntervalSet ivs = condition_to_intervals(
        trec.op, trec.rhs_value, g.width, /*invert=*/trec.taken);
    if (!builder.add(g, ivs, target)) return std::move(builder.sys);
  } else {
    builder.sys.unsolved.push_back(target);
  }

  // Preceding direct-copy branches that share bytes with the target.
  std::vector<size_t> sharers;
  for (size_t k = 0; k < target_pos; ++k) {
    auto it = dcm.groups.find(keys[k]);
    if (it == dcm.groups.end()) continue;
    if (!group_shares_bytes(it->second, target_bytes)) continue;
    sharers.push_back(k);
  }
  if (mode == SolverMode::StOne) {
    // Nearest preceding branch first.
    std::reverse(sharers.begin(), sharers.end());
  }
  size_t added = 0;
  for (size_t k : sharers) {
    if (added >= max_preceding) break;
    const BranchRecord& rec = trace[k];
    const ByteGroup g = dcm.groups.at(keys[k]);
    const IntervalSet ivs = condition_to_intervals(
        rec.op, rec.rhs_value, g.width, /*invert=*/!rec.taken);
    ++added;
    if (!builder.add(g, ivs, keys[k])) break;
  }

  auto& groups = builder.sys.groups;
  std::sort(groups.begin(), groups.end(),
            [](const GroupConstraint& a, const GroupConstraint& b) {
              return a.group < b.group;
            });
  return std::move(builder.sys);
}

std::vector<uint8_t> sample_solution(const ConstraintSystem& system,
                                     std::span<const uint8_t> seed, Rng& rng) {
  if (!system.satisfiable) {
    throw std::invalid_argument("sample_solution: system is unsatisfiable");
  }
  std::vector<uint8_t> out(seed.begin(), seed.end());
  for (const auto& gc : system.groups) {
    uint64_t v = gc.set.sample(rng);
    for (int i = 0; i < gc.group.width; ++i) {
      if (gc.group.offset + i < out.size()) {
        out[gc.group.offset + i] = static_cast<uint8_t>(v & 0xff);
      }
      v >>= 8;
    }
  }
  return out;
}

std::string format_system(const ConstraintSystem& system) {
  std::ostringstream out;
  if (!system.satisfiable) {
    out << "unsat";
    if (system.conflict) {
      out << " (conflict at branch " << system.conflict->branch_id << ":"
          << system.conflict->occurrence << ")";
    }
    out << "\n";
    return out.str();
  }
  for (const auto& gc : system.groups) {
    out << "x[" << gc.group.offset << ":" << int{gc.group.width} << "] in ";
    bool first = true;
    for (const auto& iv : gc.set.intervals()) {
      if (!first) out << " u ";
      out << "[" << iv.lo << "," << iv.hi << "]";
      first = false;
    }
    out << "\n";
  }
  for (const auto& key : system.unsolved) {
    out << "unsolved branch " << key.branch_id << ":" << key.occurrence << "\n";
  }
  return out.str();
}

}  // namespace gbf
