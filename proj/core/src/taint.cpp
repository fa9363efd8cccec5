#include "gbfuzz/taint.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace gbf {

namespace {

size_t popcount_words(const std::vector<uint64_t>& words) {
  size_t c = 0;
  for (uint64_t w : words) c += static_cast<size_t>(std::popcount(w));
  return c;
}

}  // namespace

size_t TestVector::count() const { return popcount_words(words_); }

DependencyVector::DependencyVector(size_t n, bool all_set)
    : n_(n), words_((n + 63) / 64, 0) {
  if (all_set) {
    for (auto& w : words_) w = ~uint64_t{0};
    if (n_ & 63) words_.back() &= (uint64_t{1} << (n_ & 63)) - 1;
    if (words_.empty()) words_.push_back(0);
  }
}

size_t DependencyVector::count() const { return popcount_words(words_); }

std::vector<uint32_t> DependencyVector::offsets() const {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < n_; ++i) {
    if (test(i)) out.push_back(static_cast<uint32_t>(i));
  }
  return out;
}

void DependencyVector::remove(const TestVector& v) {
  const auto& vw = v.words();
  for (size_t i = 0; i < words_.size() && i < vw.size(); ++i) {
    words_[i] &= ~vw[i];
  }
}

void DependencyVector::intersect(const DependencyVector& o) {
  for (size_t i = 0; i < words_.size() && i < o.words_.size(); ++i) {
    words_[i] &= o.words_[i];
  }
}

std::vector<TestVector> build_test_vectors(
    size_t n, const std::vector<uint32_t>* permutation) {
  if (n < 2) throw std::invalid_argument("build_test_vectors: n must be >= 2");
  if (permutation && permutation->size() != n) {
    throw std::invalid_argument("build_test_vectors: permutation size mismatch");
  }
  const int levels = static_cast<int>(std::bit_width(n - 1));  // ceil(log2 n)
  std::vector<TestVector> vectors(2 * levels, TestVector(n));
  for (size_t p = 0; p < n; ++p) {
    const size_t q = permutation ? (*permutation)[p] : p;
    for (int j = 0; j < levels; ++j) {
      if (((q >> j) & 1) == 0) {
        vectors[2 * j].set(p);
      } else {
        vectors[2 * j + 1].set(p);
      }
    }
  }
  return vectors;
}

std::vector<BranchKey> trace_keys(const std::vector<BranchRecord>& trace) {
  std::vector<BranchKey> keys;
  keys.reserve(trace.size());
  std::map<uint32_t, uint32_t> counters;
  for (const auto& r : trace) {
    keys.push_back({r.branch_id, counters[r.branch_id]++});
  }
  return keys;
}

namespace {

void apply_vector(const TestVector& v, std::span<const uint8_t> seed,
                  const MutatePolicy& mutator, std::vector<uint8_t>& out) {
  out.assign(seed.begin(), seed.end());
  for (size_t w = 0; w < v.words().size(); ++w) {
    uint64_t bits = v.words()[w];
    while (bits) {
      const int b = std::countr_zero(bits);
      bits &= bits - 1;
      const size_t p = w * 64 + static_cast<size_t>(b);
      if (p < out.size()) out[p] = mutator(p, seed[p]);
    }
  }
}

}  // namespace

std::vector<TestVector> build_partition_vectors(size_t n, Rng& rng) {
  if (n < 2) {
    throw std::invalid_argument("build_partition_vectors: n must be >= 2");
  }
  const size_t budget = 2 * static_cast<size_t>(std::bit_width(n - 1));
  const size_t gran = n >= 16 ? 4 : 1;
  const size_t units = (n + gran - 1) / gran;

  std::vector<TestVector> vectors;
  vectors.reserve(budget);
  std::vector<uint32_t> order;
  size_t remaining = budget;
  while (remaining > 0) {
    const size_t ways = (units >= 4 && remaining >= 4) ? 4 : 2;
    order = rng.permutation(units);
    std::vector<TestVector> classes(ways, TestVector(n));
    for (size_t rank = 0; rank < units; ++rank) {
      const size_t cls = rank % ways;
      const size_t unit = order[rank];
      const size_t lo = unit * gran;
      const size_t hi = std::min(n, lo + gran);
      for (size_t p = lo; p < hi; ++p) classes[cls].set(p);
    }
    for (auto& c : classes) vectors.push_back(std::move(c));
    remaining -= ways;
  }
  return vectors;
}

namespace {

ResponseReport collect_against(const TargetProgram& program,
                               std::span<const uint8_t> seed,
                               const ExecutionResult& seed_run,
                               std::span<const TestVector> vectors,
                               const MutatePolicy& mutator) {
  ResponseReport report;
  const auto keys = trace_keys(seed_run.trace);
  for (const auto& k : keys) {
    report.responses[k].bits.assign(vectors.size(), Response::Undefined);
  }

  std::vector<uint8_t> input;
  ExecutionResult res;
  for (size_t i = 0; i < vectors.size(); ++i) {
    apply_vector(vectors[i], seed, mutator, input);
    execute_into(program, input, ExecMode::Forced, &seed_run.trace, res);
    ++report.executions;
    if (res.outcome == Outcome::Crash) report.crashed_tests.push_back(i);
    const size_t observed = std::min(res.trace.size(), seed_run.trace.size());
    for (size_t k = 0; k < observed; ++k) {
      const bool changed =
          res.trace[k].lhs_value != seed_run.trace[k].lhs_value ||
          res.trace[k].rhs_value != seed_run.trace[k].rhs_value;
      report.responses[keys[k]].bits[i] =
          changed ? Response::Changed : Response::Unchanged;
    }
  }
  return report;
}

}  // namespace

ResponseReport collect_responses(const TargetProgram& program,
                                 std::span<const uint8_t> seed,
                                 std::span<const TestVector> vectors,
                                 const MutatePolicy& mutator) {
  const ExecutionResult seed_run =
      execute(program, seed, ExecMode::Record, nullptr);
  return collect_against(program, seed, seed_run, vectors, mutator);
}

DependencyVector decode(const ResponseVector& y,
                        std::span<const TestVector> vectors) {
  if (y.bits.size() != vectors.size()) {
    throw std::invalid_argument("decode: response/vector length mismatch");
  }
  const size_t n = vectors.empty() ? 0 : vectors[0].size();
  DependencyVector d(n, true);
  for (size_t j = 0; j < vectors.size(); ++j) {
    if (y.bits[j] == Response::Unchanged) d.remove(vectors[j]);
  }
  return d;
}

void mask_vector(TestVector& v, std::span<const ByteRange> ranges) {
  for (const auto& r : ranges) {
    for (uint32_t p = r.lo; p <= r.hi && p < v.size(); ++p) v.reset(p);
  }
}

namespace {

std::vector<ByteRange> merge_ranges(std::vector<ByteRange> ranges) {
  std::sort(ranges.begin(), ranges.end());
  std::vector<ByteRange> out;
  for (const auto& r : ranges) {
    if (!out.empty() && r.lo <= out.back().hi + 1) {
      out.back().hi = std::max(out.back().hi, r.hi);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

struct CrashProber {
  const TargetProgram& program;
  std::span<const uint8_t> seed;
  const std::vector<BranchRecord>& seed_trace;
  const std::vector<uint8_t>& delta;
  uint64_t probes = 0;

  bool crashes(std::span<const uint32_t> positions) {
    std::vector<uint8_t> input(seed.begin(), seed.end());
    for (uint32_t p : positions) input[p] = seed[p] ^ delta[p];
    ExecutionResult res;
    execute_into(program, input, ExecMode::Forced, &seed_trace, res);
    ++probes;
    return res.outcome == Outcome::Crash;
  }

  // Narrows a crashing position set down by bisection. Sets whose halves are
  // individually benign are reported as one spanning range (interacting
  // bytes).
  void bisect(std::span<const uint32_t> positions,
              std::vector<ByteRange>& out) {
    if (positions.size() == 1) {
      out.push_back({positions[0], positions[0]});
      return;
    }
    const size_t half = positions.size() / 2;
    auto left = positions.subspan(0, half);
    auto right = positions.subspan(half);
    const bool cl = crashes(left);
    const bool cr = crashes(right);
    if (cl) bisect(left, out);
    if (cr) bisect(right, out);
    if (!cl && !cr) {
      out.push_back({positions.front(), positions.back()});
    }
  }
};

std::vector<uint32_t> vector_positions(const TestVector& v) {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (v.test(i)) out.push_back(static_cast<uint32_t>(i));
  }
  return out;
}

std::vector<uint8_t> draw_delta(size_t n, Rng& rng) {
  std::vector<uint8_t> delta(n);
  for (auto& d : delta) d = rng.nonzero_byte();
  return delta;
}

}  // namespace

std::map<uint32_t, DependencyVector> TaintReport::by_branch() const {
  std::map<uint32_t, DependencyVector> out;
  for (const auto& [key, dep] : deps) {
    auto [it, fresh] = out.try_emplace(key.branch_id, dep.size(), false);
    auto& acc = it->second;
    for (uint32_t off : dep.offsets()) acc.set(off);
  }
  return out;
}

TaintReport infer_taint(const TargetProgram& program,
                        std::span<const uint8_t> seed, int repeats, Rng& rng) {
  if (repeats < 1) throw std::invalid_argument("infer_taint: repeats must be >= 1");
  const size_t n = seed.size();
  TaintReport report;

  const ExecutionResult seed_run =
      execute(program, seed, ExecMode::Record, nullptr);

  for (int pass = 0; pass < repeats; ++pass) {
    // First pass: the canonical alternating-runs family. Later passes:
    // fresh random word-granularity partitions; intersecting their decoded
    // candidates strips the aliases the canonical layout cannot separate.
    auto vectors = pass == 0 ? build_test_vectors(n)
                             : build_partition_vectors(n, rng);
    for (auto& v : vectors) mask_vector(v, report.crash_ranges);

    const auto delta = draw_delta(n, rng);
    MutatePolicy policy = [&](size_t p, uint8_t b) {
      return static_cast<uint8_t>(b ^ delta[p]);
    };

    ResponseReport resp = collect_against(program, seed, seed_run, vectors, policy);
    report.mutated_executions += resp.executions;

    if (!resp.crashed_tests.empty()) {
      // Locate and exclude crash-triggering ranges, then redo the pass with
      // masked vectors so the undefined bits become informative.
      CrashProber prober{program, seed, seed_run.trace, delta};
      std::vector<ByteRange> found = report.crash_ranges;
      for (size_t idx : resp.crashed_tests) {
        TestVector masked = vectors[idx];
        mask_vector(masked, found);
        const auto positions = vector_positions(masked);
        if (positions.empty() || !prober.crashes(positions)) continue;
        prober.bisect(positions, found);
        found = merge_ranges(std::move(found));
      }
      report.mutated_executions += prober.probes;
      report.crash_ranges = std::move(found);
      for (auto& v : vectors) mask_vector(v, report.crash_ranges);
      resp = collect_against(program, seed, seed_run, vectors, policy);
      report.mutated_executions += resp.executions;
    }

    for (const auto& [key, y] : resp.responses) {
      DependencyVector d = decode(y, vectors);
      // Crash-excluded bytes are out of consideration entirely: the masked
      // vectors can never eliminate them, so clear them explicitly.
      for (const auto& r : report.crash_ranges) {
        for (uint32_t pos = r.lo; pos <= r.hi && pos < n; ++pos) {
          TestVector one(n);
          one.set(pos);
          d.remove(one);
        }
      }
      auto it = report.deps.find(key);
      if (it == report.deps.end()) {
        report.deps.emplace(key, std::move(d));
      } else {
        it->second.intersect(d);
      }
    }
  }
  return report;
}

TaintReport fti_infer(const TargetProgram& program,
                      std::span<const uint8_t> seed, int values_per_byte) {
  if (values_per_byte < 1 || values_per_byte > 255) {
    throw std::invalid_argument("fti_infer: values_per_byte must be in [1,255]");
  }
  const size_t n = seed.size();
  TaintReport report;

  const ExecutionResult seed_run =
      execute(program, seed, ExecMode::Record, nullptr);
  const auto keys = trace_keys(seed_run.trace);
  for (const auto& k : keys) {
    report.deps.try_emplace(k, n, false);
  }

  std::vector<uint8_t> input(seed.begin(), seed.end());
  ExecutionResult res;
  for (size_t p = 0; p < n; ++p) {
    for (int v = 1; v <= values_per_byte; ++v) {
      input[p] = static_cast<uint8_t>(seed[p] ^ v);
      execute_into(program, input, ExecMode::Forced, &seed_run.trace, res);
      ++report.mutated_executions;
      const size_t observed = std::min(res.trace.size(), seed_run.trace.size());
      for (size_t k = 0; k < observed; ++k) {
        if (res.trace[k].lhs_value != seed_run.trace[k].lhs_value ||
            res.trace[k].rhs_value != seed_run.trace[k].rhs_value) {
          report.deps.at(keys[k]).set(p);
        }
      }
    }
    input[p] = seed[p];
  }
  return report;
}

std::vector<ByteRange> eliminate_crash_ranges(const TargetProgram& program,
                                              std::span<const uint8_t> seed,
                                              Rng& rng, uint64_t* probes) {
  const size_t n = seed.size();
  const ExecutionResult seed_run =
      execute(program, seed, ExecMode::Record, nullptr);
  const auto vectors = build_test_vectors(n);
  const auto delta = draw_delta(n, rng);

  CrashProber prober{program, seed, seed_run.trace, delta};
  std::vector<ByteRange> found;
  for (const auto& v : vectors) {
    // Ranges already located are masked out before probing later vectors, so
    // each culprit is bisected once.
    TestVector masked = v;
    mask_vector(masked, found);
    const auto positions = vector_positions(masked);
    if (!positions.empty() && prober.crashes(positions)) {
      prober.bisect(positions, found);
      found = merge_ranges(std::move(found));
    }
  }
  if (probes) *probes = prober.probes;
  return merge_ranges(std::move(found));
}

}  // namespace gbf
