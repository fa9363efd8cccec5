#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gbf {

// Deterministic RNG used throughout the fuzzer. All bounded draws go through
// below()/unit() instead of std::uniform_*_distribution, whose output is
// implementation-defined and would break byte-identical replay across
// standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, n). n == 0 is a contract violation.
  uint64_t below(uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const uint64_t limit = n * ((~uint64_t{0}) / n);
    uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Uniform double in [0, 1).
  double unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  uint8_t byte() { return static_cast<uint8_t>(engine_() & 0xff); }

  uint8_t nonzero_byte() {
    return static_cast<uint8_t>(1 + below(255));
  }

  bool coin() { return (engine_() & 1) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Identity-seeded random permutation of [0, n).
  std::vector<uint32_t> permutation(size_t n) {
    std::vector<uint32_t> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = static_cast<uint32_t>(i);
    shuffle(p);
    return p;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gbf
