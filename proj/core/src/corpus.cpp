#include "gbfuzz/corpus.hpp"

#include <sstream>
#include <stdexcept>

namespace gbf {

namespace {

// Four branches over bytes of a 1024-byte input. Line numbers are load
// bearing: tests refer to the conditionals at lines 6, 8, 10 and 12.
constexpr const char* kFigBranches =
    "input 1024\n"
    "let A = x[100] + 10\n"
    "let B = x[200:4]\n"
    "let C = x[236:4]\n"
    "let S = B + C\n"
    "if A == 50 {\n"
    "}\n"
    "if S < 200 {\n"
    "}\n"
    "if C > 200 {\n"
    "  let T = A + C\n"
    "  if T < 400 {\n"
    "  }\n"
    "}\n";

// Interval-expressible guards at lines 1, 3, 5 and 7; the line-9 guard goes
// through the opaque mixer and can only be satisfied by sampling.
constexpr const char* kFigIntervals =
    "if x[0] == 5 {\n"
    "}\n"
    "if x[1] < 100 {\n"
    "}\n"
    "if x[2] > 10 {\n"
    "  let g = foo(x[2]) & 31\n"
    "  if x[2] <= 200 {\n"
    "\n"
    "    if g == 0 {\n"
    "      crash 9\n"
    "    }\n"
    "  }\n"
    "}\n"
    "\n"
    "input 1024\n";

std::string fig_loopcount_source() {
  // F1 needs loop count 13 together with x[1] == 77; its guard value is a
  // plain linear combination. F2 needs count 14 together with two 16-bit
  // magic words, all folded through the opaque mixer into one equality, so
  // neither distance minimization nor the interval solver can short-cut the
  // conjunction and the blind joint space is 2^40. The magic words have
  // their own directly-comparable branches: inverting those archives the
  // byte solutions, and splicing them into a count-14 seed is what reaches
  // F2. Neither conjunction produces a branch on the count alone: the only
  // count signal is the loop edge multiplicity.
  const uint64_t u_magic = 48879;  // 0xBEEF
  const uint64_t w_magic = 23456;  // 0x5BA0
  const uint64_t f2_magic =
      opaque_mix((14ull << 32) + (u_magic << 16) + w_magic);
  std::ostringstream out;
  out << "input 64\n"
      << "let n = x[0]\n"
      << "let u = x[4:2]\n"
      << "let w = x[2:2]\n"
      << "let g1 = n * 256 + x[1]\n"
      << "let g2 = foo(n * 4294967296 + u * 65536 + w)\n"
      << "loop n {\n"
      << "}\n"
      << "if g1 == " << (13 * 256 + 77) << " {\n"
      << "}\n"
      << "if u == " << u_magic << " {\n"
      << "}\n"
      << "if w == " << w_magic << " {\n"
      << "}\n"
      << "if g2 == " << f2_magic << " {\n"
      << "}\n";
  return out.str();
}

constexpr const char* kMagicDeep =
    "input 1024\n"
    "if x[0] == 222 {\n"
    "  if x[1] == 173 {\n"
    "    if x[2] == 190 {\n"
    "      if x[3] == 239 {\n"
    "        crash 1\n"
    "      }\n"
    "    }\n"
    "  }\n"
    "}\n";

// 64 selector pages of 79 single-byte branches each. Paging keeps one run's
// edge footprint at a few hundred edges, so a small hashed map operates in
// its birthday regime instead of being saturated outright by every run.
constexpr int kWideShallowPages = 64;
constexpr int kWideShallowPerPage = 79;

std::string wide_shallow_source() {
  const int branches = kWideShallowPages * kWideShallowPerPage;
  std::ostringstream out;
  out << "input " << (branches + 1) << "\n";
  out << "let page = x[" << branches << "] & " << (kWideShallowPages - 1)
      << "\n";
  int byte = 0;
  for (int p = 0; p < kWideShallowPages; ++p) {
    out << "if page == " << p << " {\n";
    for (int b = 0; b < kWideShallowPerPage; ++b, ++byte) {
      out << "  if x[" << byte << "] < 128 {\n  }\n";
    }
    out << "}\n";
  }
  return out.str();
}

}  // namespace

const std::vector<CorpusEntry>& builtin_corpus_sources() {
  static const std::vector<CorpusEntry> entries = {
      {"fig_branches",
       "branches with dependent input bytes (single- and multi-byte loads)",
       kFigBranches},
      {"fig_intervals",
       "interval-expressible guard chain around an opaque branch", kFigIntervals},
      {"fig_loopcount",
       "input-driven loop count with two conjunction-guarded blocks",
       fig_loopcount_source()},
      {"magic_deep", "four nested single-byte magic checks ending in a crash",
       kMagicDeep},
      {"wide_shallow",
       "5000 independent single-byte branches stressing hash collisions",
       wide_shallow_source()},
  };
  return entries;
}

std::vector<TargetProgram> builtin_corpus() {
  std::vector<TargetProgram> programs;
  for (const auto& e : builtin_corpus_sources()) {
    programs.push_back(parse_program(e.source, e.name));
  }
  return programs;
}

TargetProgram builtin_program(const std::string& name) {
  for (const auto& e : builtin_corpus_sources()) {
    if (e.name == name) return parse_program(e.source, e.name);
  }
  throw std::invalid_argument("unknown builtin program: " + name);
}

}  // namespace gbf
