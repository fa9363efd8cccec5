#pragma once

#include <string>
#include <vector>

#include "gbfuzz/target_vm.hpp"

namespace gbf {

struct CorpusEntry {
  std::string name;
  std::string description;
  std::string source;
};

// Built-in target programs used by the test suites and the CLI:
//   fig_branches  - branches over arithmetic of single- and multi-byte loads
//   fig_intervals - a chain of interval-expressible guards around an opaque one
//   fig_loopcount - an input-driven loop plus two conjunction-guarded blocks
//   magic_deep    - nested single-byte magic equality checks ending in a crash
//   wide_shallow  - thousands of independent single-byte branches
const std::vector<CorpusEntry>& builtin_corpus_sources();

std::vector<TargetProgram> builtin_corpus();

// Parses one built-in program by name; throws std::invalid_argument if absent.
TargetProgram builtin_program(const std::string& name);

}  // namespace gbf
