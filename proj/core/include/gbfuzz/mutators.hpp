#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gbfuzz/intervals.hpp"
#include "gbfuzz/rng.hpp"
#include "gbfuzz/seed_pool.hpp"
#include "gbfuzz/taint.hpp"
#include "gbfuzz/target_vm.hpp"

namespace gbf {

enum class Strategy {
  MutateRandBytes,
  CopyRemove,
  Combiner,
  MutateBytes,
  InvertBranches,
  InvertBranchesGa,
  SystemSolver,
  Mingler,
};

const char* to_string(Strategy s);
bool is_dataflow(Strategy s);

enum class CrMode { Rand, Real, Learn, Prev };
enum class CombineSelect { Speed, InverseSpeed, Length, InverseLength, Random };
enum class CombineMode { Random, Learn };

// Catalogue parameter domains (shared with the bandit arm tables).
inline constexpr int kMrbGaCounts[] = {1, 2, 4, 8, 16, 32, 64};
inline constexpr int kCopyRemoveNumbers[] = {1, 2, 4, 8, 16, 32, 64};
inline constexpr int kCombinerNumbers[] = {2, 3, 4, 5, 6, 7, 8};
inline constexpr int kMutateBytesNumbers[] = {1, 2, 4, 8, 16};
inline constexpr int kMinglerNumbers[] = {1, 2, 3, 4, 5, 6};

struct MutationChoice {
  Strategy strategy = Strategy::MutateRandBytes;

  bool mrb_ga = false;
  int mrb_ga_count = 1;
  bool mrb_bias = false;

  int cr_number = 1;
  CrMode cr_mode = CrMode::Rand;

  int combiner_number = 2;
  CombineSelect combiner_select = CombineSelect::Random;
  CombineMode combiner_mode = CombineMode::Random;

  int mb_number = 1;
  bool mb_bias = false;

  SolverMode solver_mode = SolverMode::StAll;

  int mingler_number = 1;

  // True iff the active strategy's parameters lie in the catalogue domains.
  bool valid() const;
};

// Cross-iteration archives. The orchestrator updates them after rewarded
// mutations; mutators only read.
struct MutationHistory {
  std::vector<double> byte_use;  // per-offset success weight (bias mode)
  std::vector<uint8_t> divisors;  // CR-learn: delimiter bytes seen at
                                  // rewarded copy/remove positions
  std::vector<std::pair<uint32_t, uint32_t>> good_positions;  // CR-prev

  struct Solution {
    uint32_t offset = 0;
    std::vector<uint8_t> bytes;
  };
  std::vector<Solution> archive;  // mingler byte-solutions

  double byte_weight(size_t offset) const {
    return 1.0 + (offset < byte_use.size() ? byte_use[offset] : 0.0);
  }
};

struct BranchTarget {
  BranchKey key;
  size_t trace_pos = 0;
};

struct MutationContext {
  const TargetProgram* program = nullptr;
  const SeedPool* pool = nullptr;
  const MutationHistory* history = nullptr;

  // Data-flow inputs, present when the iteration ran taint inference.
  const TaintReport* taint = nullptr;
  const DirectCopyMap* dcm = nullptr;
  const std::vector<BranchRecord>* seed_trace = nullptr;
  std::optional<BranchTarget> target;
  const std::vector<uint32_t>* ga_offsets = nullptr;  // cached MRB-GA result

  int ga_generations = 8;
  int ga_population = 32;
  uint64_t* executions = nullptr;  // charged by strategies that execute
};

struct MutationOutcome {
  std::vector<uint8_t> bytes;
  bool noop = false;      // nothing to execute; caller records zero reward
  bool inverted = false;  // GA inversion reached distance zero
};

// Applies one catalogue mutation. Data-flow strategies require taint context;
// calling them without it is a contract violation.
MutationOutcome mutate(const SeedEntry& seed, const MutationChoice& choice,
                       MutationContext& ctx, Rng& rng);

// GA position search for Mutate-rand-bytes: finds k offsets maximizing the
// number of branch occurrences whose operands move when those offsets are
// randomized. Every fitness evaluation is one forced execution.
std::vector<uint32_t> ga_positions(const TargetProgram& program,
                                   std::span<const uint8_t> seed, int k,
                                   int generations, int population, Rng& rng,
                                   uint64_t* executions = nullptr);

// Distance to the desired branch direction; zero means inverted.
uint64_t inversion_distance(CmpOp op, bool want_taken, uint64_t lhs,
                            uint64_t rhs);

struct GaInvertOutcome {
  bool success = false;
  std::vector<uint8_t> bytes;
  uint64_t best_distance = ~uint64_t{0};
  uint64_t executions = 0;
  std::vector<uint64_t> distance_trace;  // best distance per generation
};

// GA branch inversion: minimizes inversion_distance over assignments to the
// branch's dependent bytes, evaluated under forced execution so the branch
// stays observable. Only dependent bytes ever differ from the seed.
GaInvertOutcome ga_invert_branch(const TargetProgram& program,
                                 std::span<const uint8_t> seed,
                                 const std::vector<BranchRecord>& seed_trace,
                                 size_t trace_pos, bool want_taken,
                                 const DependencyVector& deps, int generations,
                                 int population, Rng& rng);

// Splices `count` archived byte-solutions into the seed at their recorded
// offsets. Entries beyond the seed bounds are skipped; an empty archive is a
// no-op signal.
std::vector<uint8_t> mingle(std::span<const uint8_t> seed,
                            const MutationHistory& history, int count,
                            Rng& rng, bool* noop = nullptr);

}  // namespace gbf
