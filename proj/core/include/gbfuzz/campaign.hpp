#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "gbfuzz/bandit.hpp"
#include "gbfuzz/config.hpp"
#include "gbfuzz/coverage.hpp"
#include "gbfuzz/corpus.hpp"
#include "gbfuzz/intervals.hpp"
#include "gbfuzz/mutators.hpp"
#include "gbfuzz/seed_pool.hpp"
#include "gbfuzz/taint.hpp"
#include "gbfuzz/target_vm.hpp"

namespace gbf {

struct CampaignCounters {
  uint64_t iterations = 0;
  uint64_t executions = 0;        // every VM run, probes included
  uint64_t time_units = 0;        // abstract duration of all runs
  uint64_t taint_executions = 0;  // mutated taint runs and crash probes
  uint64_t bandit_selects = 0;
  uint64_t bandit_updates = 0;      // node-level updates
  uint64_t step_update_events = 0;  // one per inner mutation (Algorithm-1 style)
  uint64_t iteration_update_events = 0;
  uint64_t admissions = 0;
  uint64_t label_switches = 0;
  uint64_t flushes = 0;
  uint64_t crashes = 0;
};

struct CampaignResult {
  CampaignCounters counters;
  size_t coverage_size = 0;
  size_t pool_size = 0;
  bool crash_found = false;
  uint32_t first_crash_site = 0;
  uint64_t first_crash_execution = 0;
  // Ground-truth edges over the final pool, recomputed by replay.
  std::vector<Edge> pool_true_edges;
};

enum class CampaignMode {
  Full,     // Algorithm-style bandit-scheduled loop with switching/flushing
  Baseline  // generic grey-box fuzzer: uniform choices, constant parameters,
            // single label table, no taint, no solver, no flushing
};

// The campaign orchestrator. One instance owns the program, the seed pool,
// the coverage state, the bandit nodes and the mutation archives; its public
// surface exists mainly so tests can drive single iterations.
class Campaign {
 public:
  Campaign(const CampaignConfig& cfg, CampaignMode mode,
           std::ostream* stats = nullptr, std::ostream* timeline = nullptr);
  ~Campaign();

  // One seed-selection + inner-mutation-loop round.
  void one_iteration();

  // Full loop with label switching and coverage flushing until the budget
  // runs out; finalizes the result (pool replay, corpus write-out).
  CampaignResult run();

  const CampaignCounters& counters() const { return counters_; }
  const SeedPool& pool() const { return pool_; }
  const TargetProgram& program() const { return program_; }
  size_t coverage_size() const { return acc_.size(); }
  bool flushing() const { return flushing_; }
  bool crash_found() const { return crash_found_; }

 private:
  struct SeedCache;

  std::vector<uint8_t> normalized(std::span<const uint8_t> bytes) const;
  const ExecutionResult& run_vm(std::span<const uint8_t> bytes, ExecMode mode,
                                const std::vector<BranchRecord>* forced);
  CoverageSet cover(const ExecutionResult& res);
  SeedCache& ensure_cache(const SeedEntry& seed);
  SeedCache& ensure_taint(const SeedEntry& seed);
  std::optional<BranchTarget> pick_target(const SeedCache& cache, Rng& rng);
  size_t select(DecisionId id);
  void update(DecisionId id, size_t arm, double reward);
  void admit(std::vector<uint8_t> raw_bytes, const SeedEntry& base,
             Strategy strategy, const CoverageSet& cov,
             const ExecutionResult& res, size_t increase);
  void maybe_switch_labels();
  void maybe_flush();
  void finish_flush();
  void reset_pool_to_initial();
  void write_stats_line(size_t class_arm, size_t crit_arm, size_t strat_arm,
                        double reward, const std::vector<std::string>& muts);
  void iteration_full();
  void iteration_baseline();

  CampaignConfig cfg_;
  CampaignMode mode_;
  TargetProgram program_;
  Rng rng_;
  ShowMap map_;
  CoverageAccumulator acc_;
  SeedPool pool_;
  std::vector<BanditNode> nodes_;
  RewardNormalizer normalizer_;
  MutationHistory history_;
  CampaignCounters counters_;

  std::map<uint64_t, std::unique_ptr<SeedCache>> cache_;
  std::set<std::pair<uint32_t, bool>> observed_directions_;
  std::vector<std::vector<uint8_t>> initial_seeds_;

  bool flushing_ = false;
  uint64_t flush_end_iteration_ = 0;
  CoverageSet flush_snapshot_;
  std::vector<SeedEntry> flush_old_pool_;

  // Incrementally maintained seed-class candidate sets; SeedPool::classify
  // recomputes from scratch, which is too slow to run every iteration.
  struct ClassTracker {
    std::map<uint32_t, std::pair<uint64_t, size_t>> per_edge;
    std::map<std::pair<uint32_t, uint8_t>, std::pair<uint64_t, size_t>> per_pair;
    std::vector<size_t> all;
    std::vector<size_t> fast_edges;
    std::vector<size_t> fast_multi;
    bool dirty = true;

    void add(size_t idx, const SeedEntry& e);
    void rebuild(const SeedPool& pool);
    const std::vector<size_t>& get(SeedClass c);
  };
  ClassTracker tracker_;

  bool crash_found_ = false;
  uint32_t first_crash_site_ = 0;
  uint64_t first_crash_execution_ = 0;

  std::ostream* stats_;
  std::ostream* timeline_;
  ExecutionResult scratch_;
  std::vector<uint8_t> norm_buf_;
};

CampaignResult run_campaign(const CampaignConfig& cfg,
                            std::ostream* stats = nullptr,
                            std::ostream* timeline = nullptr);

CampaignResult run_generic_baseline(const CampaignConfig& cfg,
                                    std::ostream* stats = nullptr,
                                    std::ostream* timeline = nullptr);

// Loads the target per the config precedence: inline source, file path,
// builtin name.
TargetProgram load_program(const CampaignConfig& cfg);

}  // namespace gbf
