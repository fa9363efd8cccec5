#include "gbfuzz/campaign.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gbf {

TargetProgram load_program(const CampaignConfig& cfg) {
  if (!cfg.program_source.empty()) {
    return parse_program(cfg.program_source, cfg.program_name.empty()
                                                 ? "inline"
                                                 : cfg.program_name);
  }
  if (!cfg.program_path.empty()) {
    std::ifstream in(cfg.program_path);
    if (!in) {
      throw std::invalid_argument("cannot open program file: " +
                                  cfg.program_path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_program(text.str(), cfg.program_path);
  }
  if (!cfg.program_name.empty()) {
    return builtin_program(cfg.program_name);
  }
  throw std::invalid_argument("no target program configured");
}

// Per-seed analysis cache. Branch traces do not depend on label tables, so
// entries stay valid across label switches.
struct Campaign::SeedCache {
  ExecutionResult record_run;
  std::optional<TaintReport> taint;
  std::optional<DirectCopyMap> dcm;
  std::map<int, std::vector<uint32_t>> ga_offsets;
};

namespace {

constexpr size_t kSeedCacheCap = 256;
constexpr size_t kArchiveCap = 64;
constexpr size_t kMaxArchiveSegment = 16;

struct BaselineParams {
  // Constant parameters of the generic fuzzer's three vanilla mutations.
  static MutationChoice mrb() {
    MutationChoice c;
    c.strategy = Strategy::MutateRandBytes;
    c.mrb_ga = true;  // fixed byte count, random positions
    c.mrb_ga_count = 4;
    c.mrb_bias = false;
    return c;
  }
  static MutationChoice copy_remove() {
    MutationChoice c;
    c.strategy = Strategy::CopyRemove;
    c.cr_number = 4;
    c.cr_mode = CrMode::Rand;
    return c;
  }
  static MutationChoice combiner() {
    MutationChoice c;
    c.strategy = Strategy::Combiner;
    c.combiner_number = 2;
    c.combiner_select = CombineSelect::Random;
    c.combiner_mode = CombineMode::Random;
    return c;
  }
};

std::string describe(const MutationChoice& c) {
  std::ostringstream out;
  out << to_string(c.strategy);
  switch (c.strategy) {
    case Strategy::MutateRandBytes:
      out << (c.mrb_ga ? "/MRB-GA/" : "/MRB-simple/");
      if (c.mrb_ga) {
        out << c.mrb_ga_count;
      } else {
        out << (c.mrb_bias ? "biased" : "unbiased");
      }
      break;
    case Strategy::CopyRemove:
      out << "/" << c.cr_number << "/";
      switch (c.cr_mode) {
        case CrMode::Rand: out << "CR-rand"; break;
        case CrMode::Real: out << "CR-real"; break;
        case CrMode::Learn: out << "CR-learn"; break;
        case CrMode::Prev: out << "CR-prev"; break;
      }
      break;
    case Strategy::Combiner: {
      static const char* sel[] = {"Speed", "Inverse-speed", "Length",
                                  "Inverse-length", "Select-random"};
      out << "/" << c.combiner_number << "/"
          << sel[static_cast<int>(c.combiner_select)] << "/"
          << (c.combiner_mode == CombineMode::Random ? "CM-random" : "CM-learn");
      break;
    }
    case Strategy::MutateBytes:
      out << "/" << c.mb_number << "/" << (c.mb_bias ? "biased" : "unbiased");
      break;
    case Strategy::SystemSolver:
      out << (c.solver_mode == SolverMode::StAll ? "/ST-all" : "/ST-one");
      break;
    case Strategy::Mingler:
      out << "/" << c.mingler_number;
      break;
    default:
      break;
  }
  return out.str();
}

}  // namespace

Campaign::Campaign(const CampaignConfig& cfg, CampaignMode mode,
                   std::ostream* stats, std::ostream* timeline)
    : cfg_(cfg),
      mode_(mode),
      program_(load_program(cfg)),
      rng_(cfg.rng_seed),
      map_(cfg.map_bits),
      acc_(cfg.map_bits, 0),
      stats_(stats),
      timeline_(timeline) {
  const int label_count = mode_ == CampaignMode::Baseline ? 1 : cfg_.label_count;
  program_.assign_labels(label_count, cfg_.map_bits, rng_);
  nodes_ = make_decision_nodes(cfg_.bandit_gamma, cfg_.bandit_c, cfg_.bandit_xi);

  if (!cfg_.corpus_in.empty()) {
    SeedPool prior = SeedPool::load(cfg_.corpus_in);
    for (const auto& e : prior.entries()) initial_seeds_.push_back(e.bytes);
  }
  for (const auto& path : cfg_.seed_files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open seed file: " + path);
    initial_seeds_.emplace_back(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
  }
  if (initial_seeds_.empty()) {
    initial_seeds_.emplace_back(program_.input_size, 0);
  }
  reset_pool_to_initial();
  if (timeline_) {
    *timeline_ << "iteration,coverage\n";
    *timeline_ << "0," << acc_.size() << "\n";  // initial seed row
  }
}

Campaign::~Campaign() = default;

std::vector<uint8_t> Campaign::normalized(std::span<const uint8_t> bytes) const {
  std::vector<uint8_t> out(bytes.begin(), bytes.end());
  out.resize(program_.input_size, 0);  // pad or truncate to the input model
  return out;
}

const ExecutionResult& Campaign::run_vm(std::span<const uint8_t> bytes,
                                        ExecMode mode,
                                        const std::vector<BranchRecord>* forced) {
  execute_into(program_, bytes, mode, forced, scratch_);
  ++counters_.executions;
  counters_.time_units += scratch_.duration;
  if (scratch_.outcome == Outcome::Crash) {
    ++counters_.crashes;
    if (!crash_found_) {
      crash_found_ = true;
      first_crash_site_ = scratch_.crash_site;
      first_crash_execution_ = counters_.executions;
    }
  }
  return scratch_;
}

CoverageSet Campaign::cover(const ExecutionResult& res) {
  map_.clear();
  record_edges(map_, res.edges, program_.labels[map_.active_label_index]);
  return bucketize(map_);
}

void Campaign::ClassTracker::add(size_t idx, const SeedEntry& e) {
  auto better = [&](const std::pair<uint64_t, size_t>& cand,
                    const std::pair<uint64_t, size_t>& inc) {
    return cand.first < inc.first;
  };
  const std::pair<uint64_t, size_t> cand{e.duration, idx};
  for (const auto& entry : e.coverage.entries) {
    auto [it, fresh] = per_edge.try_emplace(entry.index, cand);
    if (!fresh && better(cand, it->second)) it->second = cand;
    if (entry.bucket > 0) {
      auto [pit, pfresh] =
          per_pair.try_emplace(std::make_pair(entry.index, entry.bucket), cand);
      if (!pfresh && better(cand, pit->second)) pit->second = cand;
    }
  }
  all.push_back(idx);
  dirty = true;
}

void Campaign::ClassTracker::rebuild(const SeedPool& pool) {
  per_edge.clear();
  per_pair.clear();
  all.clear();
  for (size_t i = 0; i < pool.size(); ++i) {
    const auto& e = pool.at(i);
    const std::pair<uint64_t, size_t> cand{e.duration, i};
    for (const auto& entry : e.coverage.entries) {
      auto [it, fresh] = per_edge.try_emplace(entry.index, cand);
      if (!fresh && cand.first < it->second.first) it->second = cand;
      if (entry.bucket > 0) {
        auto [pit, pfresh] = per_pair.try_emplace(
            std::make_pair(entry.index, entry.bucket), cand);
        if (!pfresh && cand.first < pit->second.first) pit->second = cand;
      }
    }
    all.push_back(i);
  }
  dirty = true;
}

const std::vector<size_t>& Campaign::ClassTracker::get(SeedClass c) {
  if (c == SeedClass::All) return all;
  if (dirty) {
    fast_edges.clear();
    for (const auto& [edge, best] : per_edge) fast_edges.push_back(best.second);
    std::sort(fast_edges.begin(), fast_edges.end());
    fast_edges.erase(std::unique(fast_edges.begin(), fast_edges.end()),
                     fast_edges.end());
    fast_multi = fast_edges;
    for (const auto& [pair, best] : per_pair) fast_multi.push_back(best.second);
    std::sort(fast_multi.begin(), fast_multi.end());
    fast_multi.erase(std::unique(fast_multi.begin(), fast_multi.end()),
                     fast_multi.end());
    dirty = false;
  }
  const auto& subset =
      c == SeedClass::FastEdges ? fast_edges : fast_multi;
  return subset.empty() ? all : subset;
}

Campaign::SeedCache& Campaign::ensure_cache(const SeedEntry& seed) {
  auto it = cache_.find(seed.id);
  if (it != cache_.end()) return *it->second;
  if (cache_.size() >= kSeedCacheCap) cache_.clear();
  auto fresh = std::make_unique<SeedCache>();
  const auto norm = normalized(seed.bytes);
  execute_into(program_, norm, ExecMode::Record, nullptr, fresh->record_run);
  ++counters_.executions;
  counters_.time_units += fresh->record_run.duration;
  for (const auto& r : fresh->record_run.trace) {
    observed_directions_.insert({r.branch_id, r.taken});
  }
  auto [pos, inserted] = cache_.emplace(seed.id, std::move(fresh));
  return *pos->second;
}

Campaign::SeedCache& Campaign::ensure_taint(const SeedEntry& seed) {
  SeedCache& cache = ensure_cache(seed);
  if (cache.taint) return cache;
  const auto norm = normalized(seed.bytes);
  TaintReport report;
  if (norm.size() < static_cast<size_t>(cfg_.fti_threshold)) {
    report = fti_infer(program_, norm, cfg_.fti_values_per_byte);
  } else {
    report = infer_taint(program_, norm, cfg_.taint_repeats, rng_);
  }
  counters_.taint_executions += report.mutated_executions;
  counters_.executions += report.mutated_executions + 1;  // plus the seed run
  counters_.time_units += (report.mutated_executions + 1) * seed.duration;

  uint64_t dcm_execs = 0;
  cache.dcm = detect_direct_copies(program_, norm, report, &dcm_execs);
  counters_.executions += dcm_execs;
  counters_.time_units += dcm_execs * seed.duration;
  cache.taint = std::move(report);
  return cache;
}

std::optional<BranchTarget> Campaign::pick_target(const SeedCache& cache,
                                                  Rng& rng) {
  const auto& trace = cache.record_run.trace;
  if (trace.empty()) return std::nullopt;
  const auto keys = trace_keys(trace);
  std::vector<size_t> uninverted;
  for (size_t k = 0; k < trace.size(); ++k) {
    if (!observed_directions_.contains({trace[k].branch_id, !trace[k].taken})) {
      uninverted.push_back(k);
    }
  }
  size_t pos;
  if (!uninverted.empty()) {
    pos = uninverted[rng.below(uninverted.size())];
  } else {
    pos = static_cast<size_t>(rng.below(trace.size()));
  }
  return BranchTarget{keys[pos], pos};
}

size_t Campaign::select(DecisionId id) {
  ++counters_.bandit_selects;
  return nodes_[static_cast<size_t>(id)].select(rng_);
}

void Campaign::update(DecisionId id, size_t arm, double reward) {
  ++counters_.bandit_updates;
  nodes_[static_cast<size_t>(id)].update(arm, reward);
}

void Campaign::admit(std::vector<uint8_t> raw_bytes, const SeedEntry& base,
                     Strategy strategy, const CoverageSet& cov,
                     const ExecutionResult& res, size_t increase) {
  ++counters_.admissions;
  pool_.add(std::move(raw_bytes), cov, res.duration,
            res.outcome == Outcome::Crash, increase);
  const SeedEntry& added = pool_.entries().back();
  tracker_.add(pool_.size() - 1, added);

  if (mode_ == CampaignMode::Baseline) return;

  // Archive the byte-level difference versus the base seed: the mingler
  // replays such solutions into other seeds, CR-learn mines delimiter bytes
  // around them, and the bias weights steer future offset draws.
  const auto base_n = normalized(base.bytes);
  const auto new_n = normalized(added.bytes);
  if (history_.byte_use.size() < base_n.size()) {
    history_.byte_use.resize(base_n.size(), 0.0);
  }
  size_t p = 0;
  size_t segments = 0;
  while (p < new_n.size() && segments < 4) {
    if (base_n[p] == new_n[p]) {
      ++p;
      continue;
    }
    size_t q = p;
    while (q < new_n.size() && base_n[q] != new_n[q] &&
           q - p < kMaxArchiveSegment) {
      ++q;
    }
    MutationHistory::Solution sol;
    sol.offset = static_cast<uint32_t>(p);
    sol.bytes.assign(new_n.begin() + static_cast<ptrdiff_t>(p),
                     new_n.begin() + static_cast<ptrdiff_t>(q));
    if (history_.archive.size() >= kArchiveCap) {
      history_.archive.erase(history_.archive.begin());
    }
    history_.archive.push_back(std::move(sol));
    for (size_t i = p; i < q; ++i) history_.byte_use[i] += 1.0;
    if (strategy == Strategy::CopyRemove) {
      const uint8_t delim = p > 0 ? base_n[p - 1] : base_n[0];
      if (history_.divisors.size() >= kArchiveCap) {
        history_.divisors.erase(history_.divisors.begin());
      }
      history_.divisors.push_back(delim);
      if (history_.good_positions.size() >= kArchiveCap) {
        history_.good_positions.erase(history_.good_positions.begin());
      }
      history_.good_positions.emplace_back(static_cast<uint32_t>(p),
                                           static_cast<uint32_t>(q - p));
    }
    ++segments;
    p = q;
  }
}

void Campaign::reset_pool_to_initial() {
  pool_.entries().clear();
  cache_.clear();
  acc_.reset(map_.active_label_index);
  for (const auto& bytes : initial_seeds_) {
    const auto norm = normalized(bytes);
    const ExecutionResult& res = run_vm(norm, ExecMode::Normal, nullptr);
    const CoverageSet cov = cover(res);
    const size_t incr = acc_.increase_of(cov);
    acc_.add(cov);
    pool_.add(bytes, cov, res.duration, res.outcome == Outcome::Crash, incr);
  }
  tracker_.rebuild(pool_);
}

void Campaign::maybe_switch_labels() {
  if (cfg_.switch_period == 0 || program_.label_count() <= 1 || flushing_) {
    return;
  }
  if (counters_.iterations == 0 ||
      counters_.iterations % cfg_.switch_period != 0) {
    return;
  }
  map_.active_label_index =
      (map_.active_label_index + 1) % program_.label_count();
  acc_.reset(map_.active_label_index);
  const size_t cap =
      std::min<size_t>(pool_.size(), cfg_.switch_rebuild_cap);
  for (size_t i = 0; i < pool_.size(); ++i) {
    if (i >= cap) break;
    SeedEntry& e = pool_.at(i);
    const auto norm = normalized(e.bytes);
    const ExecutionResult& res = run_vm(norm, ExecMode::Normal, nullptr);
    e.coverage = cover(res);
    acc_.add(e.coverage);
  }
  tracker_.rebuild(pool_);
  ++counters_.label_switches;
}

void Campaign::maybe_flush() {
  if (cfg_.flush_period == 0 || mode_ == CampaignMode::Baseline) return;
  if (flushing_) {
    if (counters_.iterations >= flush_end_iteration_) finish_flush();
    return;
  }
  if (counters_.iterations == 0 ||
      counters_.iterations % cfg_.flush_period != 0) {
    return;
  }
  flushing_ = true;
  flush_end_iteration_ = counters_.iterations + cfg_.flush_window;
  flush_snapshot_ = acc_.to_set();
  flush_old_pool_ = pool_.entries();
  reset_pool_to_initial();
  ++counters_.flushes;
}

void Campaign::finish_flush() {
  flushing_ = false;
  CoverageAccumulator snapshot(cfg_.map_bits, flush_snapshot_.label_index);
  snapshot.add(flush_snapshot_);

  // Old_seeds plus the window seeds that contribute coverage beyond the
  // snapshot.
  std::vector<SeedEntry> merged = std::move(flush_old_pool_);
  flush_old_pool_.clear();
  for (auto& e : pool_.entries()) {
    if (e.coverage.label_index == snapshot.label_index() &&
        snapshot.increase_of(e.coverage) > 0) {
      merged.push_back(std::move(e));
    }
  }
  pool_.entries() = std::move(merged);
  cache_.clear();
  tracker_.rebuild(pool_);

  const CoverageSet window_cov = acc_.to_set();
  acc_.reset(flush_snapshot_.label_index);
  acc_.add(flush_snapshot_);
  acc_.add(window_cov);
}

void Campaign::write_stats_line(size_t class_arm, size_t crit_arm,
                                size_t strat_arm, double reward,
                                const std::vector<std::string>& muts) {
  if (!stats_) {
    if (timeline_) {
      *timeline_ << counters_.iterations << "," << acc_.size() << "\n";
    }
    return;
  }
  nlohmann::json line;
  line["iter"] = counters_.iterations;
  line["execs"] = counters_.executions;
  line["time"] = counters_.time_units;
  if (mode_ == CampaignMode::Full) {
    line["class"] =
        nodes_[static_cast<size_t>(DecisionId::SeedClass)].arm_name(class_arm);
    line["crit"] = nodes_[static_cast<size_t>(DecisionId::SeedCriterion)]
                       .arm_name(crit_arm);
    line["strategy"] = nodes_[static_cast<size_t>(DecisionId::FuzzerStrategy)]
                           .arm_name(strat_arm);
  } else {
    line["class"] = "SC-all";
    line["crit"] = "Random";
    line["strategy"] = "Vanilla";
  }
  line["reward"] = reward;
  line["cov"] = acc_.size();
  line["pool"] = pool_.size();
  line["crashes"] = counters_.crashes;
  line["flushing"] = flushing_;
  line["muts"] = muts;
  *stats_ << line.dump() << "\n";
  if (timeline_) {
    *timeline_ << counters_.iterations << "," << acc_.size() << "\n";
  }
}

namespace {

struct StepChoice {
  MutationChoice choice;
  std::vector<std::pair<DecisionId, size_t>> path;
};

}  // namespace

void Campaign::iteration_full() {
  const size_t class_arm = select(DecisionId::SeedClass);
  const size_t crit_arm = select(DecisionId::SeedCriterion);
  const auto seed_class = static_cast<SeedClass>(class_arm);
  const auto criterion = static_cast<SeedCriterion>(crit_arm);
  const auto& candidates = tracker_.get(seed_class);
  const size_t seed_idx = pool_.sample(candidates, criterion, rng_);
  SeedEntry seed = pool_.at(seed_idx);  // pool may grow during the loop
  // Work on the fixed-size input view: taint offsets, traces and GA probes
  // all refer to it. The pool keeps the raw admitted bytes.
  seed.bytes = normalized(seed.bytes);

  const size_t strat_arm = select(DecisionId::FuzzerStrategy);
  const bool dataflow = strat_arm == 1;

  const uint64_t iter_units_start = counters_.time_units;
  SeedCache* cache = nullptr;
  if (dataflow) {
    cache = &ensure_taint(seed);
  }

  uint64_t total_increase = 0;
  std::vector<std::string> mut_log;

  for (int step = 0; step < cfg_.inner_budget; ++step) {
    if (cfg_.max_executions != 0 &&
        counters_.executions >= cfg_.max_executions) {
      break;
    }
    // Mutation and parameter choices for this step.
    StepChoice sc;
    if (!dataflow) {
      const size_t mut_arm = select(DecisionId::VanillaMutation);
      sc.path.emplace_back(DecisionId::VanillaMutation, mut_arm);
      switch (mut_arm) {
        case 0: {
          sc.choice.strategy = Strategy::MutateRandBytes;
          const size_t type_arm = select(DecisionId::MrbType);
          sc.path.emplace_back(DecisionId::MrbType, type_arm);
          sc.choice.mrb_ga = type_arm == 0;
          if (sc.choice.mrb_ga) {
            const size_t k_arm = select(DecisionId::MrbGaByteCount);
            sc.path.emplace_back(DecisionId::MrbGaByteCount, k_arm);
            sc.choice.mrb_ga_count = kMrbGaCounts[k_arm];
          } else {
            const size_t bias_arm = select(DecisionId::MrbSimpleBias);
            sc.path.emplace_back(DecisionId::MrbSimpleBias, bias_arm);
            sc.choice.mrb_bias = bias_arm == 0;
          }
          break;
        }
        case 1: {
          sc.choice.strategy = Strategy::CopyRemove;
          const size_t n_arm = select(DecisionId::CopyRemoveNumber);
          sc.path.emplace_back(DecisionId::CopyRemoveNumber, n_arm);
          sc.choice.cr_number = kCopyRemoveNumbers[n_arm];
          const size_t m_arm = select(DecisionId::CopyRemoveMode);
          sc.path.emplace_back(DecisionId::CopyRemoveMode, m_arm);
          sc.choice.cr_mode = static_cast<CrMode>(m_arm);
          break;
        }
        default: {
          sc.choice.strategy = Strategy::Combiner;
          const size_t n_arm = select(DecisionId::CombinerNumber);
          sc.path.emplace_back(DecisionId::CombinerNumber, n_arm);
          sc.choice.combiner_number = kCombinerNumbers[n_arm];
          const size_t s_arm = select(DecisionId::CombinerSelect);
          sc.path.emplace_back(DecisionId::CombinerSelect, s_arm);
          sc.choice.combiner_select = static_cast<CombineSelect>(s_arm);
          const size_t md_arm = select(DecisionId::CombinerMode);
          sc.path.emplace_back(DecisionId::CombinerMode, md_arm);
          sc.choice.combiner_mode = static_cast<CombineMode>(md_arm);
          break;
        }
      }
    } else {
      const size_t mut_arm = select(DecisionId::DataflowMutation);
      sc.path.emplace_back(DecisionId::DataflowMutation, mut_arm);
      switch (mut_arm) {
        case 0: {
          sc.choice.strategy = Strategy::MutateBytes;
          const size_t n_arm = select(DecisionId::MutateBytesNumber);
          sc.path.emplace_back(DecisionId::MutateBytesNumber, n_arm);
          sc.choice.mb_number = kMutateBytesNumbers[n_arm];
          const size_t b_arm = select(DecisionId::MutateBytesBias);
          sc.path.emplace_back(DecisionId::MutateBytesBias, b_arm);
          sc.choice.mb_bias = b_arm == 0;
          break;
        }
        case 1:
          sc.choice.strategy = Strategy::InvertBranches;
          break;
        case 2:
          sc.choice.strategy = Strategy::InvertBranchesGa;
          break;
        case 3: {
          sc.choice.strategy = Strategy::SystemSolver;
          const size_t t_arm = select(DecisionId::SystemSolverType);
          sc.path.emplace_back(DecisionId::SystemSolverType, t_arm);
          sc.choice.solver_mode =
              t_arm == 0 ? SolverMode::StAll : SolverMode::StOne;
          break;
        }
        default: {
          sc.choice.strategy = Strategy::Mingler;
          const size_t n_arm = select(DecisionId::MinglerNumber);
          sc.path.emplace_back(DecisionId::MinglerNumber, n_arm);
          sc.choice.mingler_number = kMinglerNumbers[n_arm];
          break;
        }
      }
    }

    const uint64_t units_before = counters_.time_units;
    MutationContext ctx;
    ctx.program = &program_;
    ctx.pool = &pool_;
    ctx.history = &history_;
    ctx.ga_generations = cfg_.ga_generations;
    ctx.ga_population = cfg_.ga_population;
    uint64_t internal_execs = 0;
    ctx.executions = &internal_execs;
    if (dataflow) {
      ctx.taint = &*cache->taint;
      ctx.dcm = &*cache->dcm;
      ctx.seed_trace = &cache->record_run.trace;
      ctx.target = pick_target(*cache, rng_);
    }
    std::vector<uint32_t> ga_offsets_storage;
    if (sc.choice.strategy == Strategy::MutateRandBytes && sc.choice.mrb_ga) {
      SeedCache& c = ensure_cache(seed);
      auto it = c.ga_offsets.find(sc.choice.mrb_ga_count);
      if (it == c.ga_offsets.end()) {
        uint64_t ga_execs = 0;
        ga_offsets_storage = ga_positions(
            program_, normalized(seed.bytes), sc.choice.mrb_ga_count,
            cfg_.ga_generations, cfg_.ga_population, rng_, &ga_execs);
        counters_.executions += ga_execs;
        counters_.time_units += ga_execs * seed.duration;
        it = c.ga_offsets.emplace(sc.choice.mrb_ga_count, ga_offsets_storage)
                 .first;
      }
      ctx.ga_offsets = &it->second;
    }

    MutationOutcome out = mutate(seed, sc.choice, ctx, rng_);
    counters_.executions += internal_execs;
    counters_.time_units += internal_execs * seed.duration;

    size_t increase = 0;
    if (!out.noop) {
      const auto norm = normalized(out.bytes);
      const ExecutionResult& res = run_vm(norm, ExecMode::Normal, nullptr);
      const CoverageSet cov = cover(res);
      increase = acc_.increase_of(cov);
      if (increase > 0) {
        acc_.add(cov);
        admit(std::move(out.bytes), seed, sc.choice.strategy, cov, res,
              increase);
      }
    }

    const uint64_t elapsed =
        std::max<uint64_t>(1, counters_.time_units - units_before);
    const double reward = normalizer_.value(increase, elapsed);
    for (const auto& [id, arm] : sc.path) update(id, arm, reward);
    ++counters_.step_update_events;
    total_increase += increase;
    mut_log.push_back(describe(sc.choice));
  }

  const uint64_t iter_elapsed =
      std::max<uint64_t>(1, counters_.time_units - iter_units_start);
  const double iter_reward = normalizer_.value(total_increase, iter_elapsed);
  update(DecisionId::SeedClass, class_arm, iter_reward);
  update(DecisionId::SeedCriterion, crit_arm, iter_reward);
  update(DecisionId::FuzzerStrategy, strat_arm, iter_reward);
  ++counters_.iteration_update_events;

  ++counters_.iterations;
  write_stats_line(class_arm, crit_arm, strat_arm, iter_reward, mut_log);
}

void Campaign::iteration_baseline() {
  // Appendix-style generic loop: constant seed criterion, uniform mutation
  // choice, constant parameters, no feedback besides seed admission.
  const size_t seed_idx =
      pool_.sample(tracker_.get(SeedClass::All), SeedCriterion::Random, rng_);
  SeedEntry seed = pool_.at(seed_idx);
  seed.bytes = normalized(seed.bytes);

  std::vector<std::string> mut_log;
  for (int step = 0; step < cfg_.inner_budget; ++step) {
    if (cfg_.max_executions != 0 &&
        counters_.executions >= cfg_.max_executions) {
      break;
    }
    MutationChoice choice;
    switch (rng_.below(3)) {
      case 0: choice = BaselineParams::mrb(); break;
      case 1: choice = BaselineParams::copy_remove(); break;
      default: choice = BaselineParams::combiner(); break;
    }
    MutationContext ctx;
    ctx.program = &program_;
    ctx.pool = &pool_;
    ctx.history = nullptr;
    MutationOutcome out = mutate(seed, choice, ctx, rng_);
    if (!out.noop) {
      const auto norm = normalized(out.bytes);
      const ExecutionResult& res = run_vm(norm, ExecMode::Normal, nullptr);
      const CoverageSet cov = cover(res);
      const size_t increase = acc_.increase_of(cov);
      if (increase > 0) {
        acc_.add(cov);
        admit(std::move(out.bytes), seed, choice.strategy, cov, res, increase);
      }
    }
    mut_log.push_back(describe(choice));
  }
  ++counters_.iterations;
  write_stats_line(0, 0, 0, 0.0, mut_log);
}

void Campaign::one_iteration() {
  if (pool_.empty()) {
    throw std::logic_error("one_iteration: empty seed pool");
  }
  if (mode_ == CampaignMode::Full) {
    iteration_full();
  } else {
    iteration_baseline();
  }
}

CampaignResult Campaign::run() {
  while (counters_.iterations < cfg_.max_iterations &&
         (cfg_.max_executions == 0 ||
          counters_.executions < cfg_.max_executions)) {
    one_iteration();
    if (mode_ == CampaignMode::Full) {
      maybe_flush();
      maybe_switch_labels();
    }
  }
  if (flushing_) finish_flush();

  CampaignResult result;
  result.counters = counters_;
  result.coverage_size = acc_.size();
  result.pool_size = pool_.size();
  result.crash_found = crash_found_;
  result.first_crash_site = first_crash_site_;
  result.first_crash_execution = first_crash_execution_;

  // Ground-truth edge union over the final pool, by replay.
  std::set<Edge> true_edges;
  ExecutionResult res;
  for (const auto& e : pool_.entries()) {
    const auto norm = normalized(e.bytes);
    execute_into(program_, norm, ExecMode::Normal, nullptr, res);
    true_edges.insert(res.edges.begin(), res.edges.end());
  }
  result.pool_true_edges.assign(true_edges.begin(), true_edges.end());

  if (!cfg_.corpus_out.empty()) {
    pool_.save(cfg_.corpus_out);
  }
  return result;
}

CampaignResult run_campaign(const CampaignConfig& cfg, std::ostream* stats,
                            std::ostream* timeline) {
  Campaign campaign(cfg, CampaignMode::Full, stats, timeline);
  return campaign.run();
}

CampaignResult run_generic_baseline(const CampaignConfig& cfg,
                                    std::ostream* stats,
                                    std::ostream* timeline) {
  Campaign campaign(cfg, CampaignMode::Baseline, stats, timeline);
  return campaign.run();
}

}  // namespace gbf
