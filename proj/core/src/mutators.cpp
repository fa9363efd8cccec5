#include "gbfuzz/mutators.hpp"

#include <algorithm>
#include <stdexcept>

namespace gbf {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::MutateRandBytes: return "Mutate-rand-bytes";
    case Strategy::CopyRemove: return "Copy-remove";
    case Strategy::Combiner: return "Combiner";
    case Strategy::MutateBytes: return "Mutate-bytes";
    case Strategy::InvertBranches: return "Invert-branches";
    case Strategy::InvertBranchesGa: return "Invert-branches-GA";
    case Strategy::SystemSolver: return "System-solver";
    case Strategy::Mingler: return "Mingler";
  }
  return "?";
}

bool is_dataflow(Strategy s) {
  switch (s) {
    case Strategy::MutateRandBytes:
    case Strategy::CopyRemove:
    case Strategy::Combiner:
      return false;
    default:
      return true;
  }
}

namespace {

template <size_t N>
bool in_domain(const int (&domain)[N], int v) {
  for (int d : domain) {
    if (d == v) return true;
  }
  return false;
}

}  // namespace

bool MutationChoice::valid() const {
  switch (strategy) {
    case Strategy::MutateRandBytes:
      return !mrb_ga || in_domain(kMrbGaCounts, mrb_ga_count);
    case Strategy::CopyRemove:
      return in_domain(kCopyRemoveNumbers, cr_number);
    case Strategy::Combiner:
      return in_domain(kCombinerNumbers, combiner_number);
    case Strategy::MutateBytes:
      return in_domain(kMutateBytesNumbers, mb_number);
    case Strategy::Mingler:
      return in_domain(kMinglerNumbers, mingler_number);
    case Strategy::InvertBranches:
    case Strategy::InvertBranchesGa:
    case Strategy::SystemSolver:
      return true;
  }
  return false;
}

uint64_t inversion_distance(CmpOp op, bool want_taken, uint64_t lhs,
                            uint64_t rhs) {
  const CmpOp goal = want_taken ? op : negate(op);
  switch (goal) {
    case CmpOp::Eq:
      return lhs > rhs ? lhs - rhs : rhs - lhs;
    case CmpOp::Ne:
      return lhs == rhs ? 1 : 0;
    case CmpOp::Lt:
      return lhs < rhs ? 0 : lhs - rhs + 1;
    case CmpOp::Le:
      return lhs <= rhs ? 0 : lhs - rhs;
    case CmpOp::Gt:
      return lhs > rhs ? 0 : rhs - lhs + 1;
    case CmpOp::Ge:
      return lhs >= rhs ? 0 : rhs - lhs;
  }
  return ~uint64_t{0};
}

namespace {

// Offset draw helpers -------------------------------------------------------

size_t draw_offset(size_t n, bool biased, const MutationHistory* history,
                   Rng& rng) {
  if (!biased || !history || history->byte_use.empty()) {
    return static_cast<size_t>(rng.below(n));
  }
  double total = 0;
  for (size_t i = 0; i < n; ++i) total += history->byte_weight(i);
  double u = rng.unit() * total;
  for (size_t i = 0; i < n; ++i) {
    const double w = history->byte_weight(i);
    if (u < w) return i;
    u -= w;
  }
  return n - 1;
}

// log-uniform in [1, 64]
size_t draw_span_length(Rng& rng) {
  return size_t{1} << rng.below(7);
}

std::vector<uint8_t> mutate_rand_bytes(const SeedEntry& seed,
                                       const MutationChoice& choice,
                                       MutationContext& ctx, Rng& rng) {
  std::vector<uint8_t> out = seed.bytes;
  if (out.empty()) return out;
  if (choice.mrb_ga && ctx.ga_offsets && !ctx.ga_offsets->empty()) {
    for (uint32_t p : *ctx.ga_offsets) {
      if (p < out.size()) out[p] = rng.byte();
    }
    return out;
  }
  const size_t count =
      choice.mrb_ga ? static_cast<size_t>(choice.mrb_ga_count)
                    : draw_span_length(rng);
  for (size_t i = 0; i < count; ++i) {
    const size_t p = draw_offset(out.size(), choice.mrb_bias, ctx.history, rng);
    out[p] = rng.byte();
  }
  return out;
}

size_t draw_position(const std::vector<uint8_t>& bytes, CrMode mode,
                     const MutationHistory* history, Rng& rng) {
  if (mode == CrMode::Learn && history && !history->divisors.empty()) {
    // Land on an occurrence of a learned delimiter byte when one exists.
    const uint8_t delim =
        history->divisors[rng.below(history->divisors.size())];
    std::vector<size_t> spots;
    for (size_t i = 0; i < bytes.size(); ++i) {
      if (bytes[i] == delim) spots.push_back(i);
    }
    if (!spots.empty()) return spots[rng.below(spots.size())];
  }
  if (mode == CrMode::Prev && history && !history->good_positions.empty()) {
    const auto& p =
        history->good_positions[rng.below(history->good_positions.size())];
    if (p.first < bytes.size()) return p.first;
  }
  return static_cast<size_t>(rng.below(bytes.size()));
}

std::vector<uint8_t> copy_remove(const SeedEntry& seed,
                                 const MutationChoice& choice,
                                 MutationContext& ctx, Rng& rng) {
  std::vector<uint8_t> out = seed.bytes;
  constexpr size_t kMaxLength = 1 << 16;
  for (int op = 0; op < choice.cr_number; ++op) {
    if (out.empty()) break;
    const size_t len = std::min(draw_span_length(rng), out.size());
    if (rng.coin() && out.size() > len) {
      // remove
      const size_t pos = draw_position(out, choice.cr_mode, ctx.history, rng);
      const size_t n = std::min(len, out.size() - pos);
      out.erase(out.begin() + static_cast<ptrdiff_t>(pos),
                out.begin() + static_cast<ptrdiff_t>(pos + n));
    } else {
      // copy/insert
      const size_t dst = draw_position(out, choice.cr_mode, ctx.history, rng);
      std::vector<uint8_t> chunk(len);
      if (choice.cr_mode == CrMode::Rand) {
        for (auto& b : chunk) b = rng.byte();
      } else {
        const size_t src = rng.below(out.size());
        for (size_t i = 0; i < len; ++i) {
          chunk[i] = out[(src + i) % out.size()];
        }
      }
      if (out.size() + chunk.size() <= kMaxLength) {
        out.insert(out.begin() + static_cast<ptrdiff_t>(dst), chunk.begin(),
                   chunk.end());
      }
    }
  }
  return out;
}

double combiner_weight(const SeedEntry& e, CombineSelect select) {
  switch (select) {
    case CombineSelect::Speed:
      return 1.0 / static_cast<double>(std::max<uint64_t>(1, e.duration));
    case CombineSelect::InverseSpeed:
      return static_cast<double>(e.duration);
    case CombineSelect::Length:
      return 1.0 / static_cast<double>(std::max<size_t>(1, e.length()));
    case CombineSelect::InverseLength:
      return static_cast<double>(std::max<size_t>(1, e.length()));
    case CombineSelect::Random:
      return 1.0;
  }
  return 1.0;
}

std::vector<uint8_t> combine(const SeedEntry& seed,
                             const MutationChoice& choice,
                             MutationContext& ctx, Rng& rng) {
  std::vector<uint8_t> out = seed.bytes;
  if (!ctx.pool || ctx.pool->empty() || out.empty()) return out;
  const auto& pool = *ctx.pool;

  std::vector<const SeedEntry*> parents;
  parents.push_back(&seed);
  double total = 0;
  for (size_t i = 0; i < pool.size(); ++i) {
    total += combiner_weight(pool.at(i), choice.combiner_select);
  }
  for (int i = 1; i < choice.combiner_number && total > 0; ++i) {
    double u = rng.unit() * total;
    const SeedEntry* chosen = &pool.at(pool.size() - 1);
    for (size_t j = 0; j < pool.size(); ++j) {
      const double w = combiner_weight(pool.at(j), choice.combiner_select);
      if (u < w) {
        chosen = &pool.at(j);
        break;
      }
      u -= w;
    }
    parents.push_back(chosen);
  }

  // Cut points; each segment takes bytes from one parent at the same offsets.
  std::vector<size_t> cuts;
  const size_t segments = parents.size();
  for (size_t i = 0; i + 1 < segments; ++i) {
    if (choice.combiner_mode == CombineMode::Learn && ctx.history &&
        !ctx.history->divisors.empty()) {
      cuts.push_back(draw_position(out, CrMode::Learn, ctx.history, rng));
    } else {
      cuts.push_back(static_cast<size_t>(rng.below(out.size())));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(out.size());

  size_t from = 0;
  std::vector<size_t> order = {0};
  for (size_t i = 1; i < segments; ++i) order.push_back(i);
  rng.shuffle(order);
  for (size_t s = 0; s < cuts.size(); ++s) {
    const SeedEntry* parent = parents[order[s % order.size()]];
    for (size_t p = from; p < cuts[s]; ++p) {
      if (p < parent->bytes.size()) out[p] = parent->bytes[p];
    }
    from = cuts[s];
  }
  return out;
}

const DependencyVector* target_deps(const MutationContext& ctx) {
  if (!ctx.taint || !ctx.target) return nullptr;
  auto it = ctx.taint->deps.find(ctx.target->key);
  if (it == ctx.taint->deps.end() || it->second.count() == 0) return nullptr;
  return &it->second;
}

std::vector<uint8_t> mutate_dependent_bytes(const SeedEntry& seed,
                                            const MutationChoice& choice,
                                            MutationContext& ctx, Rng& rng,
                                            bool all_bytes, bool* noop) {
  const DependencyVector* deps = target_deps(ctx);
  if (!deps) {
    *noop = true;
    return seed.bytes;
  }
  std::vector<uint8_t> out = seed.bytes;
  const auto offsets = deps->offsets();
  if (all_bytes) {
    for (uint32_t p : offsets) {
      if (p < out.size()) out[p] = rng.byte();
    }
    return out;
  }
  const size_t want = std::min<size_t>(offsets.size(),
                                       static_cast<size_t>(choice.mb_number));
  // Draw `want` distinct dependent offsets, optionally biased by past use.
  std::vector<uint32_t> chosen;
  std::vector<uint32_t> candidates = offsets;
  for (size_t i = 0; i < want && !candidates.empty(); ++i) {
    size_t idx;
    if (choice.mb_bias && ctx.history) {
      double total = 0;
      for (uint32_t p : candidates) total += ctx.history->byte_weight(p);
      double u = rng.unit() * total;
      idx = candidates.size() - 1;
      for (size_t j = 0; j < candidates.size(); ++j) {
        const double w = ctx.history->byte_weight(candidates[j]);
        if (u < w) {
          idx = j;
          break;
        }
        u -= w;
      }
    } else {
      idx = static_cast<size_t>(rng.below(candidates.size()));
    }
    chosen.push_back(candidates[idx]);
    candidates.erase(candidates.begin() + static_cast<ptrdiff_t>(idx));
  }
  for (uint32_t p : chosen) {
    if (p < out.size()) out[p] = rng.byte();
  }
  return out;
}

}  // namespace

std::vector<uint8_t> mingle(std::span<const uint8_t> seed,
                            const MutationHistory& history, int count,
                            Rng& rng, bool* noop) {
  if (noop) *noop = false;
  std::vector<uint8_t> out(seed.begin(), seed.end());
  if (history.archive.empty()) {
    if (noop) *noop = true;
    return out;
  }
  const size_t take =
      std::min<size_t>(static_cast<size_t>(std::max(0, count)),
                       history.archive.size());
  std::vector<size_t> order(history.archive.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (size_t i = 0; i < take; ++i) {
    const auto& sol = history.archive[order[i]];
    if (sol.offset >= out.size()) continue;  // outside seed bounds
    const size_t n = std::min(sol.bytes.size(), out.size() - sol.offset);
    std::copy_n(sol.bytes.begin(), n, out.begin() + sol.offset);
  }
  return out;
}

MutationOutcome mutate(const SeedEntry& seed, const MutationChoice& choice,
                       MutationContext& ctx, Rng& rng) {
  if (is_dataflow(choice.strategy) && !ctx.taint) {
    throw std::invalid_argument(
        "data-flow mutation requires taint context for the seed");
  }
  MutationOutcome out;
  switch (choice.strategy) {
    case Strategy::MutateRandBytes:
      out.bytes = mutate_rand_bytes(seed, choice, ctx, rng);
      break;
    case Strategy::CopyRemove:
      out.bytes = copy_remove(seed, choice, ctx, rng);
      break;
    case Strategy::Combiner:
      out.bytes = combine(seed, choice, ctx, rng);
      break;
    case Strategy::MutateBytes:
      out.bytes = mutate_dependent_bytes(seed, choice, ctx, rng,
                                         /*all_bytes=*/false, &out.noop);
      break;
    case Strategy::InvertBranches:
      out.bytes = mutate_dependent_bytes(seed, choice, ctx, rng,
                                         /*all_bytes=*/true, &out.noop);
      break;
    case Strategy::InvertBranchesGa: {
      const DependencyVector* deps = target_deps(ctx);
      if (!deps || !ctx.seed_trace || !ctx.target || !ctx.program) {
        out.noop = true;
        out.bytes = seed.bytes;
        break;
      }
      const size_t pos = ctx.target->trace_pos;
      const bool want = !(*ctx.seed_trace)[pos].taken;
      GaInvertOutcome ga = ga_invert_branch(
          *ctx.program, seed.bytes, *ctx.seed_trace, pos, want, *deps,
          ctx.ga_generations, ctx.ga_population, rng);
      if (ctx.executions) *ctx.executions += ga.executions;
      if (ga.success) {
        out.bytes = std::move(ga.bytes);
        out.inverted = true;
      } else {
        out.noop = true;
        out.bytes = seed.bytes;
      }
      break;
    }
    case Strategy::SystemSolver: {
      const DependencyVector* deps = target_deps(ctx);
      if (!deps || !ctx.seed_trace || !ctx.target || !ctx.dcm) {
        out.noop = true;
        out.bytes = seed.bytes;
        break;
      }
      const auto bytes = deps->offsets();
      ConstraintSystem sys =
          build_system(*ctx.seed_trace, ctx.target->key, bytes, *ctx.dcm,
                       choice.solver_mode);
      if (!sys.satisfiable || sys.groups.empty()) {
        out.noop = true;
        out.bytes = seed.bytes;
        break;
      }
      out.bytes = sample_solution(sys, seed.bytes, rng);
      break;
    }
    case Strategy::Mingler:
      if (!ctx.history) {
        out.noop = true;
        out.bytes = seed.bytes;
      } else {
        out.bytes = mingle(seed.bytes, *ctx.history, choice.mingler_number,
                           rng, &out.noop);
      }
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// GA position search
// ---------------------------------------------------------------------------

namespace {

struct PositionIndividual {
  std::vector<uint32_t> offsets;  // sorted, distinct
  size_t fitness = 0;
};

size_t affected_branches(const TargetProgram& program,
                         std::span<const uint8_t> seed,
                         const ExecutionResult& seed_run,
                         std::span<const uint32_t> offsets, Rng& rng,
                         uint64_t* executions) {
  std::vector<uint8_t> input(seed.begin(), seed.end());
  for (uint32_t p : offsets) {
    if (p < input.size()) input[p] = static_cast<uint8_t>(seed[p] ^ rng.nonzero_byte());
  }
  ExecutionResult res;
  execute_into(program, input, ExecMode::Forced, &seed_run.trace, res);
  if (executions) ++*executions;
  size_t affected = 0;
  const size_t observed = std::min(res.trace.size(), seed_run.trace.size());
  for (size_t k = 0; k < observed; ++k) {
    if (res.trace[k].lhs_value != seed_run.trace[k].lhs_value ||
        res.trace[k].rhs_value != seed_run.trace[k].rhs_value) {
      ++affected;
    }
  }
  return affected;
}

std::vector<uint32_t> random_offsets(size_t n, int k, Rng& rng) {
  std::vector<uint32_t> out;
  while (out.size() < static_cast<size_t>(k) && out.size() < n) {
    const uint32_t p = static_cast<uint32_t>(rng.below(n));
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<uint32_t> ga_positions(const TargetProgram& program,
                                   std::span<const uint8_t> seed, int k,
                                   int generations, int population, Rng& rng,
                                   uint64_t* executions) {
  if (k < 1) throw std::invalid_argument("ga_positions: k must be >= 1");
  if (population < 2) population = 2;
  const size_t n = seed.size();
  const ExecutionResult seed_run =
      execute(program, seed, ExecMode::Record, nullptr);
  if (executions) ++*executions;

  std::vector<PositionIndividual> pop(population);
  for (auto& ind : pop) {
    ind.offsets = random_offsets(n, k, rng);
    ind.fitness = affected_branches(program, seed, seed_run, ind.offsets, rng,
                                    executions);
  }

  auto best_of = [&]() {
    size_t best = 0;
    for (size_t i = 1; i < pop.size(); ++i) {
      if (pop[i].fitness > pop[best].fitness) best = i;
    }
    return best;
  };

  constexpr int kTournament = 4;
  for (int gen = 0; gen < generations; ++gen) {
    std::vector<PositionIndividual> next;
    next.push_back(pop[best_of()]);  // elitism
    while (next.size() < pop.size()) {
      auto tournament = [&]() -> const PositionIndividual& {
        size_t best = rng.below(pop.size());
        for (int t = 1; t < kTournament; ++t) {
          const size_t c = rng.below(pop.size());
          if (pop[c].fitness > pop[best].fitness) best = c;
        }
        return pop[best];
      };
      const auto& a = tournament();
      const auto& b = tournament();
      PositionIndividual child;
      // Uniform crossover over the union, refilled to k distinct offsets.
      std::vector<uint32_t> mixed;
      for (uint32_t p : a.offsets) {
        if (rng.coin()) mixed.push_back(p);
      }
      for (uint32_t p : b.offsets) {
        if (rng.coin() && std::find(mixed.begin(), mixed.end(), p) == mixed.end()) {
          mixed.push_back(p);
        }
      }
      while (mixed.size() > static_cast<size_t>(k)) {
        mixed.erase(mixed.begin() + static_cast<ptrdiff_t>(rng.below(mixed.size())));
      }
      while (mixed.size() < static_cast<size_t>(k) && mixed.size() < n) {
        const uint32_t p = static_cast<uint32_t>(rng.below(n));
        if (std::find(mixed.begin(), mixed.end(), p) == mixed.end()) {
          mixed.push_back(p);
        }
      }
      // Point mutation at rate 1/k.
      for (auto& p : mixed) {
        if (rng.below(static_cast<uint64_t>(std::max(1, k))) == 0) {
          const uint32_t np = static_cast<uint32_t>(rng.below(n));
          if (std::find(mixed.begin(), mixed.end(), np) == mixed.end()) p = np;
        }
      }
      std::sort(mixed.begin(), mixed.end());
      child.offsets = std::move(mixed);
      child.fitness = affected_branches(program, seed, seed_run, child.offsets,
                                        rng, executions);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
  }
  return pop[best_of()].offsets;
}

// ---------------------------------------------------------------------------
// GA branch inversion
// ---------------------------------------------------------------------------

GaInvertOutcome ga_invert_branch(const TargetProgram& program,
                                 std::span<const uint8_t> seed,
                                 const std::vector<BranchRecord>& seed_trace,
                                 size_t trace_pos, bool want_taken,
                                 const DependencyVector& deps, int generations,
                                 int population, Rng& rng) {
  if (trace_pos >= seed_trace.size()) {
    throw std::invalid_argument("ga_invert_branch: trace position out of range");
  }
  const auto offsets = deps.offsets();
  if (offsets.empty()) {
    throw std::invalid_argument("ga_invert_branch: branch has empty taint");
  }
  if (population < 2) population = 2;

  GaInvertOutcome out;
  const CmpOp op = seed_trace[trace_pos].op;

  struct Individual {
    std::vector<uint8_t> values;  // one per dependent offset
    uint64_t distance = ~uint64_t{0};
  };

  std::vector<uint8_t> input(seed.begin(), seed.end());
  auto evaluate = [&](const std::vector<uint8_t>& values) -> uint64_t {
    for (size_t i = 0; i < offsets.size(); ++i) {
      if (offsets[i] < input.size()) input[offsets[i]] = values[i];
    }
    ExecutionResult res;
    execute_into(program, input, ExecMode::Forced, &seed_trace, res);
    ++out.executions;
    for (size_t i = 0; i < offsets.size(); ++i) {
      if (offsets[i] < input.size()) input[offsets[i]] = seed[offsets[i]];
    }
    if (trace_pos >= res.trace.size()) return ~uint64_t{0};
    return inversion_distance(op, want_taken, res.trace[trace_pos].lhs_value,
                              res.trace[trace_pos].rhs_value);
  };

  auto materialize = [&](const std::vector<uint8_t>& values) {
    std::vector<uint8_t> bytes(seed.begin(), seed.end());
    for (size_t i = 0; i < offsets.size(); ++i) {
      if (offsets[i] < bytes.size()) bytes[offsets[i]] = values[i];
    }
    return bytes;
  };

  // The unmutated seed goes in first: a branch already at the desired edge
  // succeeds immediately with zero mutations.
  std::vector<Individual> pop;
  pop.reserve(population);
  {
    Individual base;
    for (uint32_t p : offsets) {
      base.values.push_back(p < seed.size() ? seed[p] : 0);
    }
    base.distance = evaluate(base.values);
    if (base.distance == 0) {
      out.success = true;
      out.best_distance = 0;
      out.bytes = materialize(base.values);
      out.distance_trace.push_back(0);
      return out;
    }
    pop.push_back(std::move(base));
  }
  while (pop.size() < static_cast<size_t>(population)) {
    Individual ind;
    for (size_t i = 0; i < offsets.size(); ++i) ind.values.push_back(rng.byte());
    ind.distance = evaluate(ind.values);
    if (ind.distance == 0) {
      out.success = true;
      out.best_distance = 0;
      out.bytes = materialize(ind.values);
      out.distance_trace.push_back(0);
      return out;
    }
    pop.push_back(std::move(ind));
  }

  auto best_of = [&]() {
    size_t best = 0;
    for (size_t i = 1; i < pop.size(); ++i) {
      if (pop[i].distance < pop[best].distance) best = i;
    }
    return best;
  };

  constexpr int kTournament = 4;
  for (int gen = 0; gen < generations; ++gen) {
    std::vector<Individual> next;
    next.push_back(pop[best_of()]);  // elitism
    while (next.size() < pop.size()) {
      auto tournament = [&]() -> const Individual& {
        size_t best = rng.below(pop.size());
        for (int t = 1; t < kTournament; ++t) {
          const size_t c = rng.below(pop.size());
          if (pop[c].distance < pop[best].distance) best = c;
        }
        return pop[best];
      };
      const auto& a = tournament();
      const auto& b = tournament();
      Individual child;
      child.values.resize(offsets.size());
      for (size_t i = 0; i < offsets.size(); ++i) {
        child.values[i] = rng.coin() ? a.values[i] : b.values[i];
      }
      // Mutate roughly one byte per child: either a fresh value or an
      // arithmetic step, which descends smooth distance landscapes.
      const size_t rate = std::max<size_t>(1, offsets.size());
      for (size_t i = 0; i < offsets.size(); ++i) {
        if (rng.below(rate) != 0) continue;
        if (rng.coin()) {
          child.values[i] = rng.byte();
        } else {
          const uint8_t step = static_cast<uint8_t>(1u << rng.below(4));
          child.values[i] = static_cast<uint8_t>(
              rng.coin() ? child.values[i] + step : child.values[i] - step);
        }
      }
      child.distance = evaluate(child.values);
      if (child.distance == 0) {
        out.success = true;
        out.best_distance = 0;
        out.bytes = materialize(child.values);
        out.distance_trace.push_back(0);
        return out;
      }
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    out.distance_trace.push_back(pop[best_of()].distance);
  }

  out.best_distance = pop[best_of()].distance;
  out.success = false;
  return out;
}

}  // namespace gbf
