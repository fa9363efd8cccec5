// gbfuzz command-line front end: run fuzzing campaigns against the embedded
// target VM, inspect taint reports, solve interval systems and analyze the
// multi-label collision math.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gbfuzz/campaign.hpp"
#include "gbfuzz/config.hpp"
#include "gbfuzz/corpus.hpp"
#include "gbfuzz/coverage.hpp"
#include "gbfuzz/intervals.hpp"
#include "gbfuzz/taint.hpp"

namespace {

gbf::TargetProgram resolve_program(const std::string& spec) {
  if (std::filesystem::exists(spec)) {
    std::ifstream in(spec);
    std::ostringstream text;
    text << in.rdbuf();
    return gbf::parse_program(text.str(), spec);
  }
  return gbf::builtin_program(spec);
}

std::vector<uint8_t> read_seed(const std::string& path, size_t input_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open seed file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() != input_size) {
    std::cerr << "note: seed resized from " << bytes.size() << " to "
              << input_size << " bytes\n";
    bytes.resize(input_size, 0);
  }
  return bytes;
}

struct CampaignCli {
  gbf::CampaignConfig cfg;
  std::string program;
  std::string config_path;
  CLI::App* cmd = nullptr;

  // File first, explicit flags override.
  gbf::CampaignConfig merged() const {
    if (config_path.empty()) return cfg;
    gbf::CampaignConfig base = gbf::parse_config_file(config_path);
    const auto set = [&](const char* name) { return cmd->count(name) > 0; };
    if (set("--seed-file")) base.seed_files = cfg.seed_files;
    if (set("--iterations")) base.max_iterations = cfg.max_iterations;
    if (set("--executions")) base.max_executions = cfg.max_executions;
    if (set("--inner-budget")) base.inner_budget = cfg.inner_budget;
    if (set("--m")) base.label_count = cfg.label_count;
    if (set("--map-bits")) base.map_bits = cfg.map_bits;
    if (set("--switch-period")) base.switch_period = cfg.switch_period;
    if (set("--flush-period")) base.flush_period = cfg.flush_period;
    if (set("--flush-window")) base.flush_window = cfg.flush_window;
    if (set("--taint-repeats")) base.taint_repeats = cfg.taint_repeats;
    if (set("--fti-threshold")) base.fti_threshold = cfg.fti_threshold;
    if (set("--ga-generations")) base.ga_generations = cfg.ga_generations;
    if (set("--ga-population")) base.ga_population = cfg.ga_population;
    if (set("--gamma")) base.bandit_gamma = cfg.bandit_gamma;
    if (set("--c")) base.bandit_c = cfg.bandit_c;
    if (set("--xi")) base.bandit_xi = cfg.bandit_xi;
    if (set("--rng-seed")) base.rng_seed = cfg.rng_seed;
    if (set("--stats-out")) base.stats_path = cfg.stats_path;
    if (set("--timeline-out")) base.timeline_path = cfg.timeline_path;
    if (set("--corpus-out")) base.corpus_out = cfg.corpus_out;
    if (set("--corpus-in")) base.corpus_in = cfg.corpus_in;
    return base;
  }
};

void add_campaign_options(CLI::App* cmd, CampaignCli& cli) {
  cli.cmd = cmd;
  gbf::CampaignConfig& cfg = cli.cfg;
  std::string& program = cli.program;
  cmd->add_option("--program", program, "builtin program name or .gbf path")
      ->required();
  cmd->add_option("--config", cli.config_path,
                  "key=value config file (keys as documented in the README)");
  cmd->add_option("--seed-file", cfg.seed_files, "initial seed file(s)");
  cmd->add_option("--iterations", cfg.max_iterations, "iteration budget");
  cmd->add_option("--executions", cfg.max_executions,
                  "execution budget (0 = unlimited)");
  cmd->add_option("--inner-budget", cfg.inner_budget,
                  "mutations per iteration");
  cmd->add_option("--m", cfg.label_count, "labels per basic block");
  cmd->add_option("--map-bits", cfg.map_bits, "showmap index bits");
  cmd->add_option("--switch-period", cfg.switch_period,
                  "iterations between label switches (0 = off)");
  cmd->add_option("--flush-period", cfg.flush_period,
                  "iterations between coverage flushes (0 = off)");
  cmd->add_option("--flush-window", cfg.flush_window,
                  "flush window length in iterations");
  cmd->add_option("--taint-repeats", cfg.taint_repeats,
                  "permuted group-testing passes");
  cmd->add_option("--fti-threshold", cfg.fti_threshold,
                  "inputs below this size use byte-by-byte inference");
  cmd->add_option("--ga-generations", cfg.ga_generations, "GA generations");
  cmd->add_option("--ga-population", cfg.ga_population, "GA population");
  cmd->add_option("--gamma", cfg.bandit_gamma, "bandit discount factor");
  cmd->add_option("--c", cfg.bandit_c, "bandit exploration constant");
  cmd->add_option("--xi", cfg.bandit_xi, "bandit exploration scale");
  cmd->add_option("--rng-seed", cfg.rng_seed, "deterministic RNG seed");
  cmd->add_option("--stats-out", cfg.stats_path, "JSON-lines stats stream");
  cmd->add_option("--timeline-out", cfg.timeline_path,
                  "iteration,coverage CSV");
  cmd->add_option("--corpus-out", cfg.corpus_out, "write final pool here");
  cmd->add_option("--corpus-in", cfg.corpus_in, "resume from this pool");
}

int run_campaign_command(const CampaignCli& cli, bool baseline) {
  gbf::CampaignConfig cfg = cli.merged();
  const std::string& program = cli.program;
  if (std::filesystem::exists(program)) {
    cfg.program_path = program;
  } else {
    cfg.program_name = program;
  }

  std::ofstream stats_file;
  std::ostream* stats = nullptr;
  if (!cfg.stats_path.empty()) {
    stats_file.open(cfg.stats_path);
    if (!stats_file) {
      std::cerr << "cannot open stats output: " << cfg.stats_path << "\n";
      return 1;
    }
    stats = &stats_file;
  }
  std::ofstream timeline_file;
  std::ostream* timeline = nullptr;
  if (!cfg.timeline_path.empty()) {
    timeline_file.open(cfg.timeline_path);
    if (!timeline_file) {
      std::cerr << "cannot open timeline output: " << cfg.timeline_path << "\n";
      return 1;
    }
    timeline = &timeline_file;
  }

  const gbf::CampaignResult result =
      baseline ? gbf::run_generic_baseline(cfg, stats, timeline)
               : gbf::run_campaign(cfg, stats, timeline);

  nlohmann::json summary;
  summary["iterations"] = result.counters.iterations;
  summary["executions"] = result.counters.executions;
  summary["coverage"] = result.coverage_size;
  summary["pool"] = result.pool_size;
  summary["admissions"] = result.counters.admissions;
  summary["crashes"] = result.counters.crashes;
  summary["crash_found"] = result.crash_found;
  if (result.crash_found) {
    summary["first_crash_site"] = result.first_crash_site;
    summary["first_crash_execution"] = result.first_crash_execution;
  }
  summary["label_switches"] = result.counters.label_switches;
  summary["flushes"] = result.counters.flushes;
  summary["true_edges"] = result.pool_true_edges.size();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_taint(const std::string& program_spec, const std::string& seed_path,
              int repeats, const std::string& engine, int values_per_byte,
              uint64_t rng_seed) {
  const gbf::TargetProgram program = resolve_program(program_spec);
  const auto seed = read_seed(seed_path, program.input_size);
  gbf::Rng rng(rng_seed);

  gbf::TaintReport report;
  if (engine == "fti" ||
      (engine == "auto" && program.input_size < 64)) {
    report = gbf::fti_infer(program, seed, values_per_byte);
  } else {
    report = gbf::infer_taint(program, seed, repeats, rng);
  }

  nlohmann::json out;
  out["program"] = program.name;
  out["engine"] = (engine == "fti" || (engine == "auto" && program.input_size < 64))
                      ? "fti"
                      : "taintfast";
  out["mutated_executions"] = report.mutated_executions;
  nlohmann::json branches = nlohmann::json::object();
  for (const auto& [line, dep] : report.by_branch()) {
    branches[std::to_string(line)] = dep.offsets();
  }
  out["branches"] = branches;
  if (!report.crash_ranges.empty()) {
    auto& ranges = out["crash_ranges"] = nlohmann::json::array();
    for (const auto& r : report.crash_ranges) {
      ranges.push_back({r.lo, r.hi});
    }
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_solve(const std::string& program_spec, const std::string& seed_path,
              uint32_t branch_line, uint32_t occurrence,
              const std::string& mode_name, int samples, uint64_t rng_seed) {
  const gbf::TargetProgram program = resolve_program(program_spec);
  const auto seed = read_seed(seed_path, program.input_size);
  gbf::Rng rng(rng_seed);

  const auto seed_run = gbf::execute(program, seed, gbf::ExecMode::Record);
  const gbf::TaintReport taint = gbf::infer_taint(program, seed, 2, rng);
  const gbf::DirectCopyMap dcm = gbf::detect_direct_copies(program, seed, taint);

  const gbf::BranchKey target{branch_line, occurrence};
  auto dep_it = taint.deps.find(target);
  if (dep_it == taint.deps.end()) {
    std::cerr << "branch " << branch_line << ":" << occurrence
              << " not observed under this seed\n";
    return 1;
  }
  const auto target_bytes = dep_it->second.offsets();
  const gbf::SolverMode mode =
      mode_name == "st-one" ? gbf::SolverMode::StOne : gbf::SolverMode::StAll;
  const gbf::ConstraintSystem sys =
      gbf::build_system(seed_run.trace, target, target_bytes, dcm, mode);
  std::cout << gbf::format_system(sys);
  for (int i = 0; i < samples && sys.satisfiable; ++i) {
    const auto sol = gbf::sample_solution(sys, seed, rng);
    std::cout << "sample";
    for (const auto& gc : sys.groups) {
      uint64_t v = 0;
      for (int b = gc.group.width - 1; b >= 0; --b) {
        v = (v << 8) | sol[gc.group.offset + b];
      }
      std::cout << " x[" << gc.group.offset << ":" << int{gc.group.width}
                << "]=" << v;
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_cov_analyze(int n_bits, int m, uint64_t edges, bool table, int trials,
                    uint64_t rng_seed) {
  if (table) {
    std::printf("m/edges");
    for (uint64_t e = 3000; e <= 10000; e += 1000) {
      std::printf(",%llu", static_cast<unsigned long long>(e));
    }
    std::printf("\n");
    for (int mm = 1; mm <= 5; ++mm) {
      std::printf("%d", mm);
      for (uint64_t e = 3000; e <= 10000; e += 1000) {
        std::printf(",%.3f", gbf::collision_free_probability(n_bits, mm, e));
      }
      std::printf("\n");
    }
    if (trials > 0) {
      gbf::Rng rng(rng_seed);
      std::printf("simulated (%d trials)\n", trials);
      for (int mm = 1; mm <= 5; ++mm) {
        std::printf("%d", mm);
        for (uint64_t e = 3000; e <= 10000; e += 1000) {
          std::printf(",%.3f", gbf::simulate_collisions(n_bits, mm, e, trials, rng));
        }
        std::printf("\n");
      }
    }
    return 0;
  }
  std::printf("%.3f\n", gbf::collision_free_probability(n_bits, m, edges));
  if (trials > 0) {
    gbf::Rng rng(rng_seed);
    std::printf("simulated %.3f\n",
                gbf::simulate_collisions(n_bits, m, edges, trials, rng));
  }
  return 0;
}

int cmd_corpus(const std::string& dump) {
  if (!dump.empty()) {
    for (const auto& e : gbf::builtin_corpus_sources()) {
      if (e.name == dump) {
        std::cout << e.source;
        return 0;
      }
    }
    std::cerr << "unknown builtin program: " << dump << "\n";
    return 1;
  }
  for (const auto& e : gbf::builtin_corpus_sources()) {
    const auto program = gbf::parse_program(e.source, e.name);
    std::cout << e.name << "  (input " << program.input_size << " bytes, "
              << program.branch_sites.size() << " branch sites)  "
              << e.description << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grey-box fuzzing framework with an embedded target VM"};
  app.require_subcommand(1);

  CampaignCli fuzz_cli;
  CLI::App* fuzz = app.add_subcommand("fuzz", "run a full fuzzing campaign");
  add_campaign_options(fuzz, fuzz_cli);

  CampaignCli base_cli;
  CLI::App* baseline = app.add_subcommand(
      "baseline", "run the generic grey-box baseline fuzzer");
  add_campaign_options(baseline, base_cli);

  std::string taint_program, taint_seed, taint_engine = "auto";
  int taint_repeats = 2, taint_vpb = 1;
  uint64_t taint_rng = 1;
  CLI::App* taint = app.add_subcommand("taint", "print a branch taint report");
  taint->add_option("--program", taint_program)->required();
  taint->add_option("--seed", taint_seed)->required();
  taint->add_option("--repeats", taint_repeats);
  taint->add_option("--engine", taint_engine)
      ->check(CLI::IsMember({"auto", "taintfast", "fti"}));
  taint->add_option("--values-per-byte", taint_vpb);
  taint->add_option("--rng-seed", taint_rng);

  std::string solve_program, solve_seed, solve_mode = "st-all";
  uint32_t solve_branch = 0, solve_occurrence = 0;
  int solve_samples = 0;
  uint64_t solve_rng = 1;
  CLI::App* solve =
      app.add_subcommand("solve", "build and print an interval system");
  solve->add_option("--program", solve_program)->required();
  solve->add_option("--seed", solve_seed)->required();
  solve->add_option("--branch", solve_branch, "target branch line")->required();
  solve->add_option("--occurrence", solve_occurrence);
  solve->add_option("--mode", solve_mode)
      ->check(CLI::IsMember({"st-all", "st-one"}));
  solve->add_option("--samples", solve_samples, "print sampled solutions");
  solve->add_option("--rng-seed", solve_rng);

  int cov_nbits = 16, cov_m = 4, cov_trials = 0;
  uint64_t cov_edges = 8000, cov_rng = 1;
  bool cov_table = false;
  CLI::App* cov = app.add_subcommand(
      "cov-analyze", "collision-free probability analysis");
  cov->add_option("--n-bits", cov_nbits);
  cov->add_option("--m", cov_m);
  cov->add_option("--edges", cov_edges);
  cov->add_flag("--table", cov_table, "print the full probability table");
  cov->add_option("--trials", cov_trials, "also run the Monte-Carlo check");
  cov->add_option("--rng-seed", cov_rng);

  std::string corpus_dump;
  CLI::App* corpus = app.add_subcommand("corpus", "list builtin programs");
  corpus->add_option("--dump", corpus_dump, "print one program's source");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fuzz->parsed()) {
      return run_campaign_command(fuzz_cli, false);
    }
    if (baseline->parsed()) {
      return run_campaign_command(base_cli, true);
    }
    if (taint->parsed()) {
      return cmd_taint(taint_program, taint_seed, taint_repeats, taint_engine,
                       taint_vpb, taint_rng);
    }
    if (solve->parsed()) {
      return cmd_solve(solve_program, solve_seed, solve_branch,
                       solve_occurrence, solve_mode, solve_samples, solve_rng);
    }
    if (cov->parsed()) {
      return cmd_cov_analyze(cov_nbits, cov_m, cov_edges, cov_table, cov_trials,
                             cov_rng);
    }
    if (corpus->parsed()) {
      return cmd_corpus(corpus_dump);
    }
  } catch (const gbf::ParseError& e) {
    std::cerr << "program parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
