#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gbf {

// Campaign configuration. File format: one `key = value` pair per line,
// '#' comments; CLI flags override file values.
struct CampaignConfig {
  // Target program: builtin name, file path, or inline source (tests).
  std::string program_name;
  std::string program_path;
  std::string program_source;

  // Budgets.
  uint64_t max_iterations = 1000;
  uint64_t max_executions = 0;  // 0 = unlimited
  int inner_budget = 64;        // mutations per iteration

  // Coverage.
  int map_bits = 16;
  int label_count = 4;           // m labels per block
  uint64_t switch_period = 10000;  // iterations between label switches; 0 = off
  uint64_t flush_period = 5000;    // iterations between flush starts; 0 = off
  uint64_t flush_window = 1000;    // flush length in iterations
  uint64_t switch_rebuild_cap = 4096;  // max seeds re-executed per switch

  // Taint.
  int taint_repeats = 2;
  int fti_threshold = 64;  // inputs shorter than this use FTI
  int fti_values_per_byte = 1;

  // Genetic algorithms.
  int ga_generations = 8;
  int ga_population = 32;

  // Bandits.
  double bandit_gamma = 0.99;
  double bandit_c = 1.4142135623730951;
  double bandit_xi = 1.0;

  // Reproducibility and IO.
  uint64_t rng_seed = 1;
  std::string stats_path;
  std::string timeline_path;
  std::string corpus_out;
  std::string corpus_in;
  std::vector<std::string> seed_files;
};

// Applies one key=value pair; throws std::invalid_argument on unknown keys
// or malformed values.
void apply_config_entry(CampaignConfig& cfg, const std::string& key,
                        const std::string& value);

CampaignConfig parse_config_file(const std::string& path);

// Canonical key=value rendering of every setting.
std::string config_to_string(const CampaignConfig& cfg);

}  // namespace gbf
