#include "gbfuzz/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gbf {

namespace {

uint64_t to_u64(const std::string& v) {
  size_t pos = 0;
  const uint64_t out = std::stoull(v, &pos, 0);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

int to_int(const std::string& v) { return static_cast<int>(to_u64(v)); }

double to_double(const std::string& v) {
  size_t pos = 0;
  const double out = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_entry(CampaignConfig& cfg, const std::string& key,
                        const std::string& value) {
  try {
    if (key == "program") cfg.program_name = value;
    else if (key == "program_path") cfg.program_path = value;
    else if (key == "max_iterations") cfg.max_iterations = to_u64(value);
    else if (key == "max_executions") cfg.max_executions = to_u64(value);
    else if (key == "inner_budget") cfg.inner_budget = to_int(value);
    else if (key == "map_bits") cfg.map_bits = to_int(value);
    else if (key == "label_count") cfg.label_count = to_int(value);
    else if (key == "switch_period") cfg.switch_period = to_u64(value);
    else if (key == "flush_period") cfg.flush_period = to_u64(value);
    else if (key == "flush_window") cfg.flush_window = to_u64(value);
    else if (key == "switch_rebuild_cap") cfg.switch_rebuild_cap = to_u64(value);
    else if (key == "taint_repeats") cfg.taint_repeats = to_int(value);
    else if (key == "fti_threshold") cfg.fti_threshold = to_int(value);
    else if (key == "fti_values_per_byte") cfg.fti_values_per_byte = to_int(value);
    else if (key == "ga_generations") cfg.ga_generations = to_int(value);
    else if (key == "ga_population") cfg.ga_population = to_int(value);
    else if (key == "bandit_gamma") cfg.bandit_gamma = to_double(value);
    else if (key == "bandit_c") cfg.bandit_c = to_double(value);
    else if (key == "bandit_xi") cfg.bandit_xi = to_double(value);
    else if (key == "rng_seed") cfg.rng_seed = to_u64(value);
    else if (key == "stats_out") cfg.stats_path = value;
    else if (key == "timeline_out") cfg.timeline_path = value;
    else if (key == "corpus_out") cfg.corpus_out = value;
    else if (key == "corpus_in") cfg.corpus_in = value;
    else if (key == "seed_file") cfg.seed_files.push_back(value);
    else throw std::invalid_argument("unknown config key: " + key);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for config key " + key + ": " + value);
  }
}

CampaignConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  CampaignConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string config_to_string(const CampaignConfig& cfg) {
  std::ostringstream out;
  out << "program = " << cfg.program_name << "\n";
  out << "program_path = " << cfg.program_path << "\n";
  out << "max_iterations = " << cfg.max_iterations << "\n";
  out << "max_executions = " << cfg.max_executions << "\n";
  out << "inner_budget = " << cfg.inner_budget << "\n";
  out << "map_bits = " << cfg.map_bits << "\n";
  out << "label_count = " << cfg.label_count << "\n";
  out << "switch_period = " << cfg.switch_period << "\n";
  out << "flush_period = " << cfg.flush_period << "\n";
  out << "flush_window = " << cfg.flush_window << "\n";
  out << "switch_rebuild_cap = " << cfg.switch_rebuild_cap << "\n";
  out << "taint_repeats = " << cfg.taint_repeats << "\n";
  out << "fti_threshold = " << cfg.fti_threshold << "\n";
  out << "fti_values_per_byte = " << cfg.fti_values_per_byte << "\n";
  out << "ga_generations = " << cfg.ga_generations << "\n";
  out << "ga_population = " << cfg.ga_population << "\n";
  out << "bandit_gamma = " << cfg.bandit_gamma << "\n";
  out << "bandit_c = " << cfg.bandit_c << "\n";
  out << "bandit_xi = " << cfg.bandit_xi << "\n";
  out << "rng_seed = " << cfg.rng_seed << "\n";
  for (const auto& f : cfg.seed_files) out << "seed_file = " << f << "\n";
  return out.str();
}

}  // namespace gbf
