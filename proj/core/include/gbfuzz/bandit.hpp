#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbfuzz/rng.hpp"

namespace gbf {

// The fuzzer's decision points, one multi-armed bandit each. Every selection
// is treated as an independent problem; there is no conditioning across
// levels.
enum class DecisionId {
  SeedClass,
  SeedCriterion,
  FuzzerStrategy,
  VanillaMutation,
  DataflowMutation,
  MrbType,
  MrbGaByteCount,
  MrbSimpleBias,
  CopyRemoveNumber,
  CopyRemoveMode,
  CombinerNumber,
  CombinerSelect,
  CombinerMode,
  MutateBytesNumber,
  MutateBytesBias,
  SystemSolverType,
  MinglerNumber,
};
inline constexpr int kDecisionCount = 17;

const char* to_string(DecisionId id);

// Discounted UCB over one decision point. Updates multiply every arm's
// reward sum and pull count by gamma before crediting the pulled arm, so old
// observations fade and the policy tracks non-stationary rewards.
class BanditNode {
 public:
  BanditNode() = default;
  BanditNode(DecisionId id, std::vector<std::string> arm_names,
             double gamma = 0.99, double c = 1.4142135623730951,
             double xi = 1.0);

  DecisionId id() const { return id_; }
  size_t arm_count() const { return names_.size(); }
  const std::string& arm_name(size_t i) const { return names_[i]; }

  // Unpulled arms first (in index order), then the discounted-UCB argmax;
  // score ties break uniformly at random.
  size_t select(Rng& rng) const;

  void update(size_t arm, double reward);

  double mean(size_t arm) const;
  double discounted_count(size_t arm) const { return arms_[arm].count; }
  double discounted_total() const;
  uint64_t total_pulls() const { return total_pulls_; }
  double gamma() const { return gamma_; }

 private:
  struct Arm {
    double reward = 0;
    double count = 0;
  };
  DecisionId id_ = DecisionId::SeedClass;
  std::vector<std::string> names_;
  std::vector<Arm> arms_;
  double gamma_ = 0.99;
  double c_ = 1.4142135623730951;
  double xi_ = 1.0;
  uint64_t total_pulls_ = 0;
};

// All 17 decision nodes with their full variation catalogues.
std::vector<BanditNode> make_decision_nodes(double gamma, double c, double xi);

// Coverage-per-time reward squashed to [0,1] by a running maximum rate.
// Zero gain always maps to zero reward.
struct RewardNormalizer {
  double max_rate = 0.0;

  double value(uint64_t coverage_gain, uint64_t elapsed) {
    if (coverage_gain == 0) return 0.0;
    const double rate = static_cast<double>(coverage_gain) /
                        static_cast<double>(elapsed == 0 ? 1 : elapsed);
    if (rate > max_rate) max_rate = rate;
    return rate / max_rate;
  }
};

}  // namespace gbf
