#include "gbfuzz/bandit.hpp"

#include <cmath>
#include <stdexcept>

namespace gbf {

const char* to_string(DecisionId id) {
  switch (id) {
    case DecisionId::SeedClass: return "Seed_class";
    case DecisionId::SeedCriterion: return "Seed_criterion";
    case DecisionId::FuzzerStrategy: return "Fuzzer_strategy";
    case DecisionId::VanillaMutation: return "Vanilla";
    case DecisionId::DataflowMutation: return "Data-flow";
    case DecisionId::MrbType: return "Mutate-rand-bytes/Type";
    case DecisionId::MrbGaByteCount: return "MRB-GA";
    case DecisionId::MrbSimpleBias: return "MRB-simple";
    case DecisionId::CopyRemoveNumber: return "Copy-remove/Number";
    case DecisionId::CopyRemoveMode: return "Copy-remove/Mode";
    case DecisionId::CombinerNumber: return "Combiner/Number";
    case DecisionId::CombinerSelect: return "Combiner/Select";
    case DecisionId::CombinerMode: return "Combiner/Mode";
    case DecisionId::MutateBytesNumber: return "Mutate-bytes/Number";
    case DecisionId::MutateBytesBias: return "Mutate-bytes/Type";
    case DecisionId::SystemSolverType: return "System-solver/Type";
    case DecisionId::MinglerNumber: return "Mingler/Number";
  }
  return "?";
}

BanditNode::BanditNode(DecisionId id, std::vector<std::string> arm_names,
                       double gamma, double c, double xi)
    : id_(id), names_(std::move(arm_names)), gamma_(gamma), c_(c), xi_(xi) {
  if (names_.empty()) {
    throw std::invalid_argument("BanditNode needs at least one arm");
  }
  if (gamma_ <= 0.0 || gamma_ > 1.0) {
    throw std::invalid_argument("gamma must be in (0,1]");
  }
  arms_.resize(names_.size());
}

size_t BanditNode::select(Rng& rng) const {
  for (size_t i = 0; i < arms_.size(); ++i) {
    if (arms_[i].count == 0.0) return i;
  }
  const double total = discounted_total();
  const double log_total = std::log(std::max(total, 1.0));
  double best = -1.0;
  std::vector<size_t> ties;
  for (size_t i = 0; i < arms_.size(); ++i) {
    const double score = arms_[i].reward / arms_[i].count +
                         c_ * std::sqrt(xi_ * log_total / arms_[i].count);
    if (score > best) {
      best = score;
      ties.assign(1, i);
    } else if (score == best) {
      ties.push_back(i);
    }
  }
  return ties.size() == 1 ? ties[0] : ties[rng.below(ties.size())];
}

void BanditNode::update(size_t arm, double reward) {
  if (arm >= arms_.size()) {
    throw std::invalid_argument("update: arm index out of range");
  }
  for (auto& a : arms_) {
    a.reward *= gamma_;
    a.count *= gamma_;
  }
  arms_[arm].reward += reward;
  arms_[arm].count += 1.0;
  ++total_pulls_;
}

double BanditNode::mean(size_t arm) const {
  const auto& a = arms_[arm];
  return a.count == 0.0 ? 0.0 : a.reward / a.count;
}

double BanditNode::discounted_total() const {
  double t = 0;
  for (const auto& a : arms_) t += a.count;
  return t;
}

std::vector<BanditNode> make_decision_nodes(double gamma, double c, double xi) {
  auto node = [&](DecisionId id, std::vector<std::string> arms) {
    return BanditNode(id, std::move(arms), gamma, c, xi);
  };
  std::vector<BanditNode> nodes;
  nodes.push_back(node(DecisionId::SeedClass,
                       {"SC-fast-edges", "SC-fast-multiple-edges", "SC-all"}));
  nodes.push_back(node(DecisionId::SeedCriterion,
                       {"Count", "Speed", "Length", "Crash", "Cov", "Random"}));
  nodes.push_back(node(DecisionId::FuzzerStrategy, {"Vanilla", "Data-flow"}));
  nodes.push_back(node(DecisionId::VanillaMutation,
                       {"Mutate-rand-bytes", "Copy-remove", "Combiner"}));
  nodes.push_back(node(DecisionId::DataflowMutation,
                       {"Mutate-bytes", "Invert-branches", "Invert-branches-GA",
                        "System-solver", "Mingler"}));
  nodes.push_back(node(DecisionId::MrbType, {"MRB-GA", "MRB-simple"}));
  nodes.push_back(node(DecisionId::MrbGaByteCount,
                       {"1", "2", "4", "8", "16", "32", "64"}));
  nodes.push_back(node(DecisionId::MrbSimpleBias, {"True", "False"}));
  nodes.push_back(node(DecisionId::CopyRemoveNumber,
                       {"1", "2", "4", "8", "16", "32", "64"}));
  nodes.push_back(node(DecisionId::CopyRemoveMode,
                       {"CR-rand", "CR-real", "CR-learn", "CR-prev"}));
  nodes.push_back(node(DecisionId::CombinerNumber,
                       {"2", "3", "4", "5", "6", "7", "8"}));
  nodes.push_back(node(DecisionId::CombinerSelect,
                       {"Speed", "Inverse-speed", "Length", "Inverse-length",
                        "Select-random"}));
  nodes.push_back(node(DecisionId::CombinerMode, {"CM-random", "CM-learn"}));
  nodes.push_back(node(DecisionId::MutateBytesNumber, {"1", "2", "4", "8", "16"}));
  nodes.push_back(node(DecisionId::MutateBytesBias, {"True", "False"}));
  nodes.push_back(node(DecisionId::SystemSolverType, {"ST-all", "ST-one"}));
  nodes.push_back(node(DecisionId::MinglerNumber,
                       {"1", "2", "3", "4", "5", "6"}));
  return nodes;
}

}  // namespace gbf
