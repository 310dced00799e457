#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deckard/awm.hpp"
#include "deckard/policy.hpp"
#include "deckard/rng.hpp"
#include "deckard/tech_tree.hpp"

namespace deckard {

enum class Mode { OpenEnded, Goal };

struct AgentConfig {
  Mode mode = Mode::OpenEnded;
  std::optional<ItemId> goal;
  // A frontier node stays preferred while sampled at most c0 times.
  int c0 = 10;
  long long max_iterations = 1000;
  LearnerConfig learner;
  StepBudget budget;
  int retry_cap = 10;
  // Undirected exploration gathers a random bundle of verified items, each
  // included with probability 1/2 and with quantity uniform in [1, this].
  int explore_max_quantity = 8;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static AgentConfig from_json(std::string_view text);
  bool operator==(const AgentConfig&) const = default;
};

struct IterationRecord {
  long long iteration = 0;
  ItemId sampled_target;
  std::size_t branch_length = 0;
  bool fallback = false;
  bool success = false;
  std::optional<ItemId> newly_verified;
  long long env_steps = 0;
  long long cumulative_steps = 0;
  std::size_t verified = 0;
  std::size_t frontier = 0;  // |F| when the branch was sampled
  std::size_t graph = 0;

  bool operator==(const IterationRecord&) const = default;
};

struct DreamResult {
  Branch branch;
  bool fallback = false;
  std::size_t frontier_size = 0;
};

struct AgentState {
  Awm awm;
  std::map<ItemId, long long> counts;
  PolicyBank bank;
  Inventory inventory;
  Rng rng;
  long long total_env_steps = 0;
  long long iteration = 0;
  long long fallback_iterations = 0;
};

class Agent {
 public:
  Agent(std::shared_ptr<const TechTree> tree, Awm initial, AgentConfig config);

  // True once the goal (goal mode) or every node (open-ended) is verified,
  // or max_iterations is reached.
  bool finished() const;
  std::optional<IterationRecord> step();
  std::vector<IterationRecord> run_to_completion();

  DreamResult dream();
  IterationRecord wake(const DreamResult& dreamed);

  const AgentState& state() const { return state_; }
  const AgentConfig& config() const { return config_; }
  const TechTree& tree() const { return *tree_; }
  void set_observer(SubgoalObserver observer) { state_.bank.set_observer(std::move(observer)); }

  std::string checkpoint() const;
  static Agent restore(std::shared_ptr<const TechTree> tree, std::string_view checkpoint);

 private:
  bool obtain_unverified(const ItemId& item, long long& steps);
  std::optional<ItemId> explore(long long& steps);
  void record_verification(const ItemId& item);

  std::shared_ptr<const TechTree> tree_;
  AgentConfig config_;
  AgentState state_;
};

std::vector<IterationRecord> run(const AgentConfig& config, std::shared_ptr<const TechTree> tree,
                                 const Awm& initial_awm);

}  // namespace deckard
