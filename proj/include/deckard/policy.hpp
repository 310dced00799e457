#pragma once

#include <functional>
#include <map>
#include <vector>

#include "deckard/awm.hpp"
#include "deckard/tech_tree.hpp"

namespace deckard {

// Learning curve p(k) = p0 + (p_max - p0) * (1 - exp(-k / tau)) over the
// number of collect attempts k a policy has practiced.
struct LearnerConfig {
  double p0 = 0.2;
  double p_max = 0.95;
  double tau = 3.0;

  void validate() const;
  double success_probability(long long attempts) const;
  bool operator==(const LearnerConfig&) const = default;
};

struct PolicyState {
  ItemId item;
  long long attempts = 0;
  long long successes = 0;
  long long steps_spent = 0;

  bool operator==(const PolicyState&) const = default;
};

// Snapshot passed to an observer around every executed subgoal.
struct SubgoalEvent {
  ItemId item;
  Action action;
  const Inventory& before;
  const Inventory& after;
  Outcome outcome;
};
using SubgoalObserver = std::function<void(const SubgoalEvent&)>;

// Collect-subgoal learners, created lazily on first use. Craft subgoals are a
// single deterministic action and need no learner.
class PolicyBank {
 public:
  explicit PolicyBank(LearnerConfig config = {});

  PolicyState& ensure_policy(const ItemId& item);
  const PolicyState* find(const ItemId& item) const;
  bool has_policy(const ItemId& item) const { return policies_.count(item) != 0; }

  std::size_t size() const { return policies_.size(); }
  const std::map<ItemId, PolicyState>& policies() const { return policies_; }
  const std::vector<ItemId>& creation_order() const { return creation_order_; }
  const LearnerConfig& config() const { return config_; }

  // Steps charged to collect policies plus craft actions.
  long long total_steps() const;
  long long craft_steps() const { return craft_steps_; }
  void charge_craft(long long steps) { craft_steps_ += steps; }

  void set_observer(SubgoalObserver observer) { observer_ = std::move(observer); }
  const SubgoalObserver& observer() const { return observer_; }

  // Used when restoring a checkpoint.
  void restore(std::map<ItemId, PolicyState> policies, std::vector<ItemId> order,
               long long craft_steps);

 private:
  LearnerConfig config_;
  std::map<ItemId, PolicyState> policies_;
  std::vector<ItemId> creation_order_;
  long long craft_steps_ = 0;
  SubgoalObserver observer_;
};

// One subgoal attempt. Collect draws with p(attempts) and then counts the
// attempt; craft is the deterministic check. Trying to collect something the
// world does not offer (a craft-only or nonexistent item) is a failed
// episode with full collect cost; crafting a collectable fails at craft cost.
Outcome execute_subgoal(PolicyBank& bank, const TechTree& tree, const ItemId& item, Action action,
                        Inventory& inventory, Rng& rng, const StepBudget& budget = {});

// Repeats execute_subgoal until `quantity` of the item is held. Collect gives
// up after `retry_cap` consecutive failures; a failed craft stops at once.
Outcome acquire(PolicyBank& bank, const TechTree& tree, const ItemId& item, Action action,
                int quantity, Inventory& inventory, Rng& rng, int retry_cap,
                const StepBudget& budget = {});

}  // namespace deckard
