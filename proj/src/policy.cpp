#include "deckard/policy.hpp"

#include <cmath>

#include "deckard/errors.hpp"

namespace deckard {

void LearnerConfig::validate() const {
  require_arg(0.0 <= p0 && p0 <= p_max && p_max <= 1.0, "learner requires 0 <= p0 <= p_max <= 1");
  require_arg(tau > 0.0, "learner tau must be positive");
}

double LearnerConfig::success_probability(long long attempts) const {
  const double k = static_cast<double>(attempts);
  return p0 + (p_max - p0) * (1.0 - std::exp(-k / tau));
}

PolicyBank::PolicyBank(LearnerConfig config) : config_(config) { config_.validate(); }

PolicyState& PolicyBank::ensure_policy(const ItemId& item) {
  auto [it, created] = policies_.try_emplace(item);
  if (created) {
    it->second.item = item;
    creation_order_.push_back(item);
  }
  return it->second;
}

const PolicyState* PolicyBank::find(const ItemId& item) const {
  auto it = policies_.find(item);
  return it == policies_.end() ? nullptr : &it->second;
}

long long PolicyBank::total_steps() const {
  long long total = craft_steps_;
  for (const auto& [id, p] : policies_) total += p.steps_spent;
  return total;
}

void PolicyBank::restore(std::map<ItemId, PolicyState> policies, std::vector<ItemId> order,
                         long long craft_steps) {
  policies_ = std::move(policies);
  creation_order_ = std::move(order);
  craft_steps_ = craft_steps;
}

Outcome execute_subgoal(PolicyBank& bank, const TechTree& tree, const ItemId& item, Action action,
                        Inventory& inventory, Rng& rng, const StepBudget& budget) {
  const bool known = tree.contains(item);
  Inventory before;
  if (bank.observer()) before = inventory;
  Outcome out;
  if (action == Action::Collect) {
    PolicyState& policy = bank.ensure_policy(item);
    if (known && tree.item(item).collectable) {
      out = tree.attempt_collect(item, inventory,
                                 bank.config().success_probability(policy.attempts), rng, budget);
    } else {
      out = {false, budget.collect_steps};
    }
    ++policy.attempts;
    policy.successes += out.success ? 1 : 0;
    policy.steps_spent += out.steps;
  } else {
    if (known && !tree.item(item).collectable) {
      out = tree.attempt_craft(item, inventory, budget);
    } else {
      out = {false, budget.craft_steps};
    }
    bank.charge_craft(out.steps);
  }
  if (bank.observer()) bank.observer()(SubgoalEvent{item, action, before, inventory, out});
  return out;
}

Outcome acquire(PolicyBank& bank, const TechTree& tree, const ItemId& item, Action action,
                int quantity, Inventory& inventory, Rng& rng, int retry_cap,
                const StepBudget& budget) {
  require_arg(quantity >= 1, "acquire quantity must be at least 1");
  require_arg(retry_cap >= 1, "retry_cap must be at least 1");
  Outcome total{true, 0};
  int consecutive_failures = 0;
  while (inventory.count(item) < quantity) {
    Outcome o = execute_subgoal(bank, tree, item, action, inventory, rng, budget);
    total.steps += o.steps;
    if (o.success) {
      consecutive_failures = 0;
      continue;
    }
    if (action == Action::Craft || ++consecutive_failures >= retry_cap) {
      total.success = false;
      break;
    }
  }
  return total;
}

}  // namespace deckard
