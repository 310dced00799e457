#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "deckard/rng.hpp"
#include "deckard/tech_tree.hpp"

namespace deckard::testing {

inline std::string data_path(const std::string& name) { return std::string(DECKARD_TEST_DATA_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline const TechTree& pickaxe16() {
  static const TechTree tree = TechTree::load(data_path("pickaxe16.json"));
  return tree;
}

// Random acyclic tree: every dependency points at an item generated earlier.
// Some trees include crafting_table and furnace as workbenches.
inline TechTree random_tree(Rng& rng, int max_items) {
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_items - 1)));
  std::vector<ItemId> names;
  for (int k = 0; k < n; ++k) {
    names.push_back(std::string(1, static_cast<char>('a' + rng.below(26))) + std::to_string(k));
  }
  if (n >= 3 && rng.bernoulli(0.5)) {
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 2)));
    names[t] = kCraftingTable;
    if (t + 1 < n && rng.bernoulli(0.5)) {
      names[t + 1 + rng.below(static_cast<std::uint64_t>(n - t - 1))] = kFurnace;
    }
  }
  std::map<ItemId, ItemDef> items;
  std::vector<ItemId> earlier, craftables;
  bool have_table = false, have_furnace = false;
  for (int k = 0; k < n; ++k) {
    const ItemId& name = names[k];
    ItemDef d;
    d.id = name;
    const bool workbench = name == kCraftingTable || name == kFurnace;
    d.collectable = k == 0 || (!workbench && rng.bernoulli(0.4));
    if (d.collectable) {
      if (!craftables.empty() && rng.bernoulli(0.3)) d.required_tool = craftables[rng.below(craftables.size())];
    } else {
      std::vector<ItemId> pool = earlier;
      const std::size_t want = 1 + rng.below(std::min<std::size_t>(3, pool.size()));
      for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = rng.below(pool.size());
        d.recipe.push_back({pool[j], 1 + static_cast<int>(rng.below(3))});
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      }
      std::sort(d.recipe.begin(), d.recipe.end());
      d.yield = 1 + static_cast<int>(rng.below(4));
      d.requires_crafting_table = have_table && rng.bernoulli(0.35);
      d.requires_furnace = have_furnace && rng.bernoulli(0.35);
      craftables.push_back(name);
    }
    have_table = have_table || name == kCraftingTable;
    have_furnace = have_furnace || name == kFurnace;
    earlier.push_back(name);
    items[name] = d;
  }
  return TechTree(std::move(items));
}

// Ground-truth prerequisites of `goal` plus the goal itself.
inline std::set<ItemId> closure_of(const TechTree& tree, const ItemId& goal) {
  std::set<ItemId> seen;
  std::function<void(const ItemId&)> walk = [&](const ItemId& x) {
    if (!seen.insert(x).second) return;
    for (const auto& p : tree.ground_truth_parents(x)) walk(p.item);
  };
  walk(goal);
  return seen;
}

// Walks every order in which items of the goal's closure can be learned, one
// per step, each only once all of its prerequisites are learned. Returns the
// fewest and most steps until the goal is learned.
inline std::pair<int, int> oracle_steps_to_goal(const TechTree& tree, const ItemId& goal) {
  const std::set<ItemId> closure = closure_of(tree, goal);
  const std::vector<ItemId> ids(closure.begin(), closure.end());
  std::map<unsigned, std::pair<int, int>> memo;
  std::function<std::pair<int, int>(unsigned)> walk = [&](unsigned known) -> std::pair<int, int> {
    const auto goal_bit = 1u << (std::find(ids.begin(), ids.end(), goal) - ids.begin());
    if (known & goal_bit) return {0, 0};
    if (auto it = memo.find(known); it != memo.end()) return it->second;
    std::pair<int, int> best{1 << 30, -1};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (known & (1u << i)) continue;
      bool ready = true;
      for (const auto& p : tree.ground_truth_parents(ids[i])) {
        const auto j = std::find(ids.begin(), ids.end(), p.item) - ids.begin();
        ready = ready && (known & (1u << j));
      }
      if (!ready) continue;
      const auto sub = walk(known | (1u << i));
      best.first = std::min(best.first, sub.first + 1);
      best.second = std::max(best.second, sub.second + 1);
    }
    return memo[known] = best;
  };
  return walk(0);
}

// Crafting calculator: satisfies each need recursively from leftovers
// first, crafting whole batches otherwise. Held prerequisites are obtained
// once. Returns collect counts and craft counts per item.
inline std::map<ItemId, int> oracle_actions(const TechTree& tree, const ItemId& target) {
  std::map<ItemId, int> actions, leftover;
  std::set<ItemId> held;
  std::function<void(const ItemId&, int)> need = [&](const ItemId& x, int q) {
    const int from_stock = std::min(q, leftover[x]);
    leftover[x] -= from_stock;
    q -= from_stock;
    if (q == 0) return;
    const ItemDef& d = tree.item(x);
    for (const auto& p : tree.ground_truth_parents(x)) {
      if (p.kind != EdgeKind::Ingredient && held.insert(p.item).second) need(p.item, 1);
    }
    if (d.collectable) {
      actions[x] += q;
      return;
    }
    const int batches = (q + d.yield - 1) / d.yield;
    actions[x] += batches;
    for (const auto& r : d.recipe) need(r.item, batches * r.quantity);
    leftover[x] += batches * d.yield - q;
  };
  need(target, 1);
  return actions;
}

}  // namespace deckard::testing
