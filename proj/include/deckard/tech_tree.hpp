#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deckard/rng.hpp"

namespace deckard {

// Lowercase item identifier, e.g. "stone_pickaxe". Must match [a-z0-9_]+.
using ItemId = std::string;

bool is_valid_item_id(std::string_view id);

inline const ItemId kCraftingTable = "crafting_table";
inline const ItemId kFurnace = "furnace";

enum class EdgeKind { Ingredient, Tool, Workbench };

const char* to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(std::string_view s);

// One prerequisite of an item: a consumed ingredient, a held tool, or a
// workbench that must be present.
struct Parent {
  ItemId item;
  EdgeKind kind = EdgeKind::Ingredient;
  int quantity = 1;

  auto operator<=>(const Parent&) const = default;
};
using ParentSet = std::set<Parent>;

struct RecipeEntry {
  ItemId item;
  int quantity = 1;

  auto operator<=>(const RecipeEntry&) const = default;
};

struct ItemDef {
  ItemId id;
  bool collectable = false;
  std::optional<ItemId> required_tool;
  bool requires_crafting_table = false;
  bool requires_furnace = false;
  std::vector<RecipeEntry> recipe;
  int yield = 1;

  bool operator==(const ItemDef&) const = default;
};

// Multiset of item counts. Absent keys read as zero; counts never go negative.
class Inventory {
 public:
  Inventory() = default;
  Inventory(std::initializer_list<std::pair<const ItemId, int>> init);

  int count(const ItemId& item) const;
  bool has(const ItemId& item, int n = 1) const { return count(item) >= n; }
  void add(const ItemId& item, int n = 1);
  // Throws StateError if the removal would make a count negative.
  void remove(const ItemId& item, int n = 1);
  void clear() { counts_.clear(); }
  bool empty() const { return counts_.empty(); }

  const std::map<ItemId, int>& counts() const { return counts_; }

  bool operator==(const Inventory&) const = default;

 private:
  std::map<ItemId, int> counts_;
};

struct StepBudget {
  long long collect_steps = 1000;
  long long craft_steps = 0;
  long long episode_cap_collect = 1000;
  long long episode_cap_craft = 5000;

  void validate() const;
  bool operator==(const StepBudget&) const = default;
};

struct Outcome {
  bool success = false;
  long long steps = 0;
};

// Ground-truth crafting world. Immutable after construction; safe to share
// across threads.
class TechTree {
 public:
  TechTree() = default;
  // Validates every invariant; throws ValidationError naming the item.
  explicit TechTree(std::map<ItemId, ItemDef> items);

  static TechTree parse(std::string_view json_text);
  static TechTree load(const std::filesystem::path& path);

  // Canonical form: keys sorted, every field present, two-space indent.
  std::string serialize() const;

  bool contains(const ItemId& id) const { return items_.count(id) != 0; }
  const ItemDef& item(const ItemId& id) const;
  const std::map<ItemId, ItemDef>& items() const { return items_; }
  std::set<ItemId> ids() const;
  std::size_t size() const { return items_.size(); }

  ParentSet ground_truth_parents(const ItemId& id) const;

  // One collect episode. Tool-gated items fail without the tool and without
  // consuming a draw; otherwise one Bernoulli(success_prob) draw.
  Outcome attempt_collect(const ItemId& id, Inventory& inventory, double success_prob, Rng& rng,
                          const StepBudget& budget = {}) const;

  // Deterministic craft check; consumes recipe quantities, never tools or
  // workbenches.
  Outcome attempt_craft(const ItemId& id, Inventory& inventory,
                        const StepBudget& budget = {}) const;

  bool can_craft(const ItemId& id, const Inventory& inventory) const;

  bool operator==(const TechTree&) const = default;

 private:
  void validate() const;

  std::map<ItemId, ItemDef> items_;
};

}  // namespace deckard
