#include "deckard/tech_tree.hpp"

#include <functional>

#include <json.hpp>

#include "deckard/errors.hpp"
#include "json_util.hpp"

namespace deckard {

using nlohmann::json;

bool is_valid_item_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Ingredient:
      return "ingredient";
    case EdgeKind::Tool:
      return "tool";
    case EdgeKind::Workbench:
      return "workbench";
  }
  return "?";
}

EdgeKind edge_kind_from_string(std::string_view s) {
  if (s == "ingredient") return EdgeKind::Ingredient;
  if (s == "tool") return EdgeKind::Tool;
  if (s == "workbench") return EdgeKind::Workbench;
  throw Error(ErrorCode::Parse, "unknown edge kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- Inventory

Inventory::Inventory(std::initializer_list<std::pair<const ItemId, int>> init) {
  for (const auto& [item, n] : init) add(item, n);
}

int Inventory::count(const ItemId& item) const {
  auto it = counts_.find(item);
  return it == counts_.end() ? 0 : it->second;
}

void Inventory::add(const ItemId& item, int n) {
  require_arg(n >= 0, "Inventory::add with negative count");
  if (n == 0) return;
  counts_[item] += n;
}

void Inventory::remove(const ItemId& item, int n) {
  require_arg(n >= 0, "Inventory::remove with negative count");
  if (n == 0) return;
  auto it = counts_.find(item);
  if (it == counts_.end() || it->second < n) {
    throw StateError("inventory underflow removing " + std::to_string(n) + " " + item);
  }
  it->second -= n;
  if (it->second == 0) counts_.erase(it);
}

void StepBudget::validate() const {
  require_arg(collect_steps > 0, "collect_steps must be positive");
  require_arg(craft_steps >= 0, "craft_steps must be non-negative");
  require_arg(episode_cap_collect >= collect_steps, "episode_cap_collect below collect_steps");
  require_arg(episode_cap_craft >= craft_steps, "episode_cap_craft below craft_steps");
}

// ------------------------------------------------------------------ TechTree

TechTree::TechTree(std::map<ItemId, ItemDef> items) : items_(std::move(items)) { validate(); }

void TechTree::validate() const {
  for (const auto& [id, def] : items_) {
    if (!is_valid_item_id(id)) throw ValidationError(id, "item name must match [a-z0-9_]+");
    if (def.id != id) throw ValidationError(id, "item id does not match its key");
    if (def.collectable != def.recipe.empty()) {
      throw ValidationError(id, def.collectable ? "collectable item has a recipe"
                                                : "craftable item has an empty recipe");
    }
    if (def.required_tool && !def.collectable) {
      throw ValidationError(id, "required_tool is only allowed on collectable items");
    }
    if (def.yield <= 0) throw ValidationError(id, "yield must be positive");
    std::set<ItemId> seen;
    for (const auto& entry : def.recipe) {
      if (entry.quantity <= 0) throw ValidationError(id, "recipe quantity must be positive");
      if (!seen.insert(entry.item).second) {
        throw ValidationError(id, "duplicate recipe ingredient '" + entry.item + "'");
      }
    }
    for (const auto& p : ground_truth_parents(id)) {
      if (!contains(p.item)) {
        throw ValidationError(id, "dangling reference to '" + p.item + "'");
      }
      if (p.item == id) throw ValidationError(id, "item depends on itself");
    }
  }

  // Acyclicity over ingredient, tool and workbench edges.
  enum class Mark { None, Active, Done };
  std::map<ItemId, Mark> mark;
  std::function<void(const ItemId&)> visit = [&](const ItemId& id) {
    mark[id] = Mark::Active;
    for (const auto& p : ground_truth_parents(id)) {
      Mark m = mark[p.item];
      if (m == Mark::Active) throw ValidationError(id, "dependency cycle through '" + p.item + "'");
      if (m == Mark::None) visit(p.item);
    }
    mark[id] = Mark::Done;
  };
  for (const auto& [id, def] : items_) {
    if (mark[id] == Mark::None) visit(id);
  }
}

const ItemDef& TechTree::item(const ItemId& id) const {
  auto it = items_.find(id);
  if (it == items_.end()) throw UnknownItemError(id);
  return it->second;
}

std::set<ItemId> TechTree::ids() const {
  std::set<ItemId> out;
  for (const auto& [id, def] : items_) out.insert(id);
  return out;
}

ParentSet TechTree::ground_truth_parents(const ItemId& id) const {
  const ItemDef& def = item(id);
  ParentSet out;
  for (const auto& entry : def.recipe) out.insert({entry.item, EdgeKind::Ingredient, entry.quantity});
  if (def.required_tool) out.insert({*def.required_tool, EdgeKind::Tool, 1});
  if (def.requires_crafting_table) out.insert({kCraftingTable, EdgeKind::Workbench, 1});
  if (def.requires_furnace) out.insert({kFurnace, EdgeKind::Workbench, 1});
  return out;
}

Outcome TechTree::attempt_collect(const ItemId& id, Inventory& inventory, double success_prob,
                                  Rng& rng, const StepBudget& budget) const {
  const ItemDef& def = item(id);
  require_arg(def.collectable, "'" + id + "' is not collectable");
  require_arg(success_prob >= 0.0 && success_prob <= 1.0, "success_prob outside [0, 1]");
  Outcome out{false, budget.collect_steps};
  if (def.required_tool && !inventory.has(*def.required_tool)) return out;
  if (rng.bernoulli(success_prob)) {
    inventory.add(id, 1);
    out.success = true;
  }
  return out;
}

bool TechTree::can_craft(const ItemId& id, const Inventory& inventory) const {
  const ItemDef& def = item(id);
  if (def.collectable) return false;
  for (const auto& entry : def.recipe) {
    if (!inventory.has(entry.item, entry.quantity)) return false;
  }
  if (def.requires_crafting_table && !inventory.has(kCraftingTable)) return false;
  if (def.requires_furnace && !inventory.has(kFurnace)) return false;
  return true;
}

Outcome TechTree::attempt_craft(const ItemId& id, Inventory& inventory,
                                const StepBudget& budget) const {
  const ItemDef& def = item(id);
  require_arg(!def.collectable, "'" + id + "' is not craftable");
  Outcome out{false, budget.craft_steps};
  if (!can_craft(id, inventory)) return out;
  for (const auto& entry : def.recipe) inventory.remove(entry.item, entry.quantity);
  inventory.add(id, def.yield);
  out.success = true;
  return out;
}

// ------------------------------------------------------------ serialization

namespace {

ItemDef item_from_json(const ItemId& id, const json& j) {
  if (!j.is_object()) throw ValidationError(id, "item definition must be an object");
  ItemDef def;
  def.id = id;
  try {
    def.collectable = j.at("collectable").get<bool>();
    if (j.contains("required_tool") && !j.at("required_tool").is_null()) {
      def.required_tool = j.at("required_tool").get<std::string>();
    }
    def.requires_crafting_table = j.value("requires_crafting_table", false);
    def.requires_furnace = j.value("requires_furnace", false);
    for (const auto& entry : j.at("recipe")) {
      def.recipe.push_back({entry.at("item").get<std::string>(), entry.at("quantity").get<int>()});
    }
    def.yield = j.value("yield", 1);
  } catch (const json::exception& e) {
    throw ValidationError(id, std::string("malformed definition: ") + e.what());
  }
  return def;
}

}  // namespace

TechTree TechTree::parse(std::string_view json_text) {
  json doc = detail::parse_json_or_throw(json_text);
  if (!doc.is_object()) throw ParseError("tree document must be a JSON object", 1, 1);
  std::map<ItemId, ItemDef> items;
  for (const auto& [key, value] : doc.items()) items.emplace(key, item_from_json(key, value));
  return TechTree(std::move(items));
}

TechTree TechTree::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path));
}

std::string TechTree::serialize() const {
  json doc = json::object();
  for (const auto& [id, def] : items_) {
    json recipe = json::array();
    for (const auto& entry : def.recipe) recipe.push_back({{"item", entry.item}, {"quantity", entry.quantity}});
    doc[id] = {
        {"collectable", def.collectable},
        {"required_tool", def.required_tool ? json(*def.required_tool) : json(nullptr)},
        {"requires_crafting_table", def.requires_crafting_table},
        {"requires_furnace", def.requires_furnace},
        {"recipe", recipe},
        {"yield", def.yield},
    };
  }
  return doc.dump(2) + "\n";
}

}  // namespace deckard
