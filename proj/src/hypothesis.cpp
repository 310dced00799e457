#include "deckard/hypothesis.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "deckard/errors.hpp"
#include "json_util.hpp"

namespace deckard {

// --------------------------------------------------------------- AliasTable

void AliasTable::add(const std::string& pattern, const ItemId& target) {
  if (pattern.size() > 1 && pattern[0] == '*') {
    suffixes_.emplace_back(pattern.substr(1), target);
    std::stable_sort(suffixes_.begin(), suffixes_.end(), [](const auto& a, const auto& b) {
      return a.first.size() > b.first.size();
    });
  } else {
    exact_[pattern] = target;
  }
}

ItemId AliasTable::apply(const std::string& name) const {
  if (auto it = exact_.find(name); it != exact_.end()) return it->second;
  for (const auto& [suffix, target] : suffixes_) {
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return target;
    }
  }
  return name;
}

AliasTable AliasTable::defaults() {
  AliasTable t;
  for (const char* p : {"plank", "planks", "wood", "wood_plank", "wood_planks", "wooden_plank",
                        "wooden_planks", "*_plank", "*_planks", "*_wood"}) {
    t.add(p, "planks");
  }
  for (const char* p : {"cane", "canes", "*_cane", "*_canes"}) t.add(p, "reeds");
  return t;
}

AliasTable AliasTable::from_json(std::string_view text) {
  auto doc = detail::parse_json_or_throw(text);
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "alias table must be a JSON object");
  AliasTable t;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_string()) throw Error(ErrorCode::Parse, "alias target for '" + k + "' is not a string");
    t.add(k, v.get<std::string>());
  }
  return t;
}

std::vector<ParsedEntry> normalize_aliases(const std::vector<ParsedEntry>& entries,
                                           const AliasTable& aliases) {
  std::vector<ParsedEntry> out;
  std::set<ItemId> seen;
  for (const auto& e : entries) {
    ParsedEntry n = e;
    n.item = aliases.apply(e.item);
    if (!seen.insert(n.item).second) continue;
    if (n.required_tool) n.required_tool = aliases.apply(*n.required_tool);
    n.recipe.clear();
    for (const auto& r : e.recipe) {
      ItemId name = aliases.apply(r.item);
      auto it = std::find_if(n.recipe.begin(), n.recipe.end(),
                             [&](const RecipeEntry& x) { return x.item == name; });
      if (it == n.recipe.end()) {
        n.recipe.push_back({name, r.quantity});
      } else {
        it->quantity += r.quantity;
      }
    }
    out.push_back(std::move(n));
  }
  return out;
}

// ---------------------------------------------------------- building models

Awm build_hypothesized_awm(const std::vector<ParsedEntry>& entries,
                           const std::set<ItemId>& universe) {
  Awm awm(universe);
  for (const auto& e : entries) {
    awm.add_node(e.item);
    for (const auto& r : e.recipe) {
      if (r.item != e.item) awm.add_edge({r.item, e.item, EdgeKind::Ingredient, r.quantity});
    }
    if (e.required_tool && *e.required_tool != e.item) {
      awm.add_edge({*e.required_tool, e.item, EdgeKind::Tool, 1});
    }
    if (e.requires_crafting_table && e.item != kCraftingTable) {
      awm.add_edge({kCraftingTable, e.item, EdgeKind::Workbench, 1});
    }
    if (e.requires_furnace && e.item != kFurnace) {
      awm.add_edge({kFurnace, e.item, EdgeKind::Workbench, 1});
    }
  }
  return remove_cycles(std::move(awm));
}

Awm ground_truth_awm(const TechTree& tree) {
  Awm awm(tree.ids());
  for (const auto& [id, def] : tree.items()) {
    for (const auto& p : tree.ground_truth_parents(id)) awm.add_edge({p.item, id, p.kind, p.quantity});
    awm.set_yield_belief(id, def.yield);
  }
  return awm;
}

Awm empty_hypothesis(const std::set<ItemId>& universe) { return Awm(universe); }

Awm perturb_ground_truth(const TechTree& tree, const ErrorSpec& spec) {
  require_arg(spec.insert_rate >= 0 && spec.insert_rate <= 1, "insert_rate outside [0, 1]");
  require_arg(spec.delete_rate >= 0 && spec.delete_rate <= 1, "delete_rate outside [0, 1]");
  if (!tree.contains(spec.distractor)) {
    throw ValidationError(spec.distractor, "distractor is not an item of the tree");
  }
  const Awm truth = ground_truth_awm(tree);
  Awm awm = truth;
  // Items the distractor depends on cannot take it as an ingredient.
  const std::set<ItemId> distractor_ancestors = truth.ancestors(spec.distractor);
  Rng rng(spec.seed);
  for (const auto& id : tree.ids()) {
    const bool insert = rng.bernoulli(spec.insert_rate);
    const bool remove = rng.bernoulli(spec.delete_rate);
    if (remove) {
      auto ps = truth.parents(id);
      if (!ps.empty()) {
        auto it = ps.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng.below(ps.size())));
        awm.remove_edge(it->item, id, it->kind);
      }
    }
    if (insert && id != spec.distractor && !distractor_ancestors.count(id)) {
      bool present = false;
      for (const auto& p : awm.parents(id)) {
        present |= p.item == spec.distractor && p.kind == EdgeKind::Ingredient;
      }
      if (!present) awm.add_edge({spec.distractor, id, EdgeKind::Ingredient, 1});
    }
  }
  return awm;
}

// ------------------------------------------------------------------ scoring

namespace {

double pct(std::size_t hits, std::size_t n) {
  return n == 0 ? 100.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

double pct_or_zero(std::size_t hits, std::size_t n) {
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

std::map<ItemId, int> ingredients(const ParentSet& ps) {
  std::map<ItemId, int> out;
  for (const auto& p : ps) {
    if (p.kind == EdgeKind::Ingredient) out[p.item] = p.quantity;
  }
  return out;
}

std::optional<ItemId> tool(const ParentSet& ps) {
  for (const auto& p : ps) {
    if (p.kind == EdgeKind::Tool) return p.item;
  }
  return std::nullopt;
}

std::set<ItemId> workbenches(const ParentSet& ps) {
  std::set<ItemId> out;
  for (const auto& p : ps) {
    if (p.kind == EdgeKind::Workbench) out.insert(p.item);
  }
  return out;
}

std::set<std::pair<ItemId, EdgeKind>> dependency_keys(const ParentSet& ps) {
  std::set<std::pair<ItemId, EdgeKind>> out;
  for (const auto& p : ps) out.insert({p.item, p.kind});
  return out;
}

}  // namespace

AccuracyReport score_hypothesis(const Awm& predicted, const TechTree& tree,
                                const std::set<ItemId>& subset) {
  AccuracyReport r;
  std::size_t label = 0, bench = 0, items = 0, exact = 0, inserted = 0, missing = 0;
  std::vector<double> errors;
  for (const auto& id : subset) {
    if (!tree.contains(id)) throw UnknownItemError(id);
    ++r.items;
    const ParentSet truth = tree.ground_truth_parents(id);
    if (!predicted.contains(id)) {
      missing += truth.empty() ? 0 : 1;
      continue;
    }
    const ParentSet pred = predicted.parents(id);
    const auto ti = ingredients(truth);
    const auto pi = ingredients(pred);
    label += ti.empty() == pi.empty();
    bench += workbenches(truth) == workbenches(pred);
    const bool same_tool = tool(truth) == tool(pred);
    bool same_items = same_tool && ti.size() == pi.size() &&
                      std::equal(ti.begin(), ti.end(), pi.begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    items += same_items;
    exact += same_items && ti == pi;
    const auto tk = dependency_keys(truth);
    const auto pk = dependency_keys(pred);
    inserted += std::any_of(pk.begin(), pk.end(), [&](const auto& k) { return !tk.count(k); });
    missing += std::any_of(tk.begin(), tk.end(), [&](const auto& k) { return !pk.count(k); });
    for (const auto& [ing, q] : ti) {
      if (auto it = pi.find(ing); it != pi.end()) errors.push_back(it->second - q);
    }
  }
  r.collectable_vs_craftable_acc = pct(label, r.items);
  r.workbench_acc = pct(bench, r.items);
  r.recipe_items_acc = pct(items, r.items);
  r.recipe_exact_acc = pct(exact, r.items);
  r.pct_items_inserted_deps = pct_or_zero(inserted, r.items);
  r.pct_items_missing_deps = pct_or_zero(missing, r.items);
  r.quantity_pairs = errors.size();
  if (!errors.empty()) {
    double sum = 0, abs_sum = 0;
    for (double e : errors) {
      sum += e;
      abs_sum += std::abs(e);
    }
    const double n = static_cast<double>(errors.size());
    r.qty_avg_error = sum / n;
    r.qty_abs_error = abs_sum / n;
    double var = 0;
    for (double e : errors) var += (e - r.qty_avg_error) * (e - r.qty_avg_error);
    r.qty_std = std::sqrt(var / n);
  }
  return r;
}

AccuracyReport score_hypothesis(const Awm& predicted, const TechTree& tree) {
  return score_hypothesis(predicted, tree, tree.ids());
}

std::string AccuracyReport::to_text() const {
  return fmt::format(
      "items={}\ncollectable_vs_craftable_acc={:.2f}\nworkbench_acc={:.2f}\n"
      "recipe_items_acc={:.2f}\nrecipe_exact_acc={:.2f}\npct_items_inserted_deps={:.2f}\n"
      "pct_items_missing_deps={:.2f}\nquantity_pairs={}\nqty_abs_error={:.4f}\n"
      "qty_avg_error={:.4f}\nqty_std={:.4f}\n",
      items, collectable_vs_craftable_acc, workbench_acc, recipe_items_acc, recipe_exact_acc,
      pct_items_inserted_deps, pct_items_missing_deps, quantity_pairs, qty_abs_error,
      qty_avg_error, qty_std);
}

std::string AccuracyReport::csv_header() {
  return "items,collectable_vs_craftable_acc,workbench_acc,recipe_items_acc,recipe_exact_acc,"
         "pct_items_inserted_deps,pct_items_missing_deps,quantity_pairs,qty_abs_error,"
         "qty_avg_error,qty_std";
}

std::string AccuracyReport::csv_row() const {
  return fmt::format("{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{},{:.4f},{:.4f},{:.4f}", items,
                     collectable_vs_craftable_acc, workbench_acc, recipe_items_acc,
                     recipe_exact_acc, pct_items_inserted_deps, pct_items_missing_deps,
                     quantity_pairs, qty_abs_error, qty_avg_error, qty_std);
}

}  // namespace deckard
