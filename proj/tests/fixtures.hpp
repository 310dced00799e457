#pragma once

#include "deckard/awm.hpp"
#include "deckard/hypothesis.hpp"
#include "deckard/tech_tree.hpp"

namespace deckard::testing {

// Four items with one discrepancy of each kind in the prediction:
//   log             exact
//   planks          predicted collectable (label, recipe and missing-dep error)
//   crafting_table  3 planks instead of 4 (quantity error only)
//   stick           extra log ingredient, missing workbench
inline TechTree four_item_tree() {
  return TechTree::parse(R"({
    "log": {"collectable": true, "recipe": []},
    "planks": {"collectable": false, "recipe": [{"item": "log", "quantity": 1}], "yield": 4},
    "crafting_table": {"collectable": false, "recipe": [{"item": "planks", "quantity": 4}]},
    "stick": {"collectable": false, "requires_crafting_table": true,
              "recipe": [{"item": "planks", "quantity": 2}], "yield": 4}
  })");
}

inline Awm four_item_prediction() {
  Awm awm(std::set<ItemId>{"crafting_table", "log", "planks", "stick"});
  awm.add_edge({"planks", "crafting_table", EdgeKind::Ingredient, 3});
  awm.add_edge({"planks", "stick", EdgeKind::Ingredient, 2});
  awm.add_edge({"log", "stick", EdgeKind::Ingredient, 1});
  return awm;
}

// Counted by hand from the table above.
inline AccuracyReport four_item_expected() {
  AccuracyReport r;
  r.items = 4;
  r.collectable_vs_craftable_acc = 75.0;  // planks
  r.workbench_acc = 75.0;                 // stick
  r.recipe_items_acc = 50.0;              // planks, stick
  r.recipe_exact_acc = 25.0;              // only log
  r.pct_items_inserted_deps = 25.0;       // stick gains log
  r.pct_items_missing_deps = 50.0;        // planks loses log, stick loses the table
  r.quantity_pairs = 2;                   // (planks -> crafting_table), (planks -> stick)
  r.qty_abs_error = 0.5;                  // |3-4| and |2-2|
  r.qty_avg_error = -0.5;
  r.qty_std = 0.5;                        // population spread of {-1, 0}
  return r;
}

}  // namespace deckard::testing
