#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deckard/awm.hpp"
#include "deckard/tech_tree.hpp"

namespace deckard {

// One item entry from a recipe-dictionary document. An empty recipe means
// the item is treated as collectable.
struct ParsedEntry {
  ItemId item;
  bool requires_crafting_table = false;
  bool requires_furnace = false;
  std::optional<ItemId> required_tool;
  std::vector<RecipeEntry> recipe;

  bool collectable() const { return recipe.empty(); }
  bool operator==(const ParsedEntry&) const = default;
};

struct SkippedEntry {
  std::string key;
  std::string reason;
  int line = 0;
};

struct RecipeDictParse {
  std::vector<ParsedEntry> entries;
  std::vector<SkippedEntry> skipped;
};

// Parses a nested dictionary literal as emitted by a code model: optional
// `name =` prefix and `#` comments, double- or single-quoted strings,
// True/False/None, integer or quoted-integer quantities, trailing commas.
// Malformed entries are skipped and reported; a document whose top level is
// not a dictionary throws ParseError.
RecipeDictParse parse_recipe_dict(std::string_view text);

// Canonical dict-literal text for a list of entries; parse_recipe_dict reads
// it back unchanged.
std::string serialize_recipe_dict(const std::vector<ParsedEntry>& entries,
                                  std::string_view variable = "minecraft_info");

// Lowercases, trims, and turns spaces and hyphens into underscores.
std::string canonical_item_name(std::string_view raw);

// Name rewriting table. Keys are literal names or suffix patterns written
// as "*_suffix".
class AliasTable {
 public:
  AliasTable() = default;
  void add(const std::string& pattern, const ItemId& target);
  ItemId apply(const std::string& name) const;

  static AliasTable defaults();
  // JSON object: pattern -> canonical id.
  static AliasTable from_json(std::string_view text);

 private:
  std::map<std::string, ItemId> exact_;
  std::vector<std::pair<std::string, ItemId>> suffixes_;  // longest first
};

std::vector<ParsedEntry> normalize_aliases(const std::vector<ParsedEntry>& entries,
                                           const AliasTable& aliases);

// Hypothesized model from parsed entries over `universe`; cycles removed,
// nothing verified.
Awm build_hypothesized_awm(const std::vector<ParsedEntry>& entries,
                           const std::set<ItemId>& universe);

// Exact ground truth, including yields. The "perfect hypothesis".
Awm ground_truth_awm(const TechTree& tree);

// Tabula-rasa model: every node, no edges.
Awm empty_hypothesis(const std::set<ItemId>& universe);

struct ErrorSpec {
  double insert_rate = 0.0;
  double delete_rate = 0.0;
  ItemId distractor = "sand";
  std::uint64_t seed = 0;
};

// Ground truth with per-item independent errors: with probability
// delete_rate one uniformly chosen incoming edge is removed, and with
// probability insert_rate the distractor is added as an ingredient.
Awm perturb_ground_truth(const TechTree& tree, const ErrorSpec& spec);

struct AccuracyReport {
  std::size_t items = 0;
  double collectable_vs_craftable_acc = 0;
  double workbench_acc = 0;
  double recipe_items_acc = 0;
  double recipe_exact_acc = 0;
  double pct_items_inserted_deps = 0;
  double pct_items_missing_deps = 0;
  std::size_t quantity_pairs = 0;
  double qty_abs_error = 0;
  double qty_avg_error = 0;
  double qty_std = 0;

  // `key=value` lines in field order.
  std::string to_text() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// Scores a hypothesized model against ground truth over `subset` (all tree
// items when empty is passed via score_hypothesis(predicted, tree)).
AccuracyReport score_hypothesis(const Awm& predicted, const TechTree& tree,
                                const std::set<ItemId>& subset);
AccuracyReport score_hypothesis(const Awm& predicted, const TechTree& tree);

}  // namespace deckard
