#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deckard/rng.hpp"
#include "deckard/tech_tree.hpp"

namespace deckard {

struct AwmEdge {
  ItemId parent;
  ItemId child;
  EdgeKind kind = EdgeKind::Ingredient;
  int quantity = 1;

  auto operator<=>(const AwmEdge&) const = default;
};

// Abstract World Model: a typed DAG over item subgoals. Every node is either
// hypothesized or verified; a verified node's incoming edges are the
// prerequisites observed when it was first obtained and never change again.
class Awm {
 public:
  Awm() = default;
  explicit Awm(const std::set<ItemId>& nodes);

  void add_node(const ItemId& id);
  // Adds (or re-weights) the edge keyed by (parent, child, kind). Both
  // endpoints become nodes. Self-loops are rejected.
  void add_edge(const AwmEdge& edge);
  bool remove_edge(const ItemId& parent, const ItemId& child, EdgeKind kind);
  // Removes every edge parent -> child regardless of kind.
  int remove_edges_between(const ItemId& parent, const ItemId& child);
  void clear_incoming(const ItemId& child);

  bool contains(const ItemId& id) const { return nodes_.count(id) != 0; }
  const std::set<ItemId>& nodes() const { return nodes_; }
  const std::set<ItemId>& verified() const { return verified_; }
  bool is_verified(const ItemId& id) const { return verified_.count(id) != 0; }
  std::size_t edge_count() const;
  std::vector<AwmEdge> edges() const;

  ParentSet parents(const ItemId& child) const;
  std::set<ItemId> parent_items(const ItemId& child) const;
  std::set<ItemId> children(const ItemId& parent) const;
  std::set<ItemId> ancestors(const ItemId& id) const;

  // Beliefs derived from the edges: an item with no ingredient edges is
  // believed collectable.
  bool believes_collectable(const ItemId& id) const;
  std::optional<ItemId> tool_belief(const ItemId& id) const;
  bool believes_requires(const ItemId& id, const ItemId& workbench) const;

  std::optional<int> yield_belief(const ItemId& id) const;
  void set_yield_belief(const ItemId& id, int yield);
  void clear_yield_belief(const ItemId& id);

  // Marks a node verified without touching its edges (deserialization and
  // tests); agents go through verify_node.
  void mark_verified(const ItemId& id);

  bool is_acyclic() const;
  // Some directed cycle as a closed list of edges, or empty if acyclic.
  std::vector<AwmEdge> find_cycle() const;

  std::string to_json() const;
  static Awm from_json(std::string_view text);

  bool operator==(const Awm&) const = default;

 private:
  std::set<ItemId> nodes_;
  std::set<ItemId> verified_;
  // child -> (parent, kind) -> quantity
  std::map<ItemId, std::map<std::pair<ItemId, EdgeKind>, int>> incoming_;
  std::map<ItemId, int> yields_;
};

enum class Action { Collect, Craft };
const char* to_string(Action action);

struct Subgoal {
  ItemId item;
  Action action = Action::Collect;
  int repetitions = 1;  // collect attempts or craft actions planned
  int quantity = 1;     // count of `item` to hold once this subgoal completes

  bool operator==(const Subgoal&) const = default;
};

// Ordered, quantity-expanded subgoal sequence ending at `target`.
struct Branch {
  std::vector<Subgoal> subgoals;
  ItemId target;

  bool operator==(const Branch&) const = default;
};

// Unverified nodes whose hypothesized parents are all verified.
std::set<ItemId> frontier(const Awm& awm);

// Restricts a frontier to the goal and its hypothesized ancestors, unless no
// frontier node lies on a hypothesized path to the goal.
std::set<ItemId> prune_to_goal(const Awm& awm, const std::set<ItemId>& frontier_nodes,
                               const ItemId& goal);

// Bottom-up quantity expansion of hypothesized recipes for a set of demands,
// crediting what `have` already holds. Tools and workbenches are held, not
// consumed, so one unit covers every use. Topological order, lexicographic
// tie-break. Throws StateError on a cycle.
std::vector<Subgoal> plan_acquisition(const Awm& awm, const std::map<ItemId, int>& demands,
                                      const Inventory& have = {});

Branch expand_requirements(const Awm& awm, const ItemId& target);

// Uniform draw over the sorted candidates, then expand_requirements.
Branch sample_branch(const Awm& awm, const std::set<ItemId>& candidates, Rng& rng);

// Replaces the hypothesized incoming edges of `item` with the observed
// parents and adds it to the verified set. Returns false and leaves the model
// untouched if the item was already verified.
bool verify_node(Awm& awm, const ItemId& item, const ParentSet& observed,
                 std::optional<int> observed_yield = std::nullopt);

// Executable branch to a goal whose whole ancestor closure is verified.
std::optional<Branch> path_to(const Awm& awm, const ItemId& goal);

// Breaks hypothesized cycles: workbench/tool back-edges into their own
// recipe items, then mutual pairs, then the lexicographically-last edge of
// any cycle that remains.
Awm remove_cycles(Awm awm);

}  // namespace deckard
