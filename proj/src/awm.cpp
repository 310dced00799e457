#include "deckard/awm.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include <json.hpp>

#include "deckard/errors.hpp"
#include "json_util.hpp"

namespace deckard {

using nlohmann::json;

const char* to_string(Action action) { return action == Action::Collect ? "collect" : "craft"; }

// ----------------------------------------------------------------------- Awm

Awm::Awm(const std::set<ItemId>& nodes) {
  for (const auto& n : nodes) add_node(n);
}

void Awm::add_node(const ItemId& id) {
  require_arg(!id.empty(), "empty node id");
  nodes_.insert(id);
}

void Awm::add_edge(const AwmEdge& edge) {
  require_arg(edge.parent != edge.child, "self-loop on '" + edge.child + "'");
  require_arg(edge.quantity > 0, "edge quantity must be positive");
  add_node(edge.parent);
  add_node(edge.child);
  incoming_[edge.child][{edge.parent, edge.kind}] = edge.quantity;
}

bool Awm::remove_edge(const ItemId& parent, const ItemId& child, EdgeKind kind) {
  auto it = incoming_.find(child);
  if (it == incoming_.end()) return false;
  bool removed = it->second.erase({parent, kind}) != 0;
  if (it->second.empty()) incoming_.erase(it);
  return removed;
}

int Awm::remove_edges_between(const ItemId& parent, const ItemId& child) {
  int n = 0;
  for (EdgeKind k : {EdgeKind::Ingredient, EdgeKind::Tool, EdgeKind::Workbench}) {
    n += remove_edge(parent, child, k) ? 1 : 0;
  }
  return n;
}

void Awm::clear_incoming(const ItemId& child) { incoming_.erase(child); }

std::size_t Awm::edge_count() const {
  std::size_t n = 0;
  for (const auto& [child, in] : incoming_) n += in.size();
  return n;
}

std::vector<AwmEdge> Awm::edges() const {
  std::vector<AwmEdge> out;
  for (const auto& [child, in] : incoming_) {
    for (const auto& [key, q] : in) out.push_back({key.first, child, key.second, q});
  }
  std::sort(out.begin(), out.end());
  return out;
}

ParentSet Awm::parents(const ItemId& child) const {
  ParentSet out;
  auto it = incoming_.find(child);
  if (it == incoming_.end()) return out;
  for (const auto& [key, q] : it->second) out.insert({key.first, key.second, q});
  return out;
}

std::set<ItemId> Awm::parent_items(const ItemId& child) const {
  std::set<ItemId> out;
  auto it = incoming_.find(child);
  if (it == incoming_.end()) return out;
  for (const auto& [key, q] : it->second) out.insert(key.first);
  return out;
}

std::set<ItemId> Awm::children(const ItemId& parent) const {
  std::set<ItemId> out;
  for (const auto& [child, in] : incoming_) {
    for (const auto& [key, q] : in) {
      if (key.first == parent) out.insert(child);
    }
  }
  return out;
}

std::set<ItemId> Awm::ancestors(const ItemId& id) const {
  std::set<ItemId> seen;
  std::vector<ItemId> stack{id};
  while (!stack.empty()) {
    ItemId cur = std::move(stack.back());
    stack.pop_back();
    for (const auto& p : parent_items(cur)) {
      if (p != id && seen.insert(p).second) stack.push_back(p);
    }
  }
  return seen;
}

bool Awm::believes_collectable(const ItemId& id) const {
  auto it = incoming_.find(id);
  if (it == incoming_.end()) return true;
  for (const auto& [key, q] : it->second) {
    if (key.second == EdgeKind::Ingredient) return false;
  }
  return true;
}

std::optional<ItemId> Awm::tool_belief(const ItemId& id) const {
  auto it = incoming_.find(id);
  if (it == incoming_.end()) return std::nullopt;
  for (const auto& [key, q] : it->second) {
    if (key.second == EdgeKind::Tool) return key.first;
  }
  return std::nullopt;
}

bool Awm::believes_requires(const ItemId& id, const ItemId& workbench) const {
  auto it = incoming_.find(id);
  return it != incoming_.end() && it->second.count({workbench, EdgeKind::Workbench}) != 0;
}

std::optional<int> Awm::yield_belief(const ItemId& id) const {
  auto it = yields_.find(id);
  if (it == yields_.end()) return std::nullopt;
  return it->second;
}

void Awm::set_yield_belief(const ItemId& id, int yield) {
  require_arg(yield > 0, "yield must be positive");
  yields_[id] = yield;
}

void Awm::clear_yield_belief(const ItemId& id) { yields_.erase(id); }

void Awm::mark_verified(const ItemId& id) {
  add_node(id);
  verified_.insert(id);
}

std::vector<AwmEdge> Awm::find_cycle() const {
  // Iterative-order DFS over out-edges; deterministic given sorted containers.
  std::map<ItemId, std::vector<AwmEdge>> out;
  for (const auto& e : edges()) out[e.parent].push_back(e);
  enum class Mark { None, Active, Done };
  std::map<ItemId, Mark> mark;
  std::vector<AwmEdge> path;
  std::vector<AwmEdge> cycle;
  std::function<bool(const ItemId&)> dfs = [&](const ItemId& n) {
    mark[n] = Mark::Active;
    for (const auto& e : out[n]) {
      Mark m = mark[e.child];
      if (m == Mark::Active) {
        auto start = std::find_if(path.begin(), path.end(),
                                  [&](const AwmEdge& pe) { return pe.parent == e.child; });
        cycle.assign(start, path.end());
        cycle.push_back(e);
        return true;
      }
      if (m == Mark::None) {
        path.push_back(e);
        if (dfs(e.child)) return true;
        path.pop_back();
      }
    }
    mark[n] = Mark::Done;
    return false;
  };
  for (const auto& n : nodes_) {
    if (mark[n] == Mark::None && dfs(n)) return cycle;
  }
  return {};
}

bool Awm::is_acyclic() const { return find_cycle().empty(); }

std::string Awm::to_json() const {
  json edges_j = json::array();
  for (const auto& e : edges()) {
    edges_j.push_back({{"parent", e.parent},
                       {"child", e.child},
                       {"kind", deckard::to_string(e.kind)},
                       {"quantity", e.quantity}});
  }
  json doc = {{"nodes", nodes_},
              {"edges", edges_j},
              {"verified", verified_},
              {"yields", yields_}};
  return doc.dump(2) + "\n";
}

Awm Awm::from_json(std::string_view text) {
  json doc = detail::parse_json_or_throw(text);
  Awm awm;
  try {
    for (const auto& n : doc.at("nodes")) awm.add_node(n.get<std::string>());
    for (const auto& e : doc.at("edges")) {
      awm.add_edge({e.at("parent").get<std::string>(), e.at("child").get<std::string>(),
                    edge_kind_from_string(e.at("kind").get<std::string>()),
                    e.value("quantity", 1)});
    }
    if (doc.contains("verified")) {
      for (const auto& n : doc.at("verified")) awm.mark_verified(n.get<std::string>());
    }
    if (doc.contains("yields")) {
      for (const auto& [k, v] : doc.at("yields").items()) awm.set_yield_belief(k, v.get<int>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed AWM document: ") + e.what());
  }
  if (!awm.is_acyclic()) throw ValidationError("awm", "edges contain a cycle");
  return awm;
}

// ---------------------------------------------------------------- operations

std::set<ItemId> frontier(const Awm& awm) {
  std::set<ItemId> out;
  for (const auto& n : awm.nodes()) {
    if (awm.is_verified(n)) continue;
    auto ps = awm.parent_items(n);
    if (std::all_of(ps.begin(), ps.end(), [&](const ItemId& p) { return awm.is_verified(p); })) {
      out.insert(n);
    }
  }
  return out;
}

std::set<ItemId> prune_to_goal(const Awm& awm, const std::set<ItemId>& frontier_nodes,
                               const ItemId& goal) {
  if (!awm.contains(goal)) throw UnknownItemError(goal);
  std::set<ItemId> on_path = awm.ancestors(goal);
  on_path.insert(goal);
  std::set<ItemId> pruned;
  std::set_intersection(frontier_nodes.begin(), frontier_nodes.end(), on_path.begin(),
                        on_path.end(), std::inserter(pruned, pruned.end()));
  return pruned.empty() ? frontier_nodes : pruned;
}

std::vector<Subgoal> plan_acquisition(const Awm& awm, const std::map<ItemId, int>& demands,
                                      const Inventory& have) {
  std::set<ItemId> closure;
  for (const auto& [item, qty] : demands) {
    if (!awm.contains(item)) throw UnknownItemError(item);
    require_arg(qty > 0, "demand quantity must be positive");
    closure.insert(item);
    auto anc = awm.ancestors(item);
    closure.insert(anc.begin(), anc.end());
  }

  // Kahn's algorithm restricted to the closure, smallest name first.
  std::map<ItemId, int> indegree;
  std::map<ItemId, std::vector<ItemId>> out;
  for (const auto& n : closure) {
    for (const auto& p : awm.parent_items(n)) {
      ++indegree[n];
      out[p].push_back(n);
    }
  }
  std::priority_queue<ItemId, std::vector<ItemId>, std::greater<>> ready;
  for (const auto& n : closure) {
    if (indegree[n] == 0) ready.push(n);
  }
  std::vector<ItemId> order;
  while (!ready.empty()) {
    ItemId n = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto& c : out[n]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != closure.size()) throw StateError("cycle detected while expanding requirements");

  std::map<ItemId, long long> consumed;
  std::map<ItemId, bool> held;
  std::map<ItemId, Subgoal> planned;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const ItemId& n = *it;
    long long own = 0;
    if (auto d = demands.find(n); d != demands.end()) own = d->second;
    long long total = consumed[n] + std::max<long long>(own, held[n] ? 1 : 0);
    long long produce = std::max<long long>(0, total - have.count(n));
    if (produce == 0) continue;
    Subgoal s;
    s.item = n;
    s.action = awm.believes_collectable(n) ? Action::Collect : Action::Craft;
    long long reps = produce;
    if (s.action == Action::Craft) {
      long long y = awm.yield_belief(n).value_or(1);
      reps = (produce + y - 1) / y;
    }
    s.repetitions = static_cast<int>(reps);
    s.quantity = static_cast<int>(total);
    for (const auto& p : awm.parents(n)) {
      if (p.kind == EdgeKind::Ingredient) {
        consumed[p.item] += reps * p.quantity;
      } else {
        held[p.item] = true;
      }
    }
    planned.emplace(n, std::move(s));
  }

  std::vector<Subgoal> plan;
  for (const auto& n : order) {
    if (auto p = planned.find(n); p != planned.end()) plan.push_back(p->second);
  }
  return plan;
}

Branch expand_requirements(const Awm& awm, const ItemId& target) {
  Branch b;
  b.target = target;
  b.subgoals = plan_acquisition(awm, {{target, 1}});
  return b;
}

Branch sample_branch(const Awm& awm, const std::set<ItemId>& candidates, Rng& rng) {
  require_arg(!candidates.empty(), "sample_branch: empty candidate set");
  auto it = candidates.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(rng.below(candidates.size())));
  return expand_requirements(awm, *it);
}

namespace {

// Breaks cycles by deleting the lexicographically-last edge of each, preferring
// edges into unverified nodes so verified structure stays intact.
void break_remaining_cycles(Awm& awm) {
  for (auto cycle = awm.find_cycle(); !cycle.empty(); cycle = awm.find_cycle()) {
    std::vector<AwmEdge> candidates;
    for (const auto& e : cycle) {
      if (!awm.is_verified(e.child)) candidates.push_back(e);
    }
    if (candidates.empty()) candidates = cycle;
    const AwmEdge& last = *std::max_element(candidates.begin(), candidates.end());
    awm.remove_edge(last.parent, last.child, last.kind);
  }
}

}  // namespace

bool verify_node(Awm& awm, const ItemId& item, const ParentSet& observed,
                 std::optional<int> observed_yield) {
  if (!awm.contains(item)) throw UnknownItemError(item);
  if (awm.is_verified(item)) return false;
  awm.clear_incoming(item);
  for (const auto& p : observed) awm.add_edge({p.item, item, p.kind, p.quantity});
  if (observed_yield) awm.set_yield_belief(item, *observed_yield);
  awm.mark_verified(item);
  if (!awm.is_acyclic()) break_remaining_cycles(awm);
  return true;
}

std::optional<Branch> path_to(const Awm& awm, const ItemId& goal) {
  if (!awm.contains(goal)) throw UnknownItemError(goal);
  if (!awm.is_verified(goal)) return std::nullopt;
  for (const auto& a : awm.ancestors(goal)) {
    if (!awm.is_verified(a)) return std::nullopt;
  }
  return expand_requirements(awm, goal);
}

Awm remove_cycles(Awm awm) {
  // Workbench and tool nodes lose edges into items of their own recipe.
  std::set<ItemId> gating{kCraftingTable, kFurnace};
  for (const auto& e : awm.edges()) {
    if (e.kind != EdgeKind::Ingredient) gating.insert(e.parent);
  }
  for (const auto& w : gating) {
    if (!awm.contains(w)) continue;
    for (const auto& p : awm.parents(w)) {
      if (p.kind == EdgeKind::Ingredient && !awm.is_verified(p.item)) {
        awm.remove_edges_between(w, p.item);
      }
    }
  }

  // Mutual pairs lose both directions.
  std::set<std::pair<ItemId, ItemId>> mutual;
  for (const auto& e : awm.edges()) {
    if (awm.parent_items(e.parent).count(e.child)) {
      mutual.insert(std::minmax(e.parent, e.child));
    }
  }
  for (const auto& [a, b] : mutual) {
    if (!awm.is_verified(b)) awm.remove_edges_between(a, b);
    if (!awm.is_verified(a)) awm.remove_edges_between(b, a);
  }

  break_remaining_cycles(awm);
  return awm;
}

}  // namespace deckard
