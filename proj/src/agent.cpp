#include "deckard/agent.hpp"

#include <algorithm>

#include <json.hpp>

#include "deckard/errors.hpp"
#include "json_util.hpp"

namespace deckard {

using nlohmann::json;

// -------------------------------------------------------------- AgentConfig

void AgentConfig::validate() const {
  require_arg(c0 >= 1, "c0 must be positive");
  require_arg(max_iterations >= 0, "max_iterations must be non-negative");
  require_arg(retry_cap >= 1, "retry_cap must be positive");
  require_arg(explore_max_quantity >= 1, "explore_max_quantity must be positive");
  require_arg((mode == Mode::Goal) == goal.has_value(), "a goal is required exactly in goal mode");
  learner.validate();
  budget.validate();
}

namespace {

json config_to_json(const AgentConfig& c) {
  return {
      {"mode", c.mode == Mode::Goal ? "goal" : "open_ended"},
      {"goal", c.goal ? json(*c.goal) : json(nullptr)},
      {"c0", c.c0},
      {"max_iterations", c.max_iterations},
      {"p0", c.learner.p0},
      {"pmax", c.learner.p_max},
      {"tau", c.learner.tau},
      {"collect_steps", c.budget.collect_steps},
      {"craft_steps", c.budget.craft_steps},
      {"episode_cap_collect", c.budget.episode_cap_collect},
      {"episode_cap_craft", c.budget.episode_cap_craft},
      {"retry_cap", c.retry_cap},
      {"explore_max_quantity", c.explore_max_quantity},
      {"seed", c.seed},
  };
}

AgentConfig config_from_json(const json& j) {
  AgentConfig c;
  try {
    std::string mode = j.value("mode", std::string("open_ended"));
    if (mode == "goal") {
      c.mode = Mode::Goal;
    } else if (mode == "open_ended") {
      c.mode = Mode::OpenEnded;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown mode '" + mode + "'");
    }
    if (j.contains("goal") && !j.at("goal").is_null()) c.goal = j.at("goal").get<std::string>();
    c.c0 = j.value("c0", c.c0);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.learner.p0 = j.value("p0", c.learner.p0);
    c.learner.p_max = j.value("pmax", c.learner.p_max);
    c.learner.tau = j.value("tau", c.learner.tau);
    c.budget.collect_steps = j.value("collect_steps", c.budget.collect_steps);
    c.budget.craft_steps = j.value("craft_steps", c.budget.craft_steps);
    c.budget.episode_cap_collect = j.value("episode_cap_collect", c.budget.episode_cap_collect);
    c.budget.episode_cap_craft = j.value("episode_cap_craft", c.budget.episode_cap_craft);
    c.retry_cap = j.value("retry_cap", c.retry_cap);
    c.explore_max_quantity = j.value("explore_max_quantity", c.explore_max_quantity);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed agent config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

std::string AgentConfig::to_json() const { return config_to_json(*this).dump(2) + "\n"; }

AgentConfig AgentConfig::from_json(std::string_view text) {
  return config_from_json(detail::parse_json_or_throw(text));
}

// -------------------------------------------------------------------- Agent

Agent::Agent(std::shared_ptr<const TechTree> tree, Awm initial, AgentConfig config)
    : tree_(std::move(tree)), config_(std::move(config)) {
  require_arg(tree_ != nullptr, "agent needs a tech tree");
  config_.validate();
  for (const auto& id : tree_->ids()) {
    require_arg(initial.contains(id), "initial AWM lacks tree item '" + id + "'");
  }
  if (config_.goal && !tree_->contains(*config_.goal)) throw UnknownItemError(*config_.goal);
  state_.awm = std::move(initial);
  state_.bank = PolicyBank(config_.learner);
  state_.rng = Rng(config_.seed);
}

bool Agent::finished() const {
  if (state_.iteration >= config_.max_iterations) return true;
  if (config_.mode == Mode::Goal && state_.awm.is_verified(*config_.goal)) return true;
  return state_.awm.verified().size() == state_.awm.nodes().size();
}

DreamResult Agent::dream() {
  const Awm& awm = state_.awm;
  if (awm.verified().size() == awm.nodes().size()) throw StateError("every node is verified");
  std::set<ItemId> f = frontier(awm);
  if (config_.mode == Mode::Goal) f = prune_to_goal(awm, f, *config_.goal);
  DreamResult out;
  out.frontier_size = f.size();
  std::set<ItemId> fresh;
  for (const auto& n : f) {
    if (state_.counts[n] <= config_.c0) fresh.insert(n);
  }
  if (!fresh.empty()) {
    out.branch = sample_branch(awm, fresh, state_.rng);
    return out;
  }
  // Fallback pool: unpruned frontier plus verified nodes.
  std::set<ItemId> pool = frontier(awm);
  pool.insert(awm.verified().begin(), awm.verified().end());
  if (pool.empty()) throw StateError("nothing to sample: empty frontier and verified set");
  out.branch = sample_branch(awm, pool, state_.rng);
  out.fallback = true;
  return out;
}

void Agent::record_verification(const ItemId& item) {
  verify_node(state_.awm, item, tree_->ground_truth_parents(item), tree_->item(item).yield);
}

bool Agent::obtain_unverified(const ItemId& item, long long& steps) {
  Inventory& inv = state_.inventory;
  Outcome craft = execute_subgoal(state_.bank, *tree_, item, Action::Craft, inv, state_.rng, config_.budget);
  steps += craft.steps;
  if (craft.success) return true;
  Outcome collect;
  if (state_.awm.believes_collectable(item)) {
    collect = acquire(state_.bank, *tree_, item, Action::Collect, 1, inv, state_.rng,
                      config_.retry_cap, config_.budget);
  } else {
    collect = execute_subgoal(state_.bank, *tree_, item, Action::Collect, inv, state_.rng, config_.budget);
  }
  steps += collect.steps;
  return collect.success;
}

std::optional<ItemId> Agent::explore(long long& steps) {
  Awm& awm = state_.awm;
  Inventory& inv = state_.inventory;

  std::map<ItemId, int> bundle;
  for (const auto& v : awm.verified()) {
    if (!state_.rng.bernoulli(0.5)) continue;
    bundle[v] = 1 + static_cast<int>(state_.rng.below(static_cast<std::uint64_t>(config_.explore_max_quantity)));
  }
  if (!bundle.empty()) {
    for (const auto& s : plan_acquisition(awm, bundle, inv)) {
      Outcome o = acquire(state_.bank, *tree_, s.item, s.action, s.quantity, inv, state_.rng,
                          config_.retry_cap, config_.budget);
      steps += o.steps;
      if (!o.success) break;
    }
  }

  const std::set<ItemId> nodes = awm.nodes();
  for (const auto& u : nodes) {
    if (awm.is_verified(u)) continue;
    Outcome o = execute_subgoal(state_.bank, *tree_, u, Action::Craft, inv, state_.rng, config_.budget);
    steps += o.steps;
    if (o.success) {
      record_verification(u);
      return u;
    }
  }
  for (const auto& u : nodes) {
    if (awm.is_verified(u) || !awm.believes_collectable(u)) continue;
    Outcome o = execute_subgoal(state_.bank, *tree_, u, Action::Collect, inv, state_.rng, config_.budget);
    steps += o.steps;
    if (o.success) {
      record_verification(u);
      return u;
    }
  }
  return std::nullopt;
}

IterationRecord Agent::wake(const DreamResult& dreamed) {
  const Branch& branch = dreamed.branch;
  require_arg(!branch.subgoals.empty() && branch.subgoals.back().item == branch.target,
              "malformed branch");
  state_.inventory.clear();
  IterationRecord rec;
  rec.iteration = state_.iteration + 1;
  rec.sampled_target = branch.target;
  rec.branch_length = branch.subgoals.size();
  rec.fallback = dreamed.fallback;
  rec.frontier = dreamed.frontier_size;

  const bool target_unverified = !state_.awm.is_verified(branch.target);
  const std::size_t prefix = branch.subgoals.size() - (target_unverified ? 1 : 0);
  if (target_unverified) ++state_.counts[branch.target];

  long long steps = 0;
  bool ok = true;
  for (std::size_t i = 0; i < prefix && ok; ++i) {
    const Subgoal& s = branch.subgoals[i];
    Outcome o = acquire(state_.bank, *tree_, s.item, s.action, s.quantity, state_.inventory,
                        state_.rng, config_.retry_cap, config_.budget);
    steps += o.steps;
    ++state_.counts[s.item];
    ok = o.success;
  }
  if (ok) {
    if (target_unverified) {
      if (obtain_unverified(branch.target, steps)) {
        record_verification(branch.target);
        rec.newly_verified = branch.target;
        rec.success = true;
      }
    } else {
      rec.success = true;
      rec.newly_verified = explore(steps);
    }
  }

  state_.total_env_steps += steps;
  ++state_.iteration;
  if (dreamed.fallback) ++state_.fallback_iterations;
  rec.env_steps = steps;
  rec.cumulative_steps = state_.total_env_steps;
  rec.verified = state_.awm.verified().size();
  rec.graph = state_.awm.nodes().size();
  return rec;
}

std::optional<IterationRecord> Agent::step() {
  if (finished()) return std::nullopt;
  return wake(dream());
}

std::vector<IterationRecord> Agent::run_to_completion() {
  std::vector<IterationRecord> records;
  while (auto rec = step()) records.push_back(std::move(*rec));
  return records;
}

std::string Agent::checkpoint() const {
  json policies = json::object();
  for (const auto& [id, p] : state_.bank.policies()) {
    policies[id] = {{"attempts", p.attempts}, {"successes", p.successes}, {"steps_spent", p.steps_spent}};
  }
  json doc = {
      {"config", config_to_json(config_)},
      {"awm", json::parse(state_.awm.to_json())},
      {"counts", state_.counts},
      {"policies", policies},
      {"policy_order", state_.bank.creation_order()},
      {"craft_steps", state_.bank.craft_steps()},
      {"rng", state_.rng.state()},
      {"total_env_steps", state_.total_env_steps},
      {"iteration", state_.iteration},
      {"fallback_iterations", state_.fallback_iterations},
  };
  return doc.dump(2) + "\n";
}

Agent Agent::restore(std::shared_ptr<const TechTree> tree, std::string_view checkpoint) {
  json doc = detail::parse_json_or_throw(checkpoint);
  try {
    AgentConfig config = config_from_json(doc.at("config"));
    Agent agent(std::move(tree), Awm::from_json(doc.at("awm").dump()), config);
    AgentState& s = agent.state_;
    s.counts = doc.at("counts").get<std::map<ItemId, long long>>();
    std::map<ItemId, PolicyState> policies;
    for (const auto& [id, p] : doc.at("policies").items()) {
      policies[id] = PolicyState{id, p.at("attempts").get<long long>(), p.at("successes").get<long long>(),
                                 p.at("steps_spent").get<long long>()};
    }
    s.bank.restore(std::move(policies), doc.at("policy_order").get<std::vector<ItemId>>(),
                   doc.at("craft_steps").get<long long>());
    s.rng.set_state(doc.at("rng").get<std::string>());
    s.total_env_steps = doc.at("total_env_steps").get<long long>();
    s.iteration = doc.at("iteration").get<long long>();
    s.fallback_iterations = doc.at("fallback_iterations").get<long long>();
    return agent;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed checkpoint: ") + e.what());
  }
}

std::vector<IterationRecord> run(const AgentConfig& config, std::shared_ptr<const TechTree> tree,
                                 const Awm& initial_awm) {
  Agent agent(std::move(tree), initial_awm, config);
  return agent.run_to_completion();
}

}  // namespace deckard
