// Acceptance checks, one PASS/FAIL line per criterion.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "deckard/agent.hpp"
#include "deckard/errors.hpp"
#include "deckard/harness.hpp"
#include "deckard/hypothesis.hpp"
#include "fixtures.hpp"
#include "support.hpp"

namespace {

using namespace deckard;
using namespace deckard::harness;
using deckard::testing::data_path;
using deckard::testing::pickaxe16;

constexpr int kSeeds = 10;
constexpr double kMinSpeedup = 2.0;
constexpr double kMaxSpeedupSeconds = 60.0;
constexpr double kGlassRatio = 0.6;
constexpr double kDominanceShare = 0.9;
constexpr double kFrontierRatio = 0.5;
constexpr int kSoundnessCases = 1000;
constexpr int kOracleTrees = 400;
constexpr double kEps = 1e-9;

struct Check {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

ExperimentSpec spec_for(Experiment e, const std::string& hypothesis) {
  ExperimentSpec s;
  s.experiment = e;
  s.tree_path = data_path("pickaxe16.json");
  s.hypothesis = HypothesisSource::parse(hypothesis);
  s.seeds = parse_seeds(std::to_string(kSeeds));
  return s;
}

double mean_steps(const std::vector<TaskResult>& runs) {
  double total = 0;
  for (const auto& r : runs) total += static_cast<double>(r.env_steps_to_goal);
  return runs.empty() ? 0 : total / static_cast<double>(runs.size());
}

Check guidance_speedup() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  ExperimentSpec s = spec_for(Experiment::Task, "truth");
  s.goal = "stone_pickaxe";
  const auto guided = run_task(s, pickaxe16(), HypothesisSource::parse("truth"));
  const auto unguided = run_task(s, pickaxe16(), HypothesisSource::parse("empty"));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double ratio = mean_steps(unguided) / mean_steps(guided);
  c.detail = fmt::format("ratio={:.2f} time={:.1f}s", ratio, seconds);
  if (ratio < kMinSpeedup) c.fail(fmt::format("step ratio {:.2f} below {}", ratio, kMinSpeedup));
  for (std::size_t i = 0; i < guided.size(); ++i) {
    if (!guided[i].success) c.fail(fmt::format("guided seed {} missed the goal", guided[i].seed));
    if (guided[i].policies_created >= unguided[i].policies_created) {
      c.fail(fmt::format("seed {}: {} guided policies vs {} unguided", guided[i].seed, guided[i].policies_created,
                         unguided[i].policies_created));
    }
  }
  if (seconds >= kMaxSpeedupSeconds) c.fail(fmt::format("took {:.1f}s", seconds));
  return c;
}

double mean_glass_iterations(const std::vector<SeedRun>& runs, long long cap) {
  double total = 0;
  for (const auto& r : runs) {
    auto it = r.discovered_at.find("glass");
    total += static_cast<double>(it == r.discovered_at.end() ? cap + 1 : it->second);
  }
  return total / static_cast<double>(runs.size());
}

std::vector<std::vector<CurvePoint>> curves_of(const std::vector<SeedRun>& runs) {
  std::vector<std::vector<CurvePoint>> out;
  for (const auto& r : runs) out.push_back(curve(r.records));
  return out;
}

Check open_ended_dominance(const std::vector<SeedRun>& guided, const std::vector<SeedRun>& unguided,
                           long long cap) {
  Check c;
  const double g = mean_glass_iterations(guided, cap);
  const double u = mean_glass_iterations(unguided, cap);
  auto gc = mean_curve(curves_of(guided));
  auto uc = mean_curve(curves_of(unguided));
  const std::size_t n = std::max(gc.size(), uc.size());
  std::size_t dominated = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double gv = gc.empty() ? 0 : gc[std::min(k, gc.size() - 1)][1];
    const double uv = uc.empty() ? 0 : uc[std::min(k, uc.size() - 1)][1];
    if (gv + kEps >= uv) ++dominated;
  }
  const double share = n ? static_cast<double>(dominated) / static_cast<double>(n) : 1.0;
  c.detail = fmt::format("glass {:.1f} vs {:.1f} iterations, dominance {:.3f}", g, u, share);
  if (g > kGlassRatio * u) c.fail(fmt::format("glass iterations {:.1f} vs {:.1f}", g, u));
  if (share < kDominanceShare) c.fail(fmt::format("guided curve dominates at {:.3f} of iterations", share));
  return c;
}

Check frontier_pruning(const std::vector<SeedRun>& guided) {
  Check c;
  double worst = 0;
  for (const auto& run : guided) {
    const auto& recs = run.records;
    for (const auto& r : recs) {
      if (r.frontier > r.graph) c.fail(fmt::format("seed {} iteration {}: frontier above graph", run.seed, r.iteration));
      if (r.verified > r.graph) c.fail("verified above graph");
    }
    if (recs.empty()) continue;
    const std::size_t half = recs.size() / 2;
    double sum = 0;
    for (std::size_t i = half; i < recs.size(); ++i) {
      sum += static_cast<double>(recs[i].frontier) / static_cast<double>(recs[i].graph);
    }
    const double ratio = sum / static_cast<double>(recs.size() - half);
    worst = std::max(worst, ratio);
    if (ratio >= kFrontierRatio) c.fail(fmt::format("seed {} second-half ratio {:.3f}", run.seed, ratio));
  }
  if (c.ok) c.detail = fmt::format("worst second-half ratio {:.3f}", worst);
  return c;
}

Check robustness() {
  Check c;
  ExperimentSpec s = spec_for(Experiment::Robustness, "truth");
  s.goal = "stone_pickaxe";
  s.seeds = parse_seeds("3");
  s.insert_rates = {0.0, 0.2};
  s.delete_rates = {0.0, 0.2};
  const auto cells = run_robustness(s, pickaxe16());
  const RobustnessCell* empty = nullptr;
  const RobustnessCell* truth = nullptr;
  for (const auto& cell : cells) {
    if (cell.hypothesis == "empty") empty = &cell;
    if (cell.hypothesis == "truth") truth = &cell;
  }
  if (!empty || !truth) {
    c.fail("reference rows missing");
    return c;
  }
  auto range = [](const RobustnessCell& cell) {
    long long lo = cell.runs.front().env_steps_to_goal, hi = lo;
    for (const auto& r : cell.runs) {
      lo = std::min(lo, r.env_steps_to_goal);
      hi = std::max(hi, r.env_steps_to_goal);
    }
    return std::pair{lo, hi};
  };
  const double empty_mean = mean_steps(empty->runs);
  std::string detail = fmt::format("empty={:.0f}", empty_mean);
  for (const auto& cell : cells) {
    if (cell.hypothesis != "perturb") continue;
    const double m = mean_steps(cell.runs);
    detail += fmt::format(" ({},{})={:.0f}", cell.insert_rate, cell.delete_rate, m);
    if (m >= empty_mean) {
      c.fail(fmt::format("cell ({},{}) mean {:.0f} not below empty {:.0f}", cell.insert_rate, cell.delete_rate, m,
                         empty_mean));
    }
    if (cell.insert_rate == 0 && cell.delete_rate == 0) {
      const auto [lo, hi] = range(cell);
      const auto [tlo, thi] = range(*truth);
      if (hi < tlo || thi < lo) c.fail("identity cell does not overlap the ground-truth runs");
    }
  }
  if (c.ok) c.detail = detail;
  return c;
}

// Conservation check on every primitive action: a failed action leaves the
// inventory alone, a collect adds one unit, and a craft removes exactly its
// ingredients and adds its yield.
void watch_inventory(Agent& agent, const TechTree& tree, Check& c, long long& events) {
  agent.set_observer([&tree, &c, &events](const SubgoalEvent& e) {
    ++events;
    for (const auto& [id, n] : e.after.counts()) {
      if (n < 0) c.fail(fmt::format("negative count of {}", id));
    }
    std::map<ItemId, int> expected = e.before.counts();
    if (e.outcome.success) {
      if (e.action == Action::Collect) {
        expected[e.item] += 1;
      } else {
        const ItemDef& d = tree.item(e.item);
        for (const auto& r : d.recipe) expected[r.item] -= r.quantity;
        expected[e.item] += d.yield;
      }
    }
    std::erase_if(expected, [](const auto& kv) { return kv.second == 0; });
    if (expected != e.after.counts()) {
      c.fail(fmt::format("{} {} changed the inventory unexpectedly", to_string(e.action), e.item));
    }
  });
}

Check soundness() {
  Check c;
  Rng gen(20240521);
  long long verified_nodes = 0;
  long long events = 0;
  for (int k = 0; k < kSoundnessCases && c.ok; ++k) {
    auto tree = std::make_shared<const TechTree>(deckard::testing::random_tree(gen, 12));
    const auto ids = tree->ids();
    std::vector<ItemId> pool(ids.begin(), ids.end());
    ErrorSpec err;
    err.insert_rate = gen.uniform();
    err.delete_rate = gen.uniform();
    err.distractor = pool[gen.below(pool.size())];
    err.seed = gen.next();
    Awm initial = perturb_ground_truth(*tree, err);
    for (const auto& id : ids) initial.add_node(id);
    AgentConfig cfg;
    cfg.seed = gen.next();
    cfg.max_iterations = 150;
    cfg.c0 = 1 + static_cast<int>(gen.below(5));
    cfg.learner.p0 = gen.uniform();
    cfg.learner.p_max = cfg.learner.p0 + (1 - cfg.learner.p0) * gen.uniform();
    if (gen.bernoulli(0.5)) {
      cfg.mode = Mode::Goal;
      cfg.goal = pool[gen.below(pool.size())];
    }
    Agent agent(tree, initial, cfg);
    watch_inventory(agent, *tree, c, events);
    try {
      agent.run_to_completion();
    } catch (const Error& e) {
      c.fail(fmt::format("case {} threw: {}", k, e.what()));
      break;
    }
    for (const auto& id : agent.state().awm.verified()) {
      ++verified_nodes;
      if (agent.state().awm.parents(id) != tree->ground_truth_parents(id)) {
        c.fail(fmt::format("case {}: verified {} has wrong parents", k, id));
      }
    }
  }
  if (c.ok) c.detail = fmt::format("{} cases, {} actions observed, {} verified nodes checked", kSoundnessCases, events,
                                   verified_nodes);
  return c;
}

Check oracle_equivalence() {
  Check c;
  Rng gen(8);
  int goals = 0;
  std::vector<TechTree> trees{TechTree::parse(R"({"log": {"collectable": true, "recipe": []}})")};
  for (int k = 0; k < kOracleTrees; ++k) trees.push_back(deckard::testing::random_tree(gen, 8));
  for (const auto& t : trees) {
    auto tree = std::make_shared<const TechTree>(t);
    for (const auto& goal : tree->ids()) {
      const auto [lo, hi] = deckard::testing::oracle_steps_to_goal(*tree, goal);
      AgentConfig cfg;
      cfg.mode = Mode::Goal;
      cfg.goal = goal;
      cfg.seed = gen.next();
      cfg.learner = LearnerConfig{1.0, 1.0, 1.0};
      const auto records = run(cfg, tree, ground_truth_awm(*tree));
      const int n = static_cast<int>(records.size());
      ++goals;
      if (lo != hi || n != lo) {
        c.fail(fmt::format("goal {}: run {} oracle [{}, {}] in {}", goal, n, lo, hi, tree->serialize()));
      }
    }
  }
  if (c.ok) c.detail = fmt::format("{} trees, {} goals", trees.size(), goals);
  return c;
}

Check parser_and_metrics() {
  Check c;
  const auto parsed = parse_recipe_dict(deckard::testing::read_text(data_path("recipes_pickaxe16.txt")));
  auto find = [&](const std::string& id) -> const ParsedEntry* {
    for (const auto& e : parsed.entries) {
      if (e.item == id) return &e;
    }
    return nullptr;
  };
  const ParsedEntry* dp = find("diamond_pickaxe");
  std::vector<RecipeEntry> dp_recipe = dp ? dp->recipe : std::vector<RecipeEntry>{};
  std::sort(dp_recipe.begin(), dp_recipe.end());
  if (dp_recipe != std::vector<RecipeEntry>{{"diamond", 3}, {"stick", 2}} || !dp->requires_crafting_table) {
    c.fail("diamond_pickaxe entry parsed wrongly");
  }
  const ParsedEntry* diamond = find("diamond");
  if (!diamond || diamond->required_tool != std::optional<ItemId>("iron_pickaxe") || !diamond->collectable()) {
    c.fail("diamond entry parsed wrongly");
  }
  if (parsed.skipped.size() != 1 || parsed.skipped.front().key != "flower") c.fail("unexpected skipped entries");

  const Awm awm = build_hypothesized_awm(normalize_aliases(parsed.entries, AliasTable::defaults()),
                                         pickaxe16().ids());
  if (!awm.is_acyclic()) c.fail("hypothesized model has a cycle");
  if (awm.believes_requires("planks", kCraftingTable)) c.fail("planks still requires the crafting table");
  if (awm.parents("crafting_table") != pickaxe16().ground_truth_parents("crafting_table")) {
    c.fail("crafting_table recipe lost in cycle removal");
  }

  const TechTree& tree = pickaxe16();
  const AccuracyReport id = score_hypothesis(ground_truth_awm(tree), tree);
  for (double v : {id.collectable_vs_craftable_acc, id.workbench_acc, id.recipe_items_acc, id.recipe_exact_acc}) {
    if (v != 100.0) c.fail("identity accuracy below 100");
  }
  if (id.pct_items_inserted_deps != 0 || id.pct_items_missing_deps != 0 || id.qty_abs_error != 0 ||
      id.qty_avg_error != 0 || id.qty_std != 0) {
    c.fail("identity report has nonzero error");
  }
  const AccuracyReport four =
      score_hypothesis(deckard::testing::four_item_prediction(), deckard::testing::four_item_tree());
  if (four.csv_row() != deckard::testing::four_item_expected().csv_row()) {
    c.fail("four-item report " + four.csv_row());
  }
  if (c.ok) c.detail = fmt::format("{} entries, {} skipped", parsed.entries.size(), parsed.skipped.size());
  return c;
}

std::map<std::string, std::string> csv_files(const RunOutput& out) {
  std::map<std::string, std::string> files;
  for (const auto& [name, body] : out.files) {
    if (name != "manifest.json") files[name] = body;
  }
  return files;
}

Check determinism() {
  Check c;
  std::vector<ExperimentSpec> specs;
  ExperimentSpec open = spec_for(Experiment::OpenEnded, "perturb:0.2,0.2");
  open.seeds = parse_seeds("4");
  open.max_iterations = 300;
  specs.push_back(open);
  ExperimentSpec task = spec_for(Experiment::Task, "truth");
  task.goal = "glass";
  task.seeds = parse_seeds("4");
  specs.push_back(task);
  ExperimentSpec rob = spec_for(Experiment::Robustness, "truth");
  rob.goal = "stone_pickaxe";
  rob.seeds = parse_seeds("3");
  rob.insert_rates = {0.1};
  rob.delete_rates = {0.0, 0.1};
  specs.push_back(rob);
  ExperimentSpec base = spec_for(Experiment::Baseline, "truth");
  base.seeds = parse_seeds("4");
  base.max_iterations = 300;
  specs.push_back(base);
  ExperimentSpec score = spec_for(Experiment::Score, "file:" + data_path("recipes_pickaxe16.txt"));
  specs.push_back(score);
  std::size_t files = 0;
  for (ExperimentSpec s : specs) {
    s.threads = 1;
    const auto serial = run_experiment(s);
    s.threads = 4;
    const auto a = run_experiment(ExperimentSpec::from_json(s.to_json()));
    const auto b = run_experiment(ExperimentSpec::from_json(a.files.at("manifest.json")));
    if (a.files != b.files) c.fail(fmt::format("{}: rerun from manifest differs", to_string(s.experiment)));
    if (csv_files(serial) != csv_files(a)) c.fail(fmt::format("{}: thread count changed output", to_string(s.experiment)));
    files += a.files.size();
  }
  if (c.ok) c.detail = fmt::format("{} experiments, {} files compared", specs.size(), files);
  return c;
}

}  // namespace

int main() {
  std::vector<std::pair<int, std::function<Check()>>> criteria;
  ExperimentSpec open = spec_for(Experiment::OpenEnded, "truth");
  std::vector<SeedRun> guided, unguided;
  auto open_runs = [&] {
    if (guided.empty()) {
      guided = run_agents(open, pickaxe16(), HypothesisSource::parse("truth"), Mode::OpenEnded);
      unguided = run_agents(open, pickaxe16(), HypothesisSource::parse("empty"), Mode::OpenEnded);
    }
  };
  criteria.emplace_back(1, guidance_speedup);
  criteria.emplace_back(2, [&] {
    open_runs();
    return open_ended_dominance(guided, unguided, open.max_iterations);
  });
  criteria.emplace_back(3, [&] {
    open_runs();
    return frontier_pruning(guided);
  });
  criteria.emplace_back(4, robustness);
  criteria.emplace_back(5, soundness);
  criteria.emplace_back(6, oracle_equivalence);
  criteria.emplace_back(7, parser_and_metrics);
  criteria.emplace_back(8, determinism);

  int failures = 0;
  for (const auto& [n, check] : criteria) {
    Check result;
    try {
      result = check();
    } catch (const std::exception& e) {
      result.fail(std::string("exception: ") + e.what());
    }
    if (!result.ok) ++failures;
    fmt::print("{} criterion {}: {}\n", result.ok ? "PASS" : "FAIL", n, result.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
