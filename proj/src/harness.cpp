#include "deckard/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "deckard/errors.hpp"
#include "json_util.hpp"

namespace deckard::harness {

using nlohmann::json;

namespace {

constexpr const char* kRecordHeader =
    "iteration,target,branch_length,fallback,success,newly_verified,env_steps,cumulative_steps,"
    "verified,frontier,graph";

std::string record_row(const IterationRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", r.iteration, r.sampled_target,
                     r.branch_length, r.fallback ? 1 : 0, r.success ? 1 : 0,
                     r.newly_verified.value_or(""), r.env_steps, r.cumulative_steps, r.verified,
                     r.frontier, r.graph);
}

template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t perturb_stream(double insert_rate, double delete_rate) {
  return 1 + static_cast<std::uint64_t>(std::llround(insert_rate * 1000)) * 1001 +
         static_cast<std::uint64_t>(std::llround(delete_rate * 1000));
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation; zero for fewer than two values.
double stdev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("invalid {} '{}'", what, s));
  }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("invalid {} '{}'", what, s));
  }
  try {
    return std::stoull(s);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("invalid {} '{}'", what, s));
  }
}

void add_tree_nodes(Awm& awm, const TechTree& tree) {
  for (const auto& id : tree.ids()) awm.add_node(id);
}

std::string curve_csv(const std::vector<std::vector<double>>& rows) {
  std::string out = "iteration,verified,frontier,graph,steps\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", static_cast<long long>(r[0]), format_double(r[1]),
                       format_double(r[2]), format_double(r[3]), format_double(r[4]));
  }
  return out;
}

json task_summary_json(const std::string& label, const std::vector<TaskResult>& runs) {
  std::vector<double> steps, iterations, policies;
  std::size_t successes = 0;
  for (const auto& r : runs) {
    steps.push_back(static_cast<double>(r.env_steps_to_goal));
    iterations.push_back(static_cast<double>(r.iterations));
    policies.push_back(static_cast<double>(r.policies_created));
    successes += r.success ? 1 : 0;
  }
  return {{"hypothesis", label},
          {"seeds", runs.size()},
          {"successes", successes},
          {"mean_steps", mean(steps)},
          {"stdev_steps", stdev(steps)},
          {"mean_iterations", mean(iterations)},
          {"mean_policies", mean(policies)}};
}

RunOutput open_ended_output(const ExperimentSpec& spec, const TechTree& tree) {
  const auto runs = run_open_ended(spec, tree);
  RunOutput out;
  std::vector<std::vector<CurvePoint>> curves;
  std::string seeds_csv = std::string("seed,") + kRecordHeader + "\n";
  std::string discovery = "seed,item,iteration\n";
  json summary = {{"experiment", "open_ended"}, {"hypothesis", spec.hypothesis.to_string()}};
  std::map<ItemId, std::vector<double>> discovered;
  for (const auto& run : runs) {
    curves.push_back(curve(run.records));
    for (const auto& r : run.records) seeds_csv += fmt::format("{},{}\n", run.seed, record_row(r));
    std::vector<std::pair<long long, ItemId>> order;
    for (const auto& [item, it] : run.discovered_at) order.emplace_back(it, item);
    std::sort(order.begin(), order.end());
    for (const auto& [it, item] : order) discovery += fmt::format("{},{},{}\n", run.seed, item, it);
    for (const auto& id : tree.ids()) {
      auto found = run.discovered_at.find(id);
      // Never-verified items count as max_iterations + 1.
      discovered[id].push_back(found == run.discovered_at.end()
                                   ? static_cast<double>(spec.max_iterations + 1)
                                   : static_cast<double>(found->second));
    }
    out.files[fmt::format("checkpoints/seed_{}.json", run.seed)] = run.checkpoint;
  }
  json per_item = json::object();
  for (const auto& [id, its] : discovered) per_item[id] = mean(its);
  summary["mean_iterations_to_item"] = per_item;
  summary["seeds"] = runs.size();
  out.files["explore.csv"] = curve_csv(mean_curve(curves));
  out.files["explore_seeds.csv"] = seeds_csv;
  out.files["explore_discovery.csv"] = discovery;
  out.summary = summary.dump();
  return out;
}

void append_task_rows(std::string& csv, const std::string& label, const std::vector<TaskResult>& runs) {
  for (const auto& r : runs) {
    csv += fmt::format("{},{},{},{},{},{}\n", label, r.seed, r.success ? 1 : 0, r.env_steps_to_goal,
                       r.iterations, r.policies_created);
  }
}

RunOutput task_output(const ExperimentSpec& spec, const TechTree& tree) {
  std::vector<std::pair<std::string, std::vector<TaskResult>>> groups;
  groups.emplace_back(spec.hypothesis.to_string(), run_task(spec, tree, spec.hypothesis));
  HypothesisSource empty;
  empty.kind = HypothesisSource::Kind::Empty;
  if (!(spec.hypothesis == empty)) groups.emplace_back("empty", run_task(spec, tree, empty));

  RunOutput out;
  std::string csv = "hypothesis,seed,success,env_steps_to_goal,iterations,policies_created\n";
  for (const auto& [label, runs] : groups) append_task_rows(csv, label, runs);
  std::vector<json> summaries;
  for (const auto& [label, runs] : groups) summaries.push_back(task_summary_json(label, runs));
  const double empty_mean = summaries.back()["mean_steps"].get<double>();
  std::string table =
      "hypothesis,seeds,successes,mean_steps,stdev_steps,mean_iterations,mean_policies,"
      "steps_ratio_vs_empty\n";
  for (auto& s : summaries) {
    const double m = s["mean_steps"].get<double>();
    const double ratio = m > 0 ? empty_mean / m : 0.0;
    s["steps_ratio_vs_empty"] = ratio;
    table += fmt::format("{},{},{},{},{},{},{},{}\n", s["hypothesis"].get<std::string>(),
                         s["seeds"].get<std::size_t>(), s["successes"].get<std::size_t>(),
                         format_double(m), format_double(s["stdev_steps"].get<double>()),
                         format_double(s["mean_iterations"].get<double>()),
                         format_double(s["mean_policies"].get<double>()), format_double(ratio));
  }
  out.files["task.csv"] = csv;
  out.files["task_summary.csv"] = table;
  out.summary = json{{"experiment", "task"}, {"goal", *spec.goal}, {"groups", summaries}}.dump();
  return out;
}

RunOutput robustness_output(const ExperimentSpec& spec, const TechTree& tree) {
  const auto cells = run_robustness(spec, tree);
  RunOutput out;
  std::string grid = "hypothesis,insert_rate,delete_rate,seeds,mean_steps,min_steps,max_steps,successes\n";
  std::string runs_csv =
      "hypothesis,insert_rate,delete_rate,seed,success,env_steps_to_goal,iterations,policies_created\n";
  json cells_json = json::array();
  for (const auto& c : cells) {
    std::vector<double> steps;
    std::size_t successes = 0;
    for (const auto& r : c.runs) {
      steps.push_back(static_cast<double>(r.env_steps_to_goal));
      successes += r.success ? 1 : 0;
      runs_csv += fmt::format("{},{},{},{},{},{},{},{}\n", c.hypothesis, format_double(c.insert_rate),
                              format_double(c.delete_rate), r.seed, r.success ? 1 : 0,
                              r.env_steps_to_goal, r.iterations, r.policies_created);
    }
    const auto [lo, hi] = std::minmax_element(steps.begin(), steps.end());
    grid += fmt::format("{},{},{},{},{},{},{},{}\n", c.hypothesis, format_double(c.insert_rate),
                        format_double(c.delete_rate), c.runs.size(), format_double(mean(steps)),
                        static_cast<long long>(*lo), static_cast<long long>(*hi), successes);
    cells_json.push_back({{"hypothesis", c.hypothesis},
                          {"insert_rate", c.insert_rate},
                          {"delete_rate", c.delete_rate},
                          {"mean_steps", mean(steps)},
                          {"min_steps", *lo},
                          {"max_steps", *hi},
                          {"successes", successes}});
  }
  out.files["robustness.csv"] = grid;
  out.files["robustness_runs.csv"] = runs_csv;
  out.summary = json{{"experiment", "robustness"}, {"goal", *spec.goal}, {"cells", cells_json}}.dump();
  return out;
}

RunOutput baseline_output(const ExperimentSpec& spec, const TechTree& tree) {
  std::vector<std::vector<BaselinePoint>> runs(spec.seeds.size());
  parallel_for(spec.seeds.size(), spec.threads, [&](std::size_t i) {
    runs[i] = run_baseline_random(tree, spec.learner.p0, spec.max_iterations, spec.seeds[i], spec.budget);
  });
  std::string seeds_csv = "seed,iteration,discovered,steps\n";
  std::size_t longest = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    longest = std::max(longest, runs[i].size());
    for (const auto& p : runs[i]) {
      seeds_csv += fmt::format("{},{},{},{}\n", spec.seeds[i], p.iteration, p.discovered, p.steps);
    }
  }
  std::string mean_csv = "iteration,discovered,steps\n";
  std::vector<double> final_discovered;
  for (std::size_t k = 0; k < longest; ++k) {
    std::vector<double> d, s;
    for (const auto& run : runs) {
      if (run.empty()) continue;
      const auto& p = run[std::min(k, run.size() - 1)];
      d.push_back(static_cast<double>(p.discovered));
      s.push_back(static_cast<double>(p.steps));
    }
    mean_csv += fmt::format("{},{},{}\n", k + 1, format_double(mean(d)), format_double(mean(s)));
  }
  for (const auto& run : runs) final_discovered.push_back(run.empty() ? 0.0 : static_cast<double>(run.back().discovered));
  RunOutput out;
  out.files["baseline.csv"] = mean_csv;
  out.files["baseline_seeds.csv"] = seeds_csv;
  out.summary = json{{"experiment", "baseline"},
                     {"seeds", runs.size()},
                     {"mean_final_discovered", mean(final_discovered)}}
                    .dump();
  return out;
}

RunOutput score_output(const ExperimentSpec& spec, const TechTree& tree) {
  const Awm predicted = load_hypothesis(spec.hypothesis, tree, spec.seeds.front(), spec.distractor,
                                        spec.aliases_path);
  const AccuracyReport report =
      spec.subset.empty()
          ? score_hypothesis(predicted, tree)
          : score_hypothesis(predicted, tree, std::set<ItemId>(spec.subset.begin(), spec.subset.end()));
  RunOutput out;
  out.files["score.csv"] = AccuracyReport::csv_header() + "\n" + report.csv_row() + "\n";
  out.files["score.txt"] = report.to_text();
  out.summary = json{{"experiment", "score"}, {"report", report.to_text()}}.dump();
  return out;
}

}  // namespace

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::OpenEnded: return "open_ended";
    case Experiment::Task: return "task";
    case Experiment::Robustness: return "robustness";
    case Experiment::Baseline: return "baseline";
    case Experiment::Score: return "score";
  }
  return "?";
}

Experiment experiment_from_string(std::string_view s) {
  for (auto e : {Experiment::OpenEnded, Experiment::Task, Experiment::Robustness, Experiment::Baseline,
                 Experiment::Score}) {
    if (s == to_string(e)) return e;
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown experiment '{}'", s));
}

HypothesisSource HypothesisSource::parse(std::string_view text) {
  HypothesisSource h;
  const std::string t = trim(text);
  if (t == "empty") {
    h.kind = Kind::Empty;
  } else if (t == "truth") {
    h.kind = Kind::Truth;
  } else if (t.rfind("file:", 0) == 0) {
    h.kind = Kind::File;
    h.path = t.substr(5);
    require_arg(!h.path.empty(), "file: hypothesis needs a path");
  } else if (t.rfind("perturb:", 0) == 0) {
    h.kind = Kind::Perturb;
    const auto parts = split(std::string_view(t).substr(8), ',');
    require_arg(parts.size() == 2, "perturb hypothesis must be perturb:INSERT,DELETE");
    h.insert_rate = parse_double(parts[0], "insert rate");
    h.delete_rate = parse_double(parts[1], "delete rate");
    require_arg(h.insert_rate >= 0 && h.insert_rate <= 1 && h.delete_rate >= 0 && h.delete_rate <= 1,
                "perturbation rates must lie in [0, 1]");
  } else {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("unknown hypothesis '{}' (expected file:PATH, perturb:I,D, empty or truth)", t));
  }
  return h;
}

std::string HypothesisSource::to_string() const {
  switch (kind) {
    case Kind::Empty: return "empty";
    case Kind::Truth: return "truth";
    case Kind::File: return "file:" + path;
    case Kind::Perturb: return fmt::format("perturb:{},{}", insert_rate, delete_rate);
  }
  return "?";
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  const std::string t = trim(text);
  std::vector<std::uint64_t> seeds;
  if (t.find(',') == std::string::npos) {
    const std::uint64_t n = parse_u64(t, "seed count");
    require_arg(n > 0, "seed count must be positive");
    for (std::uint64_t i = 0; i < n; ++i) seeds.push_back(i);
    return seeds;
  }
  for (const auto& part : split(t, ',')) seeds.push_back(parse_u64(part, "seed"));
  return seeds;
}

std::vector<double> parse_rates(std::string_view text) {
  std::vector<double> rates;
  for (const auto& part : split(text, ',')) {
    const double r = parse_double(part, "rate");
    require_arg(r >= 0 && r <= 1, "rates must lie in [0, 1]");
    rates.push_back(r);
  }
  return rates;
}

void ExperimentSpec::validate() const {
  require_arg(!tree_path.empty(), "a tree path is required");
  require_arg(!seeds.empty(), "at least one seed is required");
  require_arg(threads >= 1, "threads must be positive");
  if (experiment == Experiment::Task || experiment == Experiment::Robustness) {
    require_arg(goal.has_value(), "a goal item is required");
  }
  if (experiment == Experiment::Robustness) {
    require_arg(!insert_rates.empty() && !delete_rates.empty(), "robustness needs insert and delete rates");
    require_arg(seeds.size() >= 3, "robustness needs at least three seeds per cell");
    for (double r : insert_rates) require_arg(r >= 0 && r <= 1, "rates must lie in [0, 1]");
    for (double r : delete_rates) require_arg(r >= 0 && r <= 1, "rates must lie in [0, 1]");
  }
  AgentConfig probe = agent_config(*this, 0, goal ? Mode::Goal : Mode::OpenEnded);
  probe.validate();
}

std::string ExperimentSpec::to_json() const {
  json j = {
      {"experiment", harness::to_string(experiment)},
      {"tree", tree_path},
      {"hypothesis", hypothesis.to_string()},
      {"goal", goal ? json(*goal) : json(nullptr)},
      {"seeds", seeds},
      {"c0", c0},
      {"max_iterations", max_iterations},
      {"p0", learner.p0},
      {"pmax", learner.p_max},
      {"tau", learner.tau},
      {"collect_steps", budget.collect_steps},
      {"craft_steps", budget.craft_steps},
      {"episode_cap_collect", budget.episode_cap_collect},
      {"episode_cap_craft", budget.episode_cap_craft},
      {"retry_cap", retry_cap},
      {"explore_max_quantity", explore_max_quantity},
      {"insert_rates", insert_rates},
      {"delete_rates", delete_rates},
      {"distractor", distractor},
      {"aliases", aliases_path},
      {"subset", subset},
      {"threads", threads},
      {"version", DECKARD_VERSION_STRING},
  };
  return j.dump(2) + "\n";
}

ExperimentSpec ExperimentSpec::from_json(std::string_view text) {
  const json j = detail::parse_json_or_throw(text);
  ExperimentSpec s;
  try {
    s.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    s.tree_path = j.at("tree").get<std::string>();
    if (j.contains("hypothesis")) s.hypothesis = HypothesisSource::parse(j.at("hypothesis").get<std::string>());
    if (j.contains("goal") && !j.at("goal").is_null()) s.goal = j.at("goal").get<std::string>();
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.c0 = j.value("c0", s.c0);
    s.max_iterations = j.value("max_iterations", s.max_iterations);
    s.learner.p0 = j.value("p0", s.learner.p0);
    s.learner.p_max = j.value("pmax", s.learner.p_max);
    s.learner.tau = j.value("tau", s.learner.tau);
    s.budget.collect_steps = j.value("collect_steps", s.budget.collect_steps);
    s.budget.craft_steps = j.value("craft_steps", s.budget.craft_steps);
    s.budget.episode_cap_collect = j.value("episode_cap_collect", s.budget.episode_cap_collect);
    s.budget.episode_cap_craft = j.value("episode_cap_craft", s.budget.episode_cap_craft);
    s.retry_cap = j.value("retry_cap", s.retry_cap);
    s.explore_max_quantity = j.value("explore_max_quantity", s.explore_max_quantity);
    if (j.contains("insert_rates")) s.insert_rates = j.at("insert_rates").get<std::vector<double>>();
    if (j.contains("delete_rates")) s.delete_rates = j.at("delete_rates").get<std::vector<double>>();
    s.distractor = j.value("distractor", s.distractor);
    s.aliases_path = j.value("aliases", s.aliases_path);
    if (j.contains("subset")) s.subset = j.at("subset").get<std::vector<ItemId>>();
    s.threads = j.value("threads", s.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed experiment manifest: ") + e.what());
  }
  s.validate();
  return s;
}

AgentConfig agent_config(const ExperimentSpec& spec, std::uint64_t seed, Mode mode) {
  AgentConfig c;
  c.mode = mode;
  if (mode == Mode::Goal) c.goal = spec.goal;
  c.c0 = spec.c0;
  c.max_iterations = spec.max_iterations;
  c.learner = spec.learner;
  c.budget = spec.budget;
  c.retry_cap = spec.retry_cap;
  c.explore_max_quantity = spec.explore_max_quantity;
  c.seed = seed;
  return c;
}

Awm load_hypothesis(const HypothesisSource& source, const TechTree& tree, std::uint64_t seed,
                    const ItemId& distractor, const std::string& aliases_path) {
  Awm awm;
  switch (source.kind) {
    case HypothesisSource::Kind::Empty:
      awm = empty_hypothesis(tree.ids());
      break;
    case HypothesisSource::Kind::Truth:
      awm = ground_truth_awm(tree);
      break;
    case HypothesisSource::Kind::Perturb: {
      ErrorSpec e;
      e.insert_rate = source.insert_rate;
      e.delete_rate = source.delete_rate;
      e.distractor = distractor;
      e.seed = mix_seed(seed, perturb_stream(source.insert_rate, source.delete_rate));
      awm = perturb_ground_truth(tree, e);
      break;
    }
    case HypothesisSource::Kind::File: {
      const std::string text = detail::read_file(source.path);
      const std::string t = trim(text);
      bool is_awm = false;
      if (!t.empty() && t.front() == '{') {
        const json j = json::parse(t, nullptr, false);
        is_awm = !j.is_discarded() && j.is_object() && j.contains("nodes") && j.contains("edges");
      }
      if (is_awm) {
        awm = Awm::from_json(t);
      } else {
        const AliasTable aliases = aliases_path.empty()
                                       ? AliasTable::defaults()
                                       : AliasTable::from_json(detail::read_file(aliases_path));
        const auto parsed = parse_recipe_dict(text);
        awm = build_hypothesized_awm(normalize_aliases(parsed.entries, aliases), tree.ids());
      }
      break;
    }
  }
  add_tree_nodes(awm, tree);
  return awm;
}

std::vector<SeedRun> run_agents(const ExperimentSpec& spec, const TechTree& tree,
                                const HypothesisSource& source, Mode mode) {
  auto shared = std::make_shared<const TechTree>(tree);
  std::vector<SeedRun> runs(spec.seeds.size());
  parallel_for(spec.seeds.size(), spec.threads, [&](std::size_t i) {
    const std::uint64_t seed = spec.seeds[i];
    Agent agent(shared, load_hypothesis(source, tree, seed, spec.distractor, spec.aliases_path),
                agent_config(spec, seed, mode));
    SeedRun& run = runs[i];
    run.seed = seed;
    run.records = agent.run_to_completion();
    for (const auto& r : run.records) {
      if (r.newly_verified) run.discovered_at[*r.newly_verified] = r.iteration;
    }
    run.policies_created = agent.state().bank.size();
    run.goal_reached = mode == Mode::Goal && agent.state().awm.is_verified(*spec.goal);
    run.checkpoint = agent.checkpoint();
  });
  return runs;
}

std::vector<SeedRun> run_open_ended(const ExperimentSpec& spec, const TechTree& tree) {
  return run_agents(spec, tree, spec.hypothesis, Mode::OpenEnded);
}

TaskResult task_result(const SeedRun& run) {
  TaskResult t;
  t.seed = run.seed;
  t.success = run.goal_reached;
  t.env_steps_to_goal = run.records.empty() ? 0 : run.records.back().cumulative_steps;
  t.iterations = static_cast<long long>(run.records.size());
  t.policies_created = run.policies_created;
  return t;
}

std::vector<TaskResult> run_task(const ExperimentSpec& spec, const TechTree& tree,
                                 const HypothesisSource& source) {
  require_arg(spec.goal.has_value(), "task needs a goal");
  if (!tree.contains(*spec.goal)) throw UnknownItemError(*spec.goal);
  std::vector<TaskResult> out;
  for (const auto& run : run_agents(spec, tree, source, Mode::Goal)) out.push_back(task_result(run));
  return out;
}

std::vector<RobustnessCell> run_robustness(const ExperimentSpec& spec, const TechTree& tree) {
  std::vector<RobustnessCell> cells;
  std::vector<HypothesisSource> sources;
  for (double ins : spec.insert_rates) {
    for (double del : spec.delete_rates) {
      HypothesisSource h;
      h.kind = HypothesisSource::Kind::Perturb;
      h.insert_rate = ins;
      h.delete_rate = del;
      sources.push_back(h);
      cells.push_back({"perturb", ins, del, {}});
    }
  }
  HypothesisSource empty, truth;
  empty.kind = HypothesisSource::Kind::Empty;
  truth.kind = HypothesisSource::Kind::Truth;
  sources.push_back(empty);
  cells.push_back({"empty", 0, 0, {}});
  sources.push_back(truth);
  cells.push_back({"truth", 0, 0, {}});

  // Flatten (cell, seed) so that all trials share one pool.
  ExperimentSpec single = spec;
  single.threads = 1;
  const std::size_t n_seeds = spec.seeds.size();
  std::vector<TaskResult> results(cells.size() * n_seeds);
  parallel_for(results.size(), spec.threads, [&](std::size_t k) {
    ExperimentSpec one = single;
    one.seeds = {spec.seeds[k % n_seeds]};
    results[k] = run_task(one, tree, sources[k / n_seeds]).front();
  });
  for (std::size_t k = 0; k < results.size(); ++k) cells[k / n_seeds].runs.push_back(results[k]);
  return cells;
}

std::vector<BaselinePoint> run_baseline_random(const TechTree& tree, double success_prob,
                                               long long max_iterations, std::uint64_t seed,
                                               const StepBudget& budget) {
  require_arg(success_prob >= 0 && success_prob <= 1, "success probability outside [0, 1]");
  std::vector<ItemId> collectables, craftables;
  for (const auto& [id, def] : tree.items()) (def.collectable ? collectables : craftables).push_back(id);
  Rng rng(seed);
  Inventory inventory;
  std::set<ItemId> seen;
  long long steps = 0;
  std::vector<BaselinePoint> out;
  for (long long it = 1; it <= max_iterations && seen.size() < tree.size(); ++it) {
    if (!collectables.empty()) {
      const ItemId& c = collectables[rng.below(collectables.size())];
      Outcome o = tree.attempt_collect(c, inventory, success_prob, rng, budget);
      steps += o.steps;
      if (o.success) seen.insert(c);
    }
    if (!craftables.empty()) {
      const ItemId& k = craftables[rng.below(craftables.size())];
      if (tree.can_craft(k, inventory)) {
        Outcome o = tree.attempt_craft(k, inventory, budget);
        steps += o.steps;
        if (o.success) seen.insert(k);
      } else {
        steps += budget.craft_steps;
      }
    }
    out.push_back({it, seen.size(), steps});
  }
  return out;
}

std::vector<CurvePoint> curve(const std::vector<IterationRecord>& records) {
  std::vector<CurvePoint> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.iteration, r.verified, r.frontier, r.graph, r.cumulative_steps});
  return out;
}

std::vector<std::vector<double>> mean_curve(const std::vector<std::vector<CurvePoint>>& curves) {
  std::size_t longest = 0;
  for (const auto& c : curves) longest = std::max(longest, c.size());
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < longest; ++k) {
    std::vector<double> v, f, g, s;
    for (const auto& c : curves) {
      if (c.empty()) continue;
      const CurvePoint& p = c[std::min(k, c.size() - 1)];
      v.push_back(static_cast<double>(p.verified));
      f.push_back(static_cast<double>(p.frontier));
      g.push_back(static_cast<double>(p.graph));
      s.push_back(static_cast<double>(p.steps));
    }
    rows.push_back({static_cast<double>(k + 1), mean(v), mean(f), mean(g), mean(s)});
  }
  return rows;
}

RunOutput run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const TechTree tree = TechTree::load(spec.tree_path);
  if (spec.goal && !tree.contains(*spec.goal)) throw UnknownItemError(*spec.goal);
  RunOutput out;
  switch (spec.experiment) {
    case Experiment::OpenEnded: out = open_ended_output(spec, tree); break;
    case Experiment::Task: out = task_output(spec, tree); break;
    case Experiment::Robustness: out = robustness_output(spec, tree); break;
    case Experiment::Baseline: out = baseline_output(spec, tree); break;
    case Experiment::Score: out = score_output(spec, tree); break;
  }
  out.files["manifest.json"] = spec.to_json();
  return out;
}

void write_outputs(const RunOutput& output, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string(), ec.message());
  for (const auto& [name, contents] : output.files) {
    const auto path = out_dir / name;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), ec.message());
    detail::write_file(path, contents);
  }
}

RunOutput resume_checkpoint(const std::string& tree_path, std::string_view checkpoint,
                            long long max_iterations) {
  auto tree = std::make_shared<const TechTree>(TechTree::load(tree_path));
  json doc = detail::parse_json_or_throw(checkpoint);
  if (!doc.is_object() || !doc.contains("config") || !doc["config"].is_object()) {
    throw Error(ErrorCode::Parse, "malformed checkpoint: missing config");
  }
  doc["config"]["max_iterations"] = max_iterations;
  Agent agent = Agent::restore(tree, doc.dump());
  const auto records = agent.run_to_completion();
  std::string csv = std::string(kRecordHeader) + "\n";
  for (const auto& r : records) csv += record_row(r) + "\n";
  RunOutput out;
  out.files["resume.csv"] = csv;
  out.files["checkpoint.json"] = agent.checkpoint();
  out.summary = json{{"experiment", "resume"},
                     {"iterations", agent.state().iteration},
                     {"verified", agent.state().awm.verified().size()},
                     {"total_env_steps", agent.state().total_env_steps}}
                    .dump();
  return out;
}

std::string format_double(double v) { return fmt::format("{:.4f}", v); }

}  // namespace deckard::harness
