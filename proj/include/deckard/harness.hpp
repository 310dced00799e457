#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deckard/agent.hpp"
#include "deckard/hypothesis.hpp"
#include "deckard/tech_tree.hpp"

namespace deckard::harness {

enum class Experiment { OpenEnded, Task, Robustness, Baseline, Score };

const char* to_string(Experiment e);
Experiment experiment_from_string(std::string_view s);

// Where the initial AWM comes from: `file:PATH` (Awm JSON or a recipe
// dictionary), `perturb:I,D` (ground truth with injected errors), `empty`, or
// `truth`.
struct HypothesisSource {
  enum class Kind { File, Perturb, Empty, Truth };
  Kind kind = Kind::Truth;
  std::string path;
  double insert_rate = 0.0;
  double delete_rate = 0.0;

  static HypothesisSource parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const HypothesisSource&) const = default;
};

struct ExperimentSpec {
  Experiment experiment = Experiment::OpenEnded;
  std::string tree_path;
  HypothesisSource hypothesis;
  std::optional<ItemId> goal;
  std::vector<std::uint64_t> seeds{0};
  int c0 = 10;
  long long max_iterations = 1000;
  LearnerConfig learner;
  StepBudget budget;
  int retry_cap = 10;
  int explore_max_quantity = 8;
  std::vector<double> insert_rates;
  std::vector<double> delete_rates;
  ItemId distractor = "sand";
  std::string aliases_path;      // optional alias table for dictionary files
  std::vector<ItemId> subset;    // score: items to score, all when empty
  int threads = 1;

  void validate() const;
  // Manifest form: every field, keys sorted.
  std::string to_json() const;
  static ExperimentSpec from_json(std::string_view text);
  bool operator==(const ExperimentSpec&) const = default;
};

// "3" means seeds 0,1,2; "4,9,11" is an explicit list.
std::vector<std::uint64_t> parse_seeds(std::string_view text);
std::vector<double> parse_rates(std::string_view text);

AgentConfig agent_config(const ExperimentSpec& spec, std::uint64_t seed, Mode mode);

// Builds the initial AWM for a source. Every tree item is added as a node.
Awm load_hypothesis(const HypothesisSource& source, const TechTree& tree, std::uint64_t seed,
                    const ItemId& distractor = "sand", const std::string& aliases_path = "");

struct CurvePoint {
  long long iteration = 0;
  std::size_t verified = 0;
  std::size_t frontier = 0;
  std::size_t graph = 0;
  long long steps = 0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  std::map<ItemId, long long> discovered_at;  // item -> iteration it was verified
  std::size_t policies_created = 0;
  bool goal_reached = false;
  std::string checkpoint;
};

struct TaskResult {
  std::uint64_t seed = 0;
  bool success = false;
  long long env_steps_to_goal = 0;
  long long iterations = 0;
  std::size_t policies_created = 0;
};

struct RobustnessCell {
  std::string hypothesis;  // "perturb", "empty" or "truth"
  double insert_rate = 0;
  double delete_rate = 0;
  std::vector<TaskResult> runs;
};

struct BaselinePoint {
  long long iteration = 0;
  std::size_t discovered = 0;
  long long steps = 0;
};

// Runs one agent per seed, concurrently when `threads` > 1. Results come
// back in seed order.
std::vector<SeedRun> run_agents(const ExperimentSpec& spec, const TechTree& tree,
                                const HypothesisSource& source, Mode mode);

std::vector<SeedRun> run_open_ended(const ExperimentSpec& spec, const TechTree& tree);
std::vector<TaskResult> run_task(const ExperimentSpec& spec, const TechTree& tree,
                                 const HypothesisSource& source);
std::vector<RobustnessCell> run_robustness(const ExperimentSpec& spec, const TechTree& tree);

// Random explorer with a persistent inventory: each iteration makes one
// uniform collect attempt at fixed probability and one uniform craft attempt.
std::vector<BaselinePoint> run_baseline_random(const TechTree& tree, double success_prob,
                                               long long max_iterations, std::uint64_t seed,
                                               const StepBudget& budget = {});

TaskResult task_result(const SeedRun& run);
std::vector<CurvePoint> curve(const std::vector<IterationRecord>& records);
// Mean over seeds; shorter runs are padded with their final point.
std::vector<std::vector<double>> mean_curve(const std::vector<std::vector<CurvePoint>>& curves);

struct RunOutput {
  std::map<std::string, std::string> files;  // file name -> contents
  std::string summary;                       // JSON
};

RunOutput run_experiment(const ExperimentSpec& spec);
void write_outputs(const RunOutput& output, const std::filesystem::path& out_dir);

// Continues a checkpointed agent up to `max_iterations` in total.
RunOutput resume_checkpoint(const std::string& tree_path, std::string_view checkpoint,
                            long long max_iterations);

std::string format_double(double v);

}  // namespace deckard::harness
