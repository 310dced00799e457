#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deckard/deckard.h"

namespace {

using nlohmann::json;

struct Failure {
  deckard_status status;
};

void check(deckard_status s) {
  if (s != DECKARD_OK) {
    std::cerr << "error: " << deckard_status_name(s) << ": " << deckard_last_error() << "\n";
    throw Failure{s};
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  deckard_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    throw Failure{DECKARD_IO_ERROR};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    std::cerr << "error: cannot write " << path << "\n";
    throw Failure{DECKARD_IO_ERROR};
  }
}

// "N" expands to 0..N-1; a comma list is taken as given.
std::vector<unsigned long long> expand_seeds(const std::string& text) {
  std::vector<unsigned long long> seeds;
  std::stringstream ss(text);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, ',')) parts.push_back(part);
  auto number = [](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789 ") != std::string::npos) {
      throw CLI::ValidationError("--seeds", "expected a count or a comma-separated list of seeds");
    }
    return std::stoull(s);
  };
  if (parts.size() == 1) {
    const auto n = number(parts[0]);
    if (n == 0) throw CLI::ValidationError("--seeds", "seed count must be positive");
    for (unsigned long long i = 0; i < n; ++i) seeds.push_back(i);
  } else {
    for (const auto& p : parts) seeds.push_back(number(p));
  }
  return seeds;
}

std::vector<double> expand_rates(const std::string& text) {
  std::vector<double> rates;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      rates.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw CLI::ValidationError("rates", "expected comma-separated numbers");
    }
  }
  return rates;
}

struct Common {
  std::string tree = DECKARD_DEFAULT_TREE;
  std::string hypothesis = "truth";
  std::string seeds = "10";
  int c0 = 10;
  long long max_iterations = 1000;
  double p0 = 0.2;
  double pmax = 0.95;
  double tau = 3.0;
  int retry_cap = 10;
  int explore_quantity = 8;
  long long collect_steps = 1000;
  long long craft_steps = 0;
  std::string distractor = "sand";
  std::string aliases;
  int threads = 1;
  std::string out = "results";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--tree", c.tree, "Tech tree JSON file")->capture_default_str();
  cmd->add_option("--hypothesis", c.hypothesis, "file:PATH | perturb:I,D | empty | truth")->capture_default_str();
  cmd->add_option("--seeds", c.seeds, "Seed count N (seeds 0..N-1) or a comma list")->capture_default_str();
  cmd->add_option("--c0", c.c0, "Frontier patience before falling back")->capture_default_str();
  cmd->add_option("--max-iterations", c.max_iterations, "Iteration cap per run")->capture_default_str();
  cmd->add_option("--p0", c.p0, "Initial collect success probability")->capture_default_str();
  cmd->add_option("--pmax", c.pmax, "Asymptotic collect success probability")->capture_default_str();
  cmd->add_option("--tau", c.tau, "Learning-curve time constant")->capture_default_str();
  cmd->add_option("--retry-cap", c.retry_cap, "Consecutive collect failures before giving up")->capture_default_str();
  cmd->add_option("--explore-quantity", c.explore_quantity, "Largest per-item quantity gathered when exploring")
      ->capture_default_str();
  cmd->add_option("--collect-steps", c.collect_steps, "Environment steps per collect attempt")->capture_default_str();
  cmd->add_option("--craft-steps", c.craft_steps, "Environment steps per craft attempt")->capture_default_str();
  cmd->add_option("--distractor", c.distractor, "Item inserted by perturbation")->capture_default_str();
  cmd->add_option("--aliases", c.aliases, "Alias table JSON for recipe-dictionary hypotheses");
  cmd->add_option("--threads", c.threads, "Trials run concurrently")->capture_default_str();
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

json manifest(const std::string& experiment, const Common& c) {
  return {
      {"experiment", experiment},
      {"tree", c.tree},
      {"hypothesis", c.hypothesis},
      {"goal", nullptr},
      {"seeds", expand_seeds(c.seeds)},
      {"c0", c.c0},
      {"max_iterations", c.max_iterations},
      {"p0", c.p0},
      {"pmax", c.pmax},
      {"tau", c.tau},
      {"retry_cap", c.retry_cap},
      {"explore_max_quantity", c.explore_quantity},
      {"collect_steps", c.collect_steps},
      {"craft_steps", c.craft_steps},
      {"distractor", c.distractor},
      {"aliases", c.aliases},
      {"threads", c.threads},
  };
}

void run_manifest(const json& m, const std::string& out) {
  char* summary = nullptr;
  check(deckard_experiment_run(m.dump().c_str(), out.c_str(), &summary));
  std::cout << take(summary) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided exploration over crafting tech trees"};
  app.set_version_flag("--version", std::string(deckard_version()));
  app.require_subcommand(1);

  Common explore_opts, task_opts, robust_opts, base_opts, score_opts;

  auto* explore = app.add_subcommand("explore", "Open-ended exploration curves");
  add_common(explore, explore_opts);

  std::string task_goal;
  auto* task = app.add_subcommand("task", "Goal-directed runs against the empty-hypothesis reference");
  task->add_option("item", task_goal, "Goal item")->required();
  add_common(task, task_opts);

  std::string robust_goal = "stone_pickaxe", insert_rates = "0,0.1,0.2", delete_rates = "0,0.1,0.2";
  auto* robust = app.add_subcommand("robustness", "Goal runs over a grid of injected hypothesis errors");
  add_common(robust, robust_opts);
  robust_opts.seeds = "3";
  robust->add_option("--goal", robust_goal, "Goal item")->capture_default_str();
  robust->add_option("--insert-rates", insert_rates, "Comma list of insertion rates")->capture_default_str();
  robust->add_option("--delete-rates", delete_rates, "Comma list of deletion rates")->capture_default_str();

  auto* base = app.add_subcommand("baseline", "Random explorer without a world model");
  add_common(base, base_opts);

  std::string score_items;
  auto* score = app.add_subcommand("score", "Score a hypothesis against the tree");
  add_common(score, score_opts);
  score_opts.seeds = "1";
  score->add_option("--items", score_items, "Comma list of items to score (default all)");

  std::string parse_input, parse_out = "-", parse_tree, parse_aliases, parse_skipped, endpoint, model = "code-davinci-002",
                           key_env = "DECKARD_LLM_API_KEY", llm_document;
  bool from_llm = false;
  auto* parse = app.add_subcommand("parse", "Recipe dictionary to AWM JSON");
  parse->add_option("input", parse_input, "Dictionary file (ignored with --from-llm)");
  parse->add_option("--tree", parse_tree, "Tech tree whose items are added as nodes");
  parse->add_option("--aliases", parse_aliases, "Alias table JSON");
  parse->add_option("--out", parse_out, "AWM JSON destination ('-' for stdout)")->capture_default_str();
  parse->add_option("--skipped", parse_skipped, "Write skipped entries as JSON here");
  parse->add_flag("--from-llm", from_llm, "Query a completion endpoint for every tree item");
  parse->add_option("--endpoint", endpoint, "Completion URL for --from-llm");
  parse->add_option("--model", model, "Model name for --from-llm")->capture_default_str();
  parse->add_option("--api-key-env", key_env, "Environment variable holding the API key")->capture_default_str();
  parse->add_option("--save-document", llm_document, "Also save the fetched dictionary text");

  std::string rerun_manifest, rerun_out = "results";
  int rerun_threads = 0;
  auto* rerun = app.add_subcommand("rerun", "Repeat an experiment from its manifest.json");
  rerun->add_option("manifest", rerun_manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", rerun_out, "Output directory")->capture_default_str();
  rerun->add_option("--threads", rerun_threads, "Override the thread count");

  std::string resume_checkpoint, resume_tree = DECKARD_DEFAULT_TREE, resume_out = "results";
  long long resume_iterations = 0;
  auto* resume = app.add_subcommand("resume", "Continue an agent from a checkpoint");
  resume->add_option("checkpoint", resume_checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  resume->add_option("--tree", resume_tree, "Tech tree JSON file")->capture_default_str();
  resume->add_option("--max-iterations", resume_iterations, "Total iteration cap")->required();
  resume->add_option("--out", resume_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*explore) {
      run_manifest(manifest("open_ended", explore_opts), explore_opts.out);
    } else if (*task) {
      json m = manifest("task", task_opts);
      m["goal"] = task_goal;
      run_manifest(m, task_opts.out);
    } else if (*robust) {
      json m = manifest("robustness", robust_opts);
      m["goal"] = robust_goal;
      m["insert_rates"] = expand_rates(insert_rates);
      m["delete_rates"] = expand_rates(delete_rates);
      run_manifest(m, robust_opts.out);
    } else if (*base) {
      run_manifest(manifest("baseline", base_opts), base_opts.out);
    } else if (*score) {
      json m = manifest("score", score_opts);
      std::vector<std::string> items;
      std::stringstream ss(score_items);
      for (std::string part; std::getline(ss, part, ',');) {
        if (!part.empty()) items.push_back(part);
      }
      m["subset"] = items;
      run_manifest(m, score_opts.out);
    } else if (*parse) {
      deckard_tree* tree = nullptr;
      if (!parse_tree.empty()) check(deckard_tree_load(parse_tree.c_str(), &tree));
      std::string text;
      if (from_llm) {
        if (endpoint.empty() || tree == nullptr) {
          std::cerr << "error: --from-llm needs --endpoint and --tree\n";
          deckard_tree_free(tree);
          return 2;
        }
        char* serialized = nullptr;
        check(deckard_tree_serialize(tree, &serialized));
        json items = json::array();
        const json tree_doc = json::parse(take(serialized));
        for (const auto& [id, def] : tree_doc.items()) items.push_back(id);
        char* document = nullptr;
        char* errors = nullptr;
        check(deckard_fetch_llm_hypothesis(endpoint.c_str(), model.c_str(), key_env.c_str(),
                                           items.dump().c_str(), &document, &errors));
        text = take(document);
        const std::string errs = take(errors);
        if (errs != "[]") std::cerr << "warning: failed items: " << errs << "\n";
        if (!llm_document.empty()) spill(llm_document, text);
      } else {
        if (parse_input.empty()) {
          std::cerr << "error: parse needs an input file\n";
          deckard_tree_free(tree);
          return 2;
        }
        text = slurp(parse_input);
      }
      const std::string aliases = parse_aliases.empty() ? "" : slurp(parse_aliases);
      deckard_awm* awm = nullptr;
      char* skipped = nullptr;
      const deckard_status s = deckard_awm_from_recipe_dict(
          text.c_str(), parse_aliases.empty() ? nullptr : aliases.c_str(), tree, &awm, &skipped);
      deckard_tree_free(tree);
      check(s);
      char* awm_json = nullptr;
      const deckard_status s2 = deckard_awm_to_json(awm, &awm_json);
      deckard_awm_free(awm);
      const std::string skipped_text = take(skipped);
      check(s2);
      spill(parse_out, take(awm_json));
      if (!parse_skipped.empty()) spill(parse_skipped, skipped_text + "\n");
      const auto skipped_list = json::parse(skipped_text);
      if (!skipped_list.empty()) std::cerr << "skipped " << skipped_list.size() << " entries\n";
    } else if (*rerun) {
      json m = json::parse(slurp(rerun_manifest), nullptr, false);
      if (m.is_discarded() || !m.is_object()) {
        std::cerr << "error: " << rerun_manifest << " is not a JSON object\n";
        return 1;
      }
      if (rerun_threads > 0) m["threads"] = rerun_threads;
      run_manifest(m, rerun_out);
    } else if (*resume) {
      char* summary = nullptr;
      check(deckard_resume(resume_tree.c_str(), slurp(resume_checkpoint).c_str(), resume_iterations,
                           resume_out.c_str(), &summary));
      std::cout << take(summary) << "\n";
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
