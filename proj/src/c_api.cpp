#include "deckard/deckard.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "deckard/agent.hpp"
#include "deckard/errors.hpp"
#include "deckard/harness.hpp"
#include "deckard/hypothesis.hpp"
#include "deckard/llm_client.hpp"
#include "json_util.hpp"

struct deckard_tree {
  std::shared_ptr<const deckard::TechTree> tree;
};

struct deckard_awm {
  deckard::Awm awm;
};

struct deckard_agent {
  std::shared_ptr<const deckard::TechTree> tree;
  std::unique_ptr<deckard::Agent> agent;
  deckard::IterationRecord last;
  std::string last_verified;
};

namespace {

thread_local std::string g_last_error;

deckard_status status_for(deckard::ErrorCode code) {
  switch (code) {
    case deckard::ErrorCode::InvalidArgument: return DECKARD_INVALID_ARGUMENT;
    case deckard::ErrorCode::Parse: return DECKARD_PARSE_ERROR;
    case deckard::ErrorCode::Validation: return DECKARD_VALIDATION_ERROR;
    case deckard::ErrorCode::UnknownItem: return DECKARD_UNKNOWN_ITEM;
    case deckard::ErrorCode::Io: return DECKARD_IO_ERROR;
    case deckard::ErrorCode::Transport: return DECKARD_TRANSPORT_ERROR;
    case deckard::ErrorCode::State: return DECKARD_STATE_ERROR;
  }
  return DECKARD_INTERNAL_ERROR;
}

deckard_status fail(deckard_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
deckard_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return DECKARD_OK;
  } catch (const deckard::Error& e) {
    return fail(status_for(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(DECKARD_PARSE_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DECKARD_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(DECKARD_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(DECKARD_INTERNAL_ERROR, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* name) {
  if (p == nullptr) throw deckard::Error(deckard::ErrorCode::InvalidArgument, std::string(name) + " is null");
}

}  // namespace

extern "C" {

const char* deckard_version(void) { return DECKARD_VERSION_STRING; }

const char* deckard_last_error(void) { return g_last_error.c_str(); }

const char* deckard_status_name(deckard_status status) {
  switch (status) {
    case DECKARD_OK: return "ok";
    case DECKARD_INVALID_ARGUMENT: return "invalid argument";
    case DECKARD_PARSE_ERROR: return "parse error";
    case DECKARD_VALIDATION_ERROR: return "validation error";
    case DECKARD_UNKNOWN_ITEM: return "unknown item";
    case DECKARD_IO_ERROR: return "i/o error";
    case DECKARD_TRANSPORT_ERROR: return "transport error";
    case DECKARD_STATE_ERROR: return "state error";
    case DECKARD_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

void deckard_string_free(char* s) { std::free(s); }

deckard_status deckard_tree_load(const char* path, deckard_tree** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new deckard_tree{std::make_shared<const deckard::TechTree>(deckard::TechTree::load(path))};
  });
}

deckard_status deckard_tree_parse(const char* json, deckard_tree** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new deckard_tree{std::make_shared<const deckard::TechTree>(deckard::TechTree::parse(json))};
  });
}

deckard_status deckard_tree_serialize(const deckard_tree* tree, char** out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = dup_string(tree->tree->serialize());
  });
}

size_t deckard_tree_item_count(const deckard_tree* tree) { return tree ? tree->tree->size() : 0; }

void deckard_tree_free(deckard_tree* tree) { delete tree; }

deckard_status deckard_awm_ground_truth(const deckard_tree* tree, deckard_awm** out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = new deckard_awm{deckard::ground_truth_awm(*tree->tree)};
  });
}

deckard_status deckard_awm_empty(const deckard_tree* tree, deckard_awm** out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = new deckard_awm{deckard::empty_hypothesis(tree->tree->ids())};
  });
}

deckard_status deckard_awm_perturb(const deckard_tree* tree, double insert_rate, double delete_rate,
                                   const char* distractor, uint64_t seed, deckard_awm** out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    deckard::ErrorSpec spec;
    spec.insert_rate = insert_rate;
    spec.delete_rate = delete_rate;
    if (distractor != nullptr) spec.distractor = distractor;
    spec.seed = seed;
    *out = new deckard_awm{deckard::perturb_ground_truth(*tree->tree, spec)};
  });
}

deckard_status deckard_awm_from_recipe_dict(const char* text, const char* aliases_json,
                                            const deckard_tree* universe, deckard_awm** out,
                                            char** skipped_json) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    const deckard::AliasTable aliases =
        aliases_json ? deckard::AliasTable::from_json(aliases_json) : deckard::AliasTable::defaults();
    const auto parsed = deckard::parse_recipe_dict(text);
    const std::set<deckard::ItemId> nodes = universe ? universe->tree->ids() : std::set<deckard::ItemId>{};
    deckard::Awm awm = deckard::build_hypothesized_awm(deckard::normalize_aliases(parsed.entries, aliases), nodes);
    if (skipped_json != nullptr) {
      nlohmann::json skipped = nlohmann::json::array();
      for (const auto& s : parsed.skipped) {
        skipped.push_back({{"key", s.key}, {"reason", s.reason}, {"line", s.line}});
      }
      *skipped_json = dup_string(skipped.dump());
    }
    *out = new deckard_awm{std::move(awm)};
  });
}

deckard_status deckard_awm_parse_json(const char* json, deckard_awm** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new deckard_awm{deckard::Awm::from_json(json)};
  });
}

deckard_status deckard_awm_to_json(const deckard_awm* awm, char** out) {
  return guarded([&] {
    need(awm, "awm");
    need(out, "out");
    *out = dup_string(awm->awm.to_json());
  });
}

size_t deckard_awm_node_count(const deckard_awm* awm) { return awm ? awm->awm.nodes().size() : 0; }
size_t deckard_awm_edge_count(const deckard_awm* awm) { return awm ? awm->awm.edge_count() : 0; }
size_t deckard_awm_verified_count(const deckard_awm* awm) { return awm ? awm->awm.verified().size() : 0; }

void deckard_awm_free(deckard_awm* awm) { delete awm; }

deckard_status deckard_score_hypothesis(const deckard_awm* predicted, const deckard_tree* tree,
                                        const char* const* subset, size_t subset_len,
                                        deckard_accuracy_report* out) {
  return guarded([&] {
    need(predicted, "predicted");
    need(tree, "tree");
    need(out, "out");
    deckard::AccuracyReport r;
    if (subset == nullptr) {
      r = deckard::score_hypothesis(predicted->awm, *tree->tree);
    } else {
      std::set<deckard::ItemId> items;
      for (size_t i = 0; i < subset_len; ++i) {
        need(subset[i], "subset entry");
        items.insert(subset[i]);
      }
      r = deckard::score_hypothesis(predicted->awm, *tree->tree, items);
    }
    *out = deckard_accuracy_report{r.items,          r.collectable_vs_craftable_acc,
                                   r.workbench_acc,  r.recipe_items_acc,
                                   r.recipe_exact_acc, r.pct_items_inserted_deps,
                                   r.pct_items_missing_deps, r.quantity_pairs,
                                   r.qty_abs_error,  r.qty_avg_error,
                                   r.qty_std};
  });
}

deckard_status deckard_fetch_llm_hypothesis(const char* url, const char* model, const char* api_key_env,
                                            const char* items_json, char** document, char** errors_json) {
  return guarded([&] {
    need(url, "url");
    need(items_json, "items_json");
    need(document, "document");
    deckard::LlmEndpoint endpoint;
    endpoint.url = url;
    if (model != nullptr) endpoint.model = model;
    if (api_key_env != nullptr) endpoint.api_key_env = api_key_env;
    const auto items = deckard::detail::parse_json_or_throw(items_json).get<std::vector<std::string>>();
    const auto result = deckard::fetch_llm_hypothesis(endpoint, deckard::recipe_prompt(), items);
    if (errors_json != nullptr) {
      nlohmann::json errors = nlohmann::json::array();
      for (const auto& [item, msg] : result.errors) errors.push_back({{"item", item}, {"error", msg}});
      *errors_json = dup_string(errors.dump());
    }
    *document = dup_string(result.document);
  });
}

deckard_status deckard_agent_create(const deckard_tree* tree, const deckard_awm* initial,
                                    const char* config_json, deckard_agent** out) {
  return guarded([&] {
    need(tree, "tree");
    need(initial, "initial");
    need(config_json, "config_json");
    need(out, "out");
    auto agent = std::make_unique<deckard_agent>();
    agent->tree = tree->tree;
    agent->agent = std::make_unique<deckard::Agent>(tree->tree, initial->awm,
                                                    deckard::AgentConfig::from_json(config_json));
    *out = agent.release();
  });
}

deckard_status deckard_agent_step(deckard_agent* agent, deckard_iteration* out, int* done) {
  return guarded([&] {
    need(agent, "agent");
    need(out, "out");
    need(done, "done");
    auto rec = agent->agent->step();
    if (!rec) {
      *done = 1;
      return;
    }
    *done = 0;
    agent->last = std::move(*rec);
    agent->last_verified = agent->last.newly_verified.value_or("");
    const auto& r = agent->last;
    *out = deckard_iteration{r.iteration,  r.sampled_target.c_str(), agent->last_verified.c_str(),
                             r.branch_length, r.fallback ? 1 : 0,  r.success ? 1 : 0,
                             r.env_steps,  r.cumulative_steps,       r.verified,
                             r.frontier,   r.graph};
  });
}

deckard_status deckard_agent_awm(const deckard_agent* agent, deckard_awm** out) {
  return guarded([&] {
    need(agent, "agent");
    need(out, "out");
    *out = new deckard_awm{agent->agent->state().awm};
  });
}

size_t deckard_agent_policy_count(const deckard_agent* agent) {
  return agent ? agent->agent->state().bank.size() : 0;
}

deckard_status deckard_agent_checkpoint(const deckard_agent* agent, char** out) {
  return guarded([&] {
    need(agent, "agent");
    need(out, "out");
    *out = dup_string(agent->agent->checkpoint());
  });
}

deckard_status deckard_agent_restore(const deckard_tree* tree, const char* checkpoint, deckard_agent** out) {
  return guarded([&] {
    need(tree, "tree");
    need(checkpoint, "checkpoint");
    need(out, "out");
    auto agent = std::make_unique<deckard_agent>();
    agent->tree = tree->tree;
    agent->agent = std::make_unique<deckard::Agent>(deckard::Agent::restore(tree->tree, checkpoint));
    *out = agent.release();
  });
}

void deckard_agent_free(deckard_agent* agent) { delete agent; }

deckard_status deckard_experiment_run(const char* manifest_json, const char* out_dir, char** summary) {
  return guarded([&] {
    need(manifest_json, "manifest_json");
    need(out_dir, "out_dir");
    const auto spec = deckard::harness::ExperimentSpec::from_json(manifest_json);
    const auto output = deckard::harness::run_experiment(spec);
    deckard::harness::write_outputs(output, out_dir);
    if (summary != nullptr) *summary = dup_string(output.summary);
  });
}

deckard_status deckard_resume(const char* tree_path, const char* checkpoint, long long max_iterations,
                              const char* out_dir, char** summary) {
  return guarded([&] {
    need(tree_path, "tree_path");
    need(checkpoint, "checkpoint");
    need(out_dir, "out_dir");
    const auto output = deckard::harness::resume_checkpoint(tree_path, checkpoint, max_iterations);
    deckard::harness::write_outputs(output, out_dir);
    if (summary != nullptr) *summary = dup_string(output.summary);
  });
}

}  // extern "C"
