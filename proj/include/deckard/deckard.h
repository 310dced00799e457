#ifndef DECKARD_DECKARD_H
#define DECKARD_DECKARD_H

#include <stddef.h>
#include <stdint.h>

#if defined(DECKARD_BUILDING_LIBRARY)
#define DECKARD_API __attribute__((visibility("default")))
#else
#define DECKARD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum deckard_status {
  DECKARD_OK = 0,
  DECKARD_INVALID_ARGUMENT = 1,
  DECKARD_PARSE_ERROR = 2,
  DECKARD_VALIDATION_ERROR = 3,
  DECKARD_UNKNOWN_ITEM = 4,
  DECKARD_IO_ERROR = 5,
  DECKARD_TRANSPORT_ERROR = 6,
  DECKARD_STATE_ERROR = 7,
  DECKARD_INTERNAL_ERROR = 99
} deckard_status;

typedef struct deckard_tree deckard_tree;
typedef struct deckard_awm deckard_awm;
typedef struct deckard_agent deckard_agent;

/* Strings returned through `char**` out-parameters are owned by the caller
   and released with deckard_string_free. */

DECKARD_API const char* deckard_version(void);
/* Message of the last failed call on this thread; "" if none. */
DECKARD_API const char* deckard_last_error(void);
DECKARD_API const char* deckard_status_name(deckard_status status);
DECKARD_API void deckard_string_free(char* s);

/* Tech trees */
DECKARD_API deckard_status deckard_tree_load(const char* path, deckard_tree** out);
DECKARD_API deckard_status deckard_tree_parse(const char* json, deckard_tree** out);
DECKARD_API deckard_status deckard_tree_serialize(const deckard_tree* tree, char** out);
DECKARD_API size_t deckard_tree_item_count(const deckard_tree* tree);
DECKARD_API void deckard_tree_free(deckard_tree* tree);

/* Abstract world models */
DECKARD_API deckard_status deckard_awm_ground_truth(const deckard_tree* tree, deckard_awm** out);
DECKARD_API deckard_status deckard_awm_empty(const deckard_tree* tree, deckard_awm** out);
DECKARD_API deckard_status deckard_awm_perturb(const deckard_tree* tree, double insert_rate,
                                               double delete_rate, const char* distractor,
                                               uint64_t seed, deckard_awm** out);
/* Parses a recipe dictionary. `aliases_json` may be NULL for the default
   alias table and `universe` may be NULL for no extra nodes. `skipped_json`
   may be NULL; otherwise it receives a JSON array of skipped entries. */
DECKARD_API deckard_status deckard_awm_from_recipe_dict(const char* text, const char* aliases_json,
                                                        const deckard_tree* universe,
                                                        deckard_awm** out, char** skipped_json);
DECKARD_API deckard_status deckard_awm_parse_json(const char* json, deckard_awm** out);
DECKARD_API deckard_status deckard_awm_to_json(const deckard_awm* awm, char** out);
DECKARD_API size_t deckard_awm_node_count(const deckard_awm* awm);
DECKARD_API size_t deckard_awm_edge_count(const deckard_awm* awm);
DECKARD_API size_t deckard_awm_verified_count(const deckard_awm* awm);
DECKARD_API void deckard_awm_free(deckard_awm* awm);

typedef struct deckard_accuracy_report {
  size_t items;
  double collectable_vs_craftable_acc;
  double workbench_acc;
  double recipe_items_acc;
  double recipe_exact_acc;
  double pct_items_inserted_deps;
  double pct_items_missing_deps;
  size_t quantity_pairs;
  double qty_abs_error;
  double qty_avg_error;
  double qty_std;
} deckard_accuracy_report;

/* `subset` is an array of `subset_len` item names; NULL scores every item. */
DECKARD_API deckard_status deckard_score_hypothesis(const deckard_awm* predicted,
                                                    const deckard_tree* tree,
                                                    const char* const* subset, size_t subset_len,
                                                    deckard_accuracy_report* out);

/* Queries a completion endpoint once per item. The API key is read from the
   environment variable named by `api_key_env`. `items` is a JSON array of
   item names. The assembled recipe document is returned in `document`. */
DECKARD_API deckard_status deckard_fetch_llm_hypothesis(const char* url, const char* model,
                                                        const char* api_key_env,
                                                        const char* items_json,
                                                        char** document, char** errors_json);

/* Agents. `config_json` uses the agent configuration keys (mode, goal, c0,
   max_iterations, p0, pmax, tau, retry_cap, seed, ...). */
DECKARD_API deckard_status deckard_agent_create(const deckard_tree* tree, const deckard_awm* initial,
                                                const char* config_json, deckard_agent** out);

typedef struct deckard_iteration {
  long long iteration;
  const char* sampled_target;
  const char* newly_verified; /* "" when nothing was verified */
  size_t branch_length;
  int fallback;
  int success;
  long long env_steps;
  long long cumulative_steps;
  size_t verified;
  size_t frontier;
  size_t graph;
} deckard_iteration;

/* Runs one Dream/Wake iteration. Sets *done (and leaves `out` untouched)
   once the run has finished. Strings in `out` stay valid until the next
   call on the same agent. */
DECKARD_API deckard_status deckard_agent_step(deckard_agent* agent, deckard_iteration* out, int* done);
DECKARD_API deckard_status deckard_agent_awm(const deckard_agent* agent, deckard_awm** out);
DECKARD_API size_t deckard_agent_policy_count(const deckard_agent* agent);
DECKARD_API deckard_status deckard_agent_checkpoint(const deckard_agent* agent, char** out);
DECKARD_API deckard_status deckard_agent_restore(const deckard_tree* tree, const char* checkpoint,
                                                 deckard_agent** out);
DECKARD_API void deckard_agent_free(deckard_agent* agent);

/* Experiments. `manifest_json` is an experiment manifest; outputs are
   written below `out_dir` and a JSON summary is returned. */
DECKARD_API deckard_status deckard_experiment_run(const char* manifest_json, const char* out_dir,
                                                  char** summary);
DECKARD_API deckard_status deckard_resume(const char* tree_path, const char* checkpoint,
                                          long long max_iterations, const char* out_dir,
                                          char** summary);

#ifdef __cplusplus
}
#endif

#endif
