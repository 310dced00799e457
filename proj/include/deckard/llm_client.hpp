#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deckard/tech_tree.hpp"

namespace deckard {

struct LlmEndpoint {
  // Full URL of a text-completion route, e.g. http://localhost:8000/v1/completions
  std::string url;
  std::string model = "code-davinci-002";
  // Environment variable holding the bearer token; unset means no auth header.
  std::string api_key_env = "DECKARD_LLM_API_KEY";
  int max_tokens = 256;
  int timeout_seconds = 60;
};

struct LlmFetchResult {
  std::string document;
  std::vector<std::pair<ItemId, std::string>> errors;
  std::size_t requests = 0;
};

// Few-shot recipe-dictionary prompt with the diamond_pickaxe and diamond
// example entries; each request appends `"<item>": {`.
const std::string& recipe_prompt();

// Cuts a continuation of `"<item>": {` just after the brace that closes it.
std::string truncate_entry_completion(std::string_view completion);

// One completion request per item, concatenated into a single dict-literal
// document. Connection failures throw TransportError before anything is
// returned; HTTP-level failures are recorded per item and skipped.
LlmFetchResult fetch_llm_hypothesis(const LlmEndpoint& endpoint, std::string_view prompt,
                                    const std::vector<ItemId>& items);

}  // namespace deckard
