#include "deckard/llm_client.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "deckard/errors.hpp"

namespace deckard {

const std::string& recipe_prompt() {
  static const std::string prompt = R"(# Create a nested python dictionary containing crafting recipes and requirements for minecraft items.
# Each crafting item should have a recipe and booleans indicating whether a furnace or crafting table is required.
# Non craftable blocks should have their recipe set to an empty list and indicate which tool is required to mine.

minecraft_info = {
    "diamond_pickaxe": {
        "requires_crafting_table": True,
        "requires_furnace": False,
        "required_tool": None,
        "recipe": [
            {
                "item": "stick",
                "quantity": "2"
            },
            {
                "item": "diamond",
                "quantity": "3"
            }
        ]
    },
    "diamond": {
        "requires_crafting_table": False,
        "requires_furnace": False,
        "required_tool": "iron_pickaxe",
        "recipe": []
    },
)";
  return prompt;
}

std::string truncate_entry_completion(std::string_view completion) {
  int depth = 1;
  char quote = 0;
  for (std::size_t i = 0; i < completion.size(); ++i) {
    char c = completion[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return std::string(completion.substr(0, i + 1));
    }
  }
  return std::string(completion);
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint URL needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

LlmFetchResult fetch_llm_hypothesis(const LlmEndpoint& endpoint, std::string_view prompt,
                                    const std::vector<ItemId>& items) {
  auto [base, path] = split_url(endpoint.url);
  httplib::Client client(base);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);
  const char* key = std::getenv(endpoint.api_key_env.c_str());
  if (!key || !*key) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("environment variable {} holding the API key is not set", endpoint.api_key_env));
  }
  httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

  LlmFetchResult result;
  std::string body_text = "minecraft_info = {\n";
  for (const auto& item : items) {
    std::string opener = fmt::format("    \"{}\": {{", item);
    nlohmann::json request = {
        {"model", endpoint.model},
        {"prompt", std::string(prompt) + opener},
        {"max_tokens", endpoint.max_tokens},
        {"temperature", 0},
        {"stop", {"\n    \""}},
    };
    ++result.requests;
    auto response = client.Post(path, headers, request.dump(), "application/json");
    if (!response) {
      throw TransportError(fmt::format("request for '{}' to {} failed: {}", item, endpoint.url,
                                       httplib::to_string(response.error())));
    }
    if (response->status != 200) {
      result.errors.emplace_back(item, fmt::format("HTTP {}", response->status));
      continue;
    }
    std::string text;
    try {
      auto doc = nlohmann::json::parse(response->body);
      text = doc.at("choices").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      result.errors.emplace_back(item, std::string("malformed completion response: ") + e.what());
      continue;
    }
    body_text += opener + truncate_entry_completion(text) + ",\n";
  }
  body_text += "}\n";
  result.document = std::move(body_text);
  return result;
}

}  // namespace deckard
