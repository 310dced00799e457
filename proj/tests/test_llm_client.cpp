#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "deckard/errors.hpp"
#include "deckard/hypothesis.hpp"
#include "deckard/llm_client.hpp"

namespace deckard {
namespace {

class MockCompletions : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      auth_ = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      last_prompt_ = body.at("prompt").get<std::string>();
      if (last_prompt_.find("\"broken\": {") != std::string::npos) {
        res.status = 500;
        return;
      }
      // A completion that runs on into the next entry, as models do.
      const std::string text =
          "\n        \"requires_crafting_table\": False,\n        \"requires_furnace\": False,\n"
          "        \"required_tool\": None,\n        \"recipe\": []\n    },\n    \"extra\": {";
      res.set_content(nlohmann::json{{"choices", {{{"text", text}}}}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  LlmEndpoint endpoint() const {
    LlmEndpoint e;
    e.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions";
    e.api_key_env = "DECKARD_TEST_FAKE_KEY";
    e.timeout_seconds = 5;
    return e;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::string auth_;
  std::string last_prompt_;
};

TEST_F(MockCompletions, OneRequestPerItem) {
  ::setenv("DECKARD_TEST_FAKE_KEY", "secret-token", 1);
  const auto result = fetch_llm_hypothesis(endpoint(), recipe_prompt(), {"log", "sand"});
  ::unsetenv("DECKARD_TEST_FAKE_KEY");
  EXPECT_EQ(requests_.load(), 2);
  EXPECT_EQ(result.requests, 2u);
  EXPECT_EQ(auth_, "Bearer secret-token");
  EXPECT_NE(last_prompt_.find("\"diamond_pickaxe\": {"), std::string::npos);
  EXPECT_TRUE(result.errors.empty());
  const auto parsed = parse_recipe_dict(result.document);
  ASSERT_EQ(parsed.entries.size(), 2u);
  EXPECT_EQ(parsed.entries[0].item, "log");
  EXPECT_TRUE(parsed.entries[1].collectable());
  EXPECT_EQ(result.document.find("extra"), std::string::npos);
}

TEST_F(MockCompletions, HttpFailureRecordedPerItem) {
  ::setenv("DECKARD_TEST_FAKE_KEY", "secret-token", 1);
  const auto result = fetch_llm_hypothesis(endpoint(), recipe_prompt(), {"log", "broken"});
  ::unsetenv("DECKARD_TEST_FAKE_KEY");
  ASSERT_EQ(result.errors.size(), 1u);
  EXPECT_EQ(result.errors[0].first, "broken");
  EXPECT_EQ(parse_recipe_dict(result.document).entries.size(), 1u);
}

TEST(LlmClient, UnreachableEndpointIsTransportError) {
  LlmEndpoint e;
  e.url = "http://127.0.0.1:1/v1/completions";
  e.timeout_seconds = 2;
  e.api_key_env = "DECKARD_TEST_FAKE_KEY";
  ::setenv("DECKARD_TEST_FAKE_KEY", "secret-token", 1);
  EXPECT_THROW(fetch_llm_hypothesis(e, recipe_prompt(), {"log"}), TransportError);
  ::unsetenv("DECKARD_TEST_FAKE_KEY");
}

TEST_F(MockCompletions, MissingKeySendsNothing) {
  ::unsetenv("DECKARD_TEST_FAKE_KEY");
  try {
    fetch_llm_hypothesis(endpoint(), recipe_prompt(), {"log"});
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  EXPECT_EQ(requests_.load(), 0);
}

TEST(LlmClient, RejectsUrlWithoutScheme) {
  LlmEndpoint e;
  e.url = "localhost/v1";
  EXPECT_THROW(fetch_llm_hypothesis(e, recipe_prompt(), {"log"}), Error);
}

TEST(LlmClient, TruncatesAtClosingBrace) {
  EXPECT_EQ(truncate_entry_completion("\"recipe\": [{\"item\": \"}\"}]}, \"next\": {"),
            "\"recipe\": [{\"item\": \"}\"}]}");
  EXPECT_EQ(truncate_entry_completion("\"recipe\": ["), "\"recipe\": [");
}

TEST(LlmClient, PromptEndsAfterExamples) {
  const std::string& p = recipe_prompt();
  EXPECT_NE(p.find("\"quantity\": \"3\""), std::string::npos);
  EXPECT_EQ(p.substr(p.size() - 7), "    },\n");
  EXPECT_EQ(parse_recipe_dict(p + "}").entries.size(), 2u);
}

}  // namespace
}  // namespace deckard
