#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "deckard/deckard.h"
#include "support.hpp"

namespace {

using deckard::testing::data_path;
using deckard::testing::read_text;

std::string take(char* s) {
  std::string out = s ? s : "";
  deckard_string_free(s);
  return out;
}

struct Tree {
  deckard_tree* t = nullptr;
  Tree() { EXPECT_EQ(deckard_tree_load(data_path("pickaxe16.json").c_str(), &t), DECKARD_OK); }
  ~Tree() { deckard_tree_free(t); }
};

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(deckard_version(), DECKARD_VERSION_STRING);
  EXPECT_STREQ(deckard_status_name(DECKARD_OK), "ok");
  EXPECT_STREQ(deckard_status_name(DECKARD_PARSE_ERROR), "parse error");
}

TEST(CApi, TreeLoadAndErrors) {
  Tree tree;
  EXPECT_EQ(deckard_tree_item_count(tree.t), 16u);
  char* text = nullptr;
  ASSERT_EQ(deckard_tree_serialize(tree.t, &text), DECKARD_OK);
  deckard_tree* again = nullptr;
  EXPECT_EQ(deckard_tree_parse(take(text).c_str(), &again), DECKARD_OK);
  EXPECT_EQ(deckard_tree_item_count(again), 16u);
  deckard_tree_free(again);

  deckard_tree* bad = nullptr;
  EXPECT_EQ(deckard_tree_parse("{", &bad), DECKARD_PARSE_ERROR);
  EXPECT_EQ(bad, nullptr);
  EXPECT_NE(std::string(deckard_last_error()), "");
  EXPECT_EQ(deckard_tree_parse(R"({"a": {"collectable": false, "recipe": [{"item": "zz", "quantity": 1}]}})", &bad),
            DECKARD_VALIDATION_ERROR);
  EXPECT_EQ(deckard_tree_load("/nonexistent/tree.json", &bad), DECKARD_IO_ERROR);
  EXPECT_EQ(deckard_tree_parse(nullptr, &bad), DECKARD_INVALID_ARGUMENT);
}

TEST(CApi, AwmBuildersAndScore) {
  Tree tree;
  deckard_awm* truth = nullptr;
  ASSERT_EQ(deckard_awm_ground_truth(tree.t, &truth), DECKARD_OK);
  EXPECT_EQ(deckard_awm_node_count(truth), 16u);
  EXPECT_EQ(deckard_awm_verified_count(truth), 0u);

  deckard_accuracy_report report{};
  ASSERT_EQ(deckard_score_hypothesis(truth, tree.t, nullptr, 0, &report), DECKARD_OK);
  EXPECT_DOUBLE_EQ(report.recipe_exact_acc, 100.0);
  const char* subset[] = {"log", "planks"};
  ASSERT_EQ(deckard_score_hypothesis(truth, tree.t, subset, 2, &report), DECKARD_OK);
  EXPECT_EQ(report.items, 2u);
  const char* unknown[] = {"obsidian"};
  EXPECT_EQ(deckard_score_hypothesis(truth, tree.t, unknown, 1, &report), DECKARD_UNKNOWN_ITEM);

  char* json = nullptr;
  ASSERT_EQ(deckard_awm_to_json(truth, &json), DECKARD_OK);
  deckard_awm* copy = nullptr;
  ASSERT_EQ(deckard_awm_parse_json(take(json).c_str(), &copy), DECKARD_OK);
  EXPECT_EQ(deckard_awm_edge_count(copy), deckard_awm_edge_count(truth));
  deckard_awm_free(copy);

  deckard_awm* empty = nullptr;
  ASSERT_EQ(deckard_awm_empty(tree.t, &empty), DECKARD_OK);
  EXPECT_EQ(deckard_awm_edge_count(empty), 0u);
  deckard_awm_free(empty);

  deckard_awm* p1 = nullptr;
  deckard_awm* p2 = nullptr;
  ASSERT_EQ(deckard_awm_perturb(tree.t, 0.3, 0.3, "sand", 5, &p1), DECKARD_OK);
  ASSERT_EQ(deckard_awm_perturb(tree.t, 0.3, 0.3, "sand", 5, &p2), DECKARD_OK);
  char* j1 = nullptr;
  char* j2 = nullptr;
  deckard_awm_to_json(p1, &j1);
  deckard_awm_to_json(p2, &j2);
  EXPECT_EQ(take(j1), take(j2));
  deckard_awm_free(p1);
  deckard_awm_free(p2);
  EXPECT_EQ(deckard_awm_perturb(tree.t, 2.0, 0, "sand", 0, &p1), DECKARD_INVALID_ARGUMENT);

  const std::string dict = read_text(data_path("recipes_pickaxe16.txt"));
  deckard_awm* parsed = nullptr;
  char* skipped = nullptr;
  ASSERT_EQ(deckard_awm_from_recipe_dict(dict.c_str(), nullptr, tree.t, &parsed, &skipped), DECKARD_OK);
  EXPECT_NE(take(skipped).find("flower"), std::string::npos);
  EXPECT_GE(deckard_awm_node_count(parsed), 16u);
  deckard_awm_free(parsed);
  EXPECT_EQ(deckard_awm_from_recipe_dict("[1, 2]", nullptr, nullptr, &parsed, nullptr), DECKARD_PARSE_ERROR);
  deckard_awm_free(truth);
}

TEST(CApi, AgentStepsCheckpointAndRestore) {
  Tree tree;
  deckard_awm* truth = nullptr;
  ASSERT_EQ(deckard_awm_ground_truth(tree.t, &truth), DECKARD_OK);
  deckard_agent* agent = nullptr;
  ASSERT_EQ(deckard_agent_create(tree.t, truth, R"({"mode": "goal", "goal": "stone_pickaxe", "p0": 1.0,
                                                    "pmax": 1.0})",
                                 &agent),
            DECKARD_OK);
  deckard_iteration it{};
  int done = 0;
  ASSERT_EQ(deckard_agent_step(agent, &it, &done), DECKARD_OK);
  EXPECT_EQ(done, 0);
  EXPECT_STREQ(it.sampled_target, "log");
  EXPECT_STREQ(it.newly_verified, "log");
  char* cp = nullptr;
  ASSERT_EQ(deckard_agent_checkpoint(agent, &cp), DECKARD_OK);
  const std::string checkpoint = take(cp);

  int steps = 1;
  while (true) {
    ASSERT_EQ(deckard_agent_step(agent, &it, &done), DECKARD_OK);
    if (done) break;
    ++steps;
  }
  EXPECT_EQ(steps, 7);
  EXPECT_EQ(deckard_agent_policy_count(agent), 2u);
  deckard_awm* learned = nullptr;
  ASSERT_EQ(deckard_agent_awm(agent, &learned), DECKARD_OK);
  EXPECT_EQ(deckard_awm_verified_count(learned), 7u);
  deckard_awm_free(learned);

  deckard_agent* resumed = nullptr;
  ASSERT_EQ(deckard_agent_restore(tree.t, checkpoint.c_str(), &resumed), DECKARD_OK);
  int rest = 0;
  while (deckard_agent_step(resumed, &it, &done) == DECKARD_OK && !done) ++rest;
  EXPECT_EQ(rest, 6);
  deckard_agent_free(resumed);
  deckard_agent_free(agent);

  EXPECT_EQ(deckard_agent_create(tree.t, truth, R"({"mode": "goal"})", &agent), DECKARD_INVALID_ARGUMENT);
  EXPECT_EQ(deckard_agent_create(tree.t, truth, R"({"mode": "goal", "goal": "obsidian"})", &agent),
            DECKARD_UNKNOWN_ITEM);
  EXPECT_EQ(deckard_agent_create(tree.t, truth, "nope", &agent), DECKARD_PARSE_ERROR);
  EXPECT_EQ(deckard_agent_restore(tree.t, "{}", &agent), DECKARD_PARSE_ERROR);
  deckard_awm_free(truth);
}

TEST(CApi, ExperimentRunWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "deckard_c_api_run";
  std::filesystem::remove_all(dir);
  const std::string manifest = R"({"experiment": "task", "tree": ")" + data_path("pickaxe16.json") +
                               R"(", "goal": "stone_pickaxe", "seeds": [0, 1], "hypothesis": "truth"})";
  char* summary = nullptr;
  ASSERT_EQ(deckard_experiment_run(manifest.c_str(), dir.string().c_str(), &summary), DECKARD_OK)
      << deckard_last_error();
  EXPECT_NE(take(summary).find("task"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "task.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_EQ(deckard_experiment_run(R"({"experiment": "warp"})", dir.string().c_str(), &summary),
            DECKARD_INVALID_ARGUMENT);
  std::filesystem::remove_all(dir);
}

TEST(CApi, NullArguments) {
  EXPECT_EQ(deckard_tree_item_count(nullptr), 0u);
  EXPECT_EQ(deckard_awm_node_count(nullptr), 0u);
  deckard_tree_free(nullptr);
  deckard_awm_free(nullptr);
  deckard_agent_free(nullptr);
  deckard_string_free(nullptr);
  EXPECT_EQ(deckard_agent_step(nullptr, nullptr, nullptr), DECKARD_INVALID_ARGUMENT);
}

}  // namespace
