#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/evaluation.hpp"
#include "situgen/interleaved.hpp"
#include "test_util.hpp"

using namespace situgen;
using nlohmann::json;

namespace {

QAPair make_qa(std::string id, std::string question, std::string answer, Category category) {
  QAPair qa;
  qa.qa_id = std::move(id);
  qa.scene_id = "s";
  qa.situation_id = "s_s0";
  qa.question = interleave(question);
  qa.answer = std::move(answer);
  qa.category = category;
  return qa;
}

std::string response_of(const std::string& prompt) {
  const auto at = prompt.find("\nResponse: ");
  const auto end = prompt.find('\n', at + 1);
  return prompt.substr(at + 11, end - at - 11);
}

int fake_score(const std::string& response) { return 1 + static_cast<int>(response.size() % 5); }

}  // namespace

TEST(Evaluation, CorrectnessFormula) {
  EXPECT_DOUBLE_EQ(correctness(std::vector<int>{5, 5, 1, 3}), 62.5);
  EXPECT_DOUBLE_EQ(correctness(std::vector<int>{1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(correctness(std::vector<int>{5}), 100.0);
  EXPECT_THROW(correctness(std::vector<int>{}), Error);
  EXPECT_THROW(correctness(std::vector<int>{0}), Error);
  EXPECT_THROW(correctness(std::vector<int>{6}), Error);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> s(1 + rng.index(30));
    double mean = 0;
    for (int& v : s) {
      v = 1 + static_cast<int>(rng.index(5));
      mean += v;
    }
    mean /= static_cast<double>(s.size());
    EXPECT_NEAR(correctness(s), 25.0 * (mean - 1.0), 1e-9);
  }
}

TEST(Evaluation, JudgeOutputParsing) {
  EXPECT_EQ(parse_judge_output("4"), 4);
  EXPECT_EQ(parse_judge_output("Score: 2\n"), 2);
  EXPECT_EQ(parse_judge_output("I'd say 5 out of 5"), 5);
  EXPECT_THROW(parse_judge_output("great"), Error);
  EXPECT_THROW(parse_judge_output("7"), Error);
  EXPECT_THROW(parse_judge_output("10"), Error);
  try {
    parse_judge_output("no idea");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no idea"), std::string::npos);
  }
}

TEST(Evaluation, JudgePrompt) {
  const QAPair qa = make_qa("q", "How many chairs are there?", "2", Category::counting);
  const std::string p = build_judge_prompt(qa, "two");
  EXPECT_NE(p.find("Question: How many chairs are there?\nGround Truth: 2\nResponse: two\n"), std::string::npos);
  EXPECT_EQ(p.substr(p.size() - 22), "Output only the score.");
  EXPECT_NE(p.find("1"), std::string::npos);
}

TEST(Evaluation, ExactMatchVariants) {
  EXPECT_TRUE(exact_match("Two  Tables", "two tables"));
  EXPECT_FALSE(exact_match("two", "two tables"));
  EXPECT_TRUE(refined_exact_match("two", "two tables"));
  EXPECT_TRUE(refined_exact_match("two tables", "2"));
  EXPECT_TRUE(refined_exact_match("yes", "Yes, there is a chair on the left."));
  EXPECT_TRUE(refined_exact_match("The cabinet.", "a cabinet"));
  EXPECT_FALSE(refined_exact_match("no", "Yes, there is a chair."));
  EXPECT_FALSE(refined_exact_match("table", "tablecloth"));
  // containment only for short sides
  EXPECT_FALSE(refined_exact_match("there is a chair on the left", "Yes, there is a chair on the left of the bed."));
  EXPECT_EQ(refined_normalize("The  Twelve Apples!"), "12 apples");
  EXPECT_EQ(em_normalize("  A\tB  "), "a b");
}

TEST(Evaluation, PearsonAgainstLongDouble) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.index(40);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-10, 10);
      y[i] = 0.5 * x[i] + rng.uniform(-5, 5);
    }
    long double mx = 0;
    long double my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0;
    long double sxx = 0;
    long double syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    EXPECT_NEAR(pearson(x, y), static_cast<double>(sxy / std::sqrt(sxx * syy)), 1e-12);
  }
  EXPECT_THROW(pearson({1}, {1}), Error);
  EXPECT_THROW(pearson({1, 2}, {1}), Error);
  EXPECT_THROW(pearson({1, 1}, {1, 2}), Error);
}

TEST(Evaluation, MsnnAccuracy) {
  using A = NavAction;
  EXPECT_DOUBLE_EQ(msnn_accuracy({A::turn_left, A::move_forward, A::turn_right, A::move_backward},
                                 {A::turn_left, A::move_forward, A::turn_left, A::turn_left}),
                   50.0);
}

TEST(Evaluation, ReportGroups) {
  EXPECT_EQ(report_group(Category::attribute), "Attr.");
  EXPECT_EQ(report_group(Category::description), "Attr.");
  EXPECT_EQ(report_group(Category::refer), "Spatial");
  EXPECT_EQ(report_group(Category::room_type), "Others");
  EXPECT_EQ(report_group(Category::affordance), "Others");
  EXPECT_EQ(report_group(Category::navigation), "Navigation");
}

TEST(Evaluation, LoadPredictions) {
  test::TempDir dir;
  test::write_file(dir / "p.jsonl", "{\"qa_id\":\"a\",\"response\":\"yes\"}\n{\"record_id\":\"r\",\"action\":\"turn_left\"}\n");
  const auto p = load_predictions(dir / "p.jsonl");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].id, "a");
  EXPECT_EQ(p[1].response, "turn_left");
  test::write_file(dir / "bad.jsonl", "{\"id\":\"a\"}\n");
  EXPECT_THROW(load_predictions(dir / "bad.jsonl"), Error);
}

TEST(Evaluation, EvaluateWithParallelJudge) {
  std::vector<QAPair> dataset;
  std::vector<Prediction> preds;
  Rng rng(3);
  const char* words[] = {"yes", "no", "2", "a chair", "the table on the left", "white"};
  for (int i = 0; i < 60; ++i) {
    const Category c = kAllCategories[static_cast<std::size_t>(i) % kAllCategories.size()];
    dataset.push_back(make_qa("q" + std::to_string(i), "Question " + std::to_string(i) + "?",
                              words[rng.index(6)], c));
    if (i % 10 != 9) preds.push_back({dataset.back().qa_id, words[rng.index(6)]});
  }

  test::FakeChat chat([&](const ChatRequest& r) {
    const std::string resp = response_of(test::user_text(r));
    std::this_thread::sleep_for(std::chrono::microseconds(200 * (resp.size() % 3)));
    return std::to_string(fake_score(resp));
  });
  EvalOptions opts;
  opts.parallelism = 6;
  const EvalReport rep = evaluate(dataset, preds, opts, &chat);
  EXPECT_EQ(chat.calls(), preds.size());
  EXPECT_EQ(rep.n, 54u);
  EXPECT_EQ(rep.missing, 6u);

  // independent tallies
  double sum = 0;
  int em = 0;
  int refined = 0;
  for (const auto& p : preds) {
    const auto& qa = *std::find_if(dataset.begin(), dataset.end(), [&](const QAPair& q) { return q.qa_id == p.id; });
    sum += (fake_score(p.response) - 1) / 4.0;
    em += exact_match(p.response, qa.answer);
    refined += refined_exact_match(p.response, qa.answer);
  }
  ASSERT_TRUE(rep.correctness);
  EXPECT_NEAR(*rep.correctness, 100.0 * sum / 54.0, 1e-9);
  EXPECT_NEAR(rep.em, 100.0 * em / 54.0, 1e-9);
  EXPECT_NEAR(rep.em_refined, 100.0 * refined / 54.0, 1e-9);
  std::size_t group_n = 0;
  for (const auto& [name, g] : rep.per_category) group_n += g.n;
  EXPECT_EQ(group_n, 54u);
  ASSERT_EQ(rep.scores.size(), 54u);
  EXPECT_EQ(rep.scores.front().qa_id, "q0");

  opts.parallelism = 1;
  std::reverse(preds.begin(), preds.end());
  EXPECT_EQ(evaluate(dataset, preds, opts, &chat), rep);

  const json j = rep.to_json();
  EXPECT_EQ(j.at("missing"), 6);
  EXPECT_TRUE(j.at("msnn_accuracy").is_null());
}

TEST(Evaluation, EmModeNeedsNoJudge) {
  const std::vector<QAPair> dataset = {make_qa("a", "Is there a sofa?", "yes", Category::existence)};
  EvalOptions opts;
  opts.mode = JudgeMode::em;
  const EvalReport rep = evaluate(dataset, {{"a", "Yes"}}, opts);
  EXPECT_FALSE(rep.correctness);
  EXPECT_DOUBLE_EQ(rep.em, 100.0);
}

TEST(Evaluation, ErrorsSurface) {
  const std::vector<QAPair> dataset = {make_qa("a", "Is there a sofa?", "yes", Category::existence)};
  EXPECT_THROW(evaluate(dataset, {{"zzz", "yes"}}, {}, nullptr), Error);
  test::FakeChat bad([](const ChatRequest&) { return std::string("excellent"); });
  EXPECT_THROW(evaluate(dataset, {{"a", "yes"}}, {}, &bad), Error);
  EXPECT_EQ(judge_mode_from_string("both"), JudgeMode::both);
  EXPECT_FALSE(judge_mode_from_string("all"));
}

TEST(Evaluation, EvaluateMsnn) {
  MsnnRecord a;
  a.record_id = "r0";
  a.action = NavAction::turn_left;
  MsnnRecord b;
  b.record_id = "r1";
  b.action = NavAction::move_forward;
  EvalReport rep;
  evaluate_msnn(rep, {a, b}, {{"r0", "Turn_Left"}, {"r1", "turn_right"}});
  EXPECT_EQ(rep.msnn_n, 2u);
  EXPECT_DOUBLE_EQ(*rep.msnn_accuracy, 50.0);
  EXPECT_THROW(evaluate_msnn(rep, {a}, {{"r9", "turn_left"}}), Error);
  EXPECT_THROW(evaluate_msnn(rep, {a}, {{"r0", "fly"}}), Error);
}
