#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/msnn.hpp"
#include "situgen/qa.hpp"

namespace situgen {

class ChatClient;

struct JudgeScore {
  std::string qa_id;
  int s = 1;
  std::string raw;
  std::string judge_model;

  friend bool operator==(const JudgeScore&, const JudgeScore&) = default;
};

/// Mean of (s - 1) / 4 over the scores, in percent. Throws on an empty list
/// or a score outside 1..5.
double correctness(const std::vector<int>& scores);
double correctness(const std::vector<JudgeScore>& scores);

/// Rubric, the (question, ground truth, response) triple, then
/// "Output only the score.".
std::string build_judge_prompt(const QAPair& qa, std::string_view response);

/// First integer in the judge reply; Error carrying the reply when there is
/// none or it is outside 1..5.
int parse_judge_output(std::string_view raw);

struct EmOptions {
  std::size_t containment_max_tokens = 3;
};

/// Lowercase with whitespace collapsed.
std::string em_normalize(std::string_view s);
/// em_normalize plus punctuation and articles removed and number words
/// (zero..twenty) replaced by digits.
std::string refined_normalize(std::string_view s);

bool exact_match(std::string_view response, std::string_view gt);
/// Equality after refined_normalize, or one side appearing as a whole-token
/// run inside the other when that side has at most `containment_max_tokens`
/// tokens.
bool refined_exact_match(std::string_view response, std::string_view gt, const EmOptions& options = {});

/// Percent of positions where the actions agree.
double msnn_accuracy(const std::vector<NavAction>& preds, const std::vector<NavAction>& gts);

/// Sample Pearson correlation. Throws on length mismatch, fewer than two
/// points or zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

/// Report column a category is folded into: Counting, Existence, Attr.,
/// Spatial, Navigation or Others.
std::string_view report_group(Category category);

struct Prediction {
  std::string id;  // qa_id or MSNN record_id
  std::string response;
};

/// `{"qa_id", "response"}` or `{"record_id", "action"}` lines.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

enum class JudgeMode { llm, em, both };

std::optional<JudgeMode> judge_mode_from_string(std::string_view text);

struct EvalOptions {
  JudgeMode mode = JudgeMode::both;
  std::string judge_model = "gpt-4o-mini";
  int parallelism = 4;
  EmOptions em;
};

struct GroupReport {
  std::size_t n = 0;
  std::optional<double> correctness;
  double em = 0.0;
  double em_refined = 0.0;

  friend bool operator==(const GroupReport&, const GroupReport&) = default;
};

struct EvalReport {
  std::optional<double> correctness;  // C, percent; llm and both modes
  std::size_t n = 0;                  // N, scored pairs
  std::size_t missing = 0;            // dataset pairs without a prediction
  std::map<std::string, GroupReport> per_category;
  double em = 0.0;
  double em_refined = 0.0;
  std::optional<double> msnn_accuracy;
  std::size_t msnn_n = 0;
  std::vector<JudgeScore> scores;

  nlohmann::json to_json() const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores predictions against the dataset. Judge calls go through `judge`
/// with up to `options.parallelism` in flight; results do not depend on the
/// completion order. Predictions for unknown qa_ids are an error.
EvalReport evaluate(const std::vector<QAPair>& dataset, const std::vector<Prediction>& predictions,
                    const EvalOptions& options, ChatClient* judge = nullptr);

/// Fills the MSNN fields of `report` from `{"record_id", "action"}` predictions.
void evaluate_msnn(EvalReport& report, const std::vector<MsnnRecord>& records,
                   const std::vector<Prediction>& predictions);

}  // namespace situgen
