#include "situgen/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "bundled_data.hpp"
#include "situgen/error.hpp"
#include "situgen/jsonl.hpp"
#include "situgen/llm.hpp"
#include "text_util.hpp"

namespace situgen {

using json = nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kArticles = {"a", "an", "the"};

std::vector<std::string> tokens(std::string_view s) { return text::split_words(s); }

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

double correctness(const std::vector<int>& scores) {
  if (scores.empty()) {
    throw Error("correctness needs at least one score");
  }
  long total = 0;
  for (const int s : scores) {
    if (s < 1 || s > 5) {
      throw Error("judge score out of range: " + std::to_string(s));
    }
    total += s - 1;
  }
  return static_cast<double>(total) * 25.0 / static_cast<double>(scores.size());
}

double correctness(const std::vector<JudgeScore>& scores) {
  std::vector<int> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.s);
  return correctness(values);
}

std::string build_judge_prompt(const QAPair& qa, std::string_view response) {
  std::string prompt(data::judge_rubric_text());
  while (!prompt.empty() && (prompt.back() == '\n' || prompt.back() == ' ')) prompt.pop_back();
  prompt += "\n\nQuestion: " + qa.question.flat();
  prompt += "\nGround Truth: " + qa.answer;
  prompt += "\nResponse: " + std::string(response);
  prompt += "\nOutput only the score.";
  return prompt;
}

int parse_judge_output(std::string_view raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(raw[i]))) continue;
    std::size_t j = i;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
    const std::string digits(raw.substr(i, j - i));
    if (digits.size() == 1 && digits[0] >= '1' && digits[0] <= '5') {
      return digits[0] - '0';
    }
    throw Error("judge score out of range in reply: " + std::string(raw));
  }
  throw Error("no score in judge reply: " + std::string(raw));
}

std::string em_normalize(std::string_view s) { return text::squash(s); }

std::string refined_normalize(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (const char c : s) {
    const auto u = static_cast<unsigned char>(c);
    cleaned.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : ' ');
  }
  std::vector<std::string> kept;
  for (auto& word : tokens(cleaned)) {
    if (kArticles.count(word) != 0) continue;
    if (const auto n = text::number_word_value(word)) {
      kept.push_back(std::to_string(*n));
    } else {
      kept.push_back(std::move(word));
    }
  }
  return text::join(kept, " ");
}

bool exact_match(std::string_view response, std::string_view gt) { return em_normalize(response) == em_normalize(gt); }

bool refined_exact_match(std::string_view response, std::string_view gt, const EmOptions& options) {
  if (exact_match(response, gt)) return true;
  const std::string r = refined_normalize(response);
  const std::string g = refined_normalize(gt);
  if (r == g) return true;
  const auto rt = tokens(r);
  const auto gtok = tokens(g);
  const auto short_enough = [&](const std::vector<std::string>& t) { return t.size() <= options.containment_max_tokens; };
  return (short_enough(gtok) && contains_run(rt, gtok)) || (short_enough(rt) && contains_run(gtok, rt));
}

double msnn_accuracy(const std::vector<NavAction>& preds, const std::vector<NavAction>& gts) {
  if (preds.size() != gts.size()) {
    throw Error("msnn_accuracy: " + std::to_string(preds.size()) + " predictions for " + std::to_string(gts.size()) +
                " records");
  }
  if (preds.empty()) {
    throw Error("msnn_accuracy needs at least one record");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == gts[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw Error("pearson: length mismatch");
  }
  if (xs.size() < 2) {
    throw Error("pearson needs at least two points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error("pearson: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view report_group(Category category) {
  switch (category) {
    case Category::counting:
      return "Counting";
    case Category::existence:
      return "Existence";
    case Category::attribute:
    case Category::description:
      return "Attr.";
    case Category::spatial:
    case Category::refer:
      return "Spatial";
    case Category::navigation:
      return "Navigation";
    case Category::room_type:
    case Category::affordance:
      return "Others";
  }
  return "Others";
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  read_jsonl(path, [&](const json& value, std::size_t) {
    if (value.contains("qa_id")) {
      out.push_back({value.at("qa_id").get<std::string>(), value.at("response").get<std::string>()});
    } else if (value.contains("record_id")) {
      out.push_back({value.at("record_id").get<std::string>(), value.at("action").get<std::string>()});
    } else {
      throw SchemaError("qa_id", "prediction needs qa_id or record_id");
    }
  });
  return out;
}

std::optional<JudgeMode> judge_mode_from_string(std::string_view text) {
  if (text == "llm") return JudgeMode::llm;
  if (text == "em") return JudgeMode::em;
  if (text == "both") return JudgeMode::both;
  return std::nullopt;
}

json EvalReport::to_json() const {
  json groups = json::object();
  for (const auto& [name, g] : per_category) {
    json entry = {{"n", g.n}, {"em", g.em}, {"em_refined", g.em_refined}};
    entry["correctness"] = g.correctness ? json(*g.correctness) : json(nullptr);
    groups[name] = entry;
  }
  json out = {{"n", n}, {"missing", missing}, {"em", em}, {"em_refined", em_refined}, {"per_category", groups}};
  out["correctness"] = correctness ? json(*correctness) : json(nullptr);
  out["msnn_accuracy"] = msnn_accuracy ? json(*msnn_accuracy) : json(nullptr);
  out["msnn_n"] = msnn_n;
  json judged = json::array();
  for (const auto& s : scores) {
    judged.push_back({{"qa_id", s.qa_id}, {"s", s.s}, {"raw", s.raw}, {"judge_model", s.judge_model}});
  }
  out["scores"] = judged;
  return out;
}

EvalReport evaluate(const std::vector<QAPair>& dataset, const std::vector<Prediction>& predictions,
                    const EvalOptions& options, ChatClient* judge) {
  const bool use_llm = options.mode != JudgeMode::em;
  if (use_llm && judge == nullptr) {
    throw Error("llm judging needs a chat client");
  }
  std::map<std::string, const QAPair*, std::less<>> by_id;
  for (const auto& qa : dataset) by_id[qa.qa_id] = &qa;
  std::map<std::string, std::string, std::less<>> responses;
  for (const auto& p : predictions) {
    if (by_id.find(p.id) == by_id.end()) {
      throw Error("prediction for unknown qa_id " + p.id);
    }
    responses[p.id] = p.response;
  }

  struct Item {
    const QAPair* qa;
    const std::string* response;
  };
  std::vector<Item> items;
  EvalReport report;
  for (const auto& qa : dataset) {
    const auto it = responses.find(qa.qa_id);
    if (it == responses.end()) {
      ++report.missing;
      continue;
    }
    items.push_back({&qa, &it->second});
  }
  report.n = items.size();
  if (items.empty()) return report;

  std::vector<int> scores(items.size(), 0);
  std::vector<std::string> raws(items.size());
  if (use_llm) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
      for (std::size_t i = next++; i < items.size(); i = next++) {
        try {
          ChatRequest request;
          request.model = options.judge_model;
          request.messages.push_back(ChatMessage::text("user", build_judge_prompt(*items[i].qa, *items[i].response)));
          raws[i] = judge->complete(request);
          scores[i] = parse_judge_output(raws[i]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = items.size();
        }
      }
    };
    const int threads = std::clamp(options.parallelism, 1, static_cast<int>(items.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  struct Acc {
    std::size_t n = 0;
    std::size_t em = 0;
    std::size_t refined = 0;
    std::vector<int> scores;
  };
  Acc total;
  std::map<std::string, Acc> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string gt = items[i].qa->answer;
    const bool em = exact_match(*items[i].response, gt);
    const bool refined = refined_exact_match(*items[i].response, gt, options.em);
    for (Acc* acc : {&total, &groups[std::string(report_group(items[i].qa->category))]}) {
      ++acc->n;
      acc->em += em ? 1 : 0;
      acc->refined += refined ? 1 : 0;
      if (use_llm) acc->scores.push_back(scores[i]);
    }
    if (use_llm) report.scores.push_back({items[i].qa->qa_id, scores[i], raws[i], options.judge_model});
  }
  const auto pct = [](std::size_t k, std::size_t n) { return 100.0 * static_cast<double>(k) / static_cast<double>(n); };
  report.em = pct(total.em, total.n);
  report.em_refined = pct(total.refined, total.n);
  if (use_llm) report.correctness = correctness(total.scores);
  for (const auto& [name, acc] : groups) {
    GroupReport g;
    g.n = acc.n;
    g.em = pct(acc.em, acc.n);
    g.em_refined = pct(acc.refined, acc.n);
    if (use_llm) g.correctness = correctness(acc.scores);
    report.per_category[name] = g;
  }
  return report;
}

void evaluate_msnn(EvalReport& report, const std::vector<MsnnRecord>& records,
                   const std::vector<Prediction>& predictions) {
  std::map<std::string, NavAction, std::less<>> truth;
  for (const auto& r : records) truth[r.record_id] = r.action;
  std::vector<NavAction> preds;
  std::vector<NavAction> gts;
  for (const auto& p : predictions) {
    const auto it = truth.find(p.id);
    if (it == truth.end()) {
      throw Error("prediction for unknown record_id " + p.id);
    }
    const auto action = nav_action_from_string(text::squash(p.response));
    if (!action) {
      throw Error("unknown action '" + p.response + "' for record " + p.id);
    }
    preds.push_back(*action);
    gts.push_back(it->second);
  }
  report.msnn_n = preds.size();
  report.msnn_accuracy = preds.empty() ? std::nullopt : std::optional<double>(msnn_accuracy(preds, gts));
}

}  // namespace situgen
