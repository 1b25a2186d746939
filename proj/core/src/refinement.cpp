#include "situgen/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "text_util.hpp"

namespace situgen {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kActionNames = {"untouched", "corrected", "flagged", "dropped", "added"};
constexpr std::array<std::string_view, 3> kVerdictNames = {"accept", "reject", "fix"};

/// Lowercase words with punctuation turned into spaces, padded for
/// whole-word containment tests.
std::string padded_words(std::string_view s) {
  std::string out = text::lower(s);
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '\'') c = ' ';
  }
  return " " + text::join(text::split_words(out), " ") + " ";
}

std::pair<QAPair, RefineAction> flag(QAPair qa, const std::string& reason) {
  qa.meta["review"] = "flagged";
  qa.meta["flag_reason"] = reason;
  return {std::move(qa), RefineAction::flagged};
}

std::pair<QAPair, RefineAction> correct(QAPair qa, const std::string& answer) {
  if (!qa.meta.count("original_answer")) {
    qa.meta["original_answer"] = qa.answer;
  }
  qa.meta["review"] = "corrected";
  qa.answer = answer;
  return {std::move(qa), RefineAction::corrected};
}

/// A wild label minted by augmentation is trusted "no" even when it is not in
/// the bundled vocabulary.
std::optional<std::string> existence_truth(const QAPair& qa, const SituatedGraph& graph,
                                           const QaResources& resources) {
  if (auto answer = expected_answer(qa.question, Category::existence, graph, resources)) {
    return answer;
  }
  const auto wild = qa.meta.find("wild_label");
  if (qa.provenance == Provenance::augmented && wild != qa.meta.end()) {
    const auto q = parse_existence_question(qa.question.flat(), graph, resources);
    if (q && !q->label_in_graph && q->label == wild->second) {
      return std::string("no");
    }
  }
  return std::nullopt;
}

Scene scene_of(const SituatedGraph& graph) {
  Scene scene;
  scene.scene_id = graph.scene_id;
  for (const auto& [id, node] : graph.nodes) {
    scene.objects.push_back(node);
  }
  return scene;
}

bool within(std::size_t yes, std::size_t no, double tolerance) {
  const std::size_t total = yes + no;
  if (total == 0) return true;
  const double diff = yes > no ? static_cast<double>(yes - no) : static_cast<double>(no - yes);
  return diff / static_cast<double>(total) <= tolerance;
}

}  // namespace

std::string_view to_string(RefineAction action) { return kActionNames[static_cast<std::size_t>(action)]; }
std::string_view to_string(VerdictKind kind) { return kVerdictNames[static_cast<std::size_t>(kind)]; }

void RefinementReport::record(const QAPair& qa, RefineAction action, std::string reason) {
  auto& tally = per_category[qa.category];
  if (action == RefineAction::added) {
    ++added;
  } else {
    ++checked;
    ++tally.checked;
    switch (action) {
      case RefineAction::corrected: ++corrected; ++tally.corrected; break;
      case RefineAction::dropped: ++dropped; ++tally.dropped; break;
      case RefineAction::flagged: ++flagged; ++tally.flagged; ++untouched; break;
      default: ++untouched; break;
    }
  }
  if (action != RefineAction::untouched) {
    reasons.push_back({qa.qa_id, action, std::move(reason)});
  }
}

void RefinementReport::merge(const RefinementReport& other) {
  checked += other.checked;
  corrected += other.corrected;
  dropped += other.dropped;
  untouched += other.untouched;
  flagged += other.flagged;
  added += other.added;
  for (const auto& [c, t] : other.per_category) {
    auto& mine = per_category[c];
    mine.checked += t.checked;
    mine.corrected += t.corrected;
    mine.dropped += t.dropped;
    mine.flagged += t.flagged;
  }
  reasons.insert(reasons.end(), other.reasons.begin(), other.reasons.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

json RefinementReport::to_json() const {
  json per = json::object();
  for (const auto& [c, t] : per_category) {
    per[std::string(situgen::to_string(c))] = {
        {"checked", t.checked}, {"corrected", t.corrected}, {"dropped", t.dropped}, {"flagged", t.flagged}};
  }
  json entries = json::array();
  for (const auto& e : reasons) {
    entries.push_back({{"qa_id", e.qa_id}, {"action", situgen::to_string(e.action)}, {"reason", e.reason}});
  }
  return {{"checked", checked}, {"corrected", corrected}, {"dropped", dropped},   {"untouched", untouched},
          {"flagged", flagged}, {"added", added},         {"per_category", per}, {"reasons", entries},
          {"warnings", warnings}};
}

std::string RefinementReport::summary() const {
  std::ostringstream out;
  out << "checked " << checked << ", corrected " << corrected << ", dropped " << dropped << ", untouched "
      << untouched << " (flagged " << flagged << "), added " << added << "\n";
  for (const auto& [c, t] : per_category) {
    out << "  " << situgen::to_string(c) << ": checked " << t.checked << ", corrected " << t.corrected
        << ", dropped " << t.dropped << ", flagged " << t.flagged << "\n";
  }
  for (const auto& w : warnings) {
    out << "warning: " << w << "\n";
  }
  return out.str();
}

std::pair<QAPair, RefineAction> verify_counting(QAPair qa, const SituatedGraph& graph,
                                                const QaResources& resources) {
  const auto truth = expected_answer(qa.question, Category::counting, graph, resources);
  if (!truth) {
    return flag(std::move(qa), "counting question outside the validator grammar");
  }
  const auto given = parse_count_answer(qa.answer);
  if (given && std::to_string(*given) == *truth) {
    return {std::move(qa), RefineAction::untouched};
  }
  return correct(std::move(qa), *truth);
}

std::pair<QAPair, RefineAction> verify_existence(QAPair qa, const SituatedGraph& graph,
                                                 const QaResources& resources) {
  const auto truth = existence_truth(qa, graph, resources);
  if (!truth) {
    return flag(std::move(qa), "existence question outside the validator grammar");
  }
  const auto given = parse_yes_no(qa.answer);
  if (given && *given == (*truth == "yes")) {
    return {std::move(qa), RefineAction::untouched};
  }
  return correct(std::move(qa), *truth);
}

std::vector<std::string> default_negative_patterns() {
  return {"unknown", "not specified", "cannot be determined", "n/a", "unable to determine", "not provided"};
}

std::pair<std::vector<QAPair>, RefinementReport> drop_negative_responses(std::vector<QAPair> batch,
                                                                         const std::vector<std::string>& patterns) {
  std::vector<std::string> padded;
  for (const auto& p : patterns) padded.push_back(padded_words(p));
  RefinementReport report;
  std::vector<QAPair> kept;
  for (auto& qa : batch) {
    const std::string answer = padded_words(qa.answer);
    const auto hit = std::find_if(padded.begin(), padded.end(),
                                  [&](const std::string& p) { return answer.find(p) != std::string::npos; });
    if (hit != padded.end()) {
      report.record(qa, RefineAction::dropped, "negative response: " + text::trim(*hit));
    } else {
      report.record(qa, RefineAction::untouched);
      kept.push_back(std::move(qa));
    }
  }
  return {std::move(kept), std::move(report)};
}

std::pair<std::vector<QAPair>, RefinementReport> refine_batch(std::vector<QAPair> batch, const GraphIndex& graphs,
                                                              const std::vector<std::string>& patterns,
                                                              const QaResources& resources) {
  std::vector<std::string> padded;
  for (const auto& p : patterns) padded.push_back(padded_words(p));
  RefinementReport report;
  std::vector<QAPair> kept;
  for (auto& qa : batch) {
    RefineAction action = RefineAction::untouched;
    std::string reason;
    if (qa.category == Category::counting || qa.category == Category::existence) {
      const auto it = graphs.find(qa.situation_id);
      if (it == graphs.end()) {
        const std::string why = "no graph for situation " + qa.situation_id;
        std::tie(qa, action) = flag(std::move(qa), why);
      } else if (qa.category == Category::counting) {
        std::tie(qa, action) = verify_counting(std::move(qa), it->second, resources);
      } else {
        std::tie(qa, action) = verify_existence(std::move(qa), it->second, resources);
      }
      if (action == RefineAction::corrected) {
        reason = "answer " + qa.meta["original_answer"] + " -> " + qa.answer;
      } else if (action == RefineAction::flagged) {
        reason = qa.meta["flag_reason"];
      }
    }
    const std::string answer = padded_words(qa.answer);
    const auto hit = std::find_if(padded.begin(), padded.end(),
                                  [&](const std::string& p) { return answer.find(p) != std::string::npos; });
    if (hit != padded.end()) {
      report.record(qa, RefineAction::dropped, "negative response: " + text::trim(*hit));
      continue;
    }
    report.record(qa, action, reason);
    kept.push_back(std::move(qa));
  }
  return {std::move(kept), std::move(report)};
}

std::pair<std::size_t, std::size_t> yes_no_counts(const std::vector<QAPair>& batch) {
  std::size_t yes = 0;
  std::size_t no = 0;
  for (const auto& qa : batch) {
    if (qa.category != Category::existence) continue;
    if (const auto v = parse_yes_no(qa.answer)) (*v ? yes : no)++;
  }
  return {yes, no};
}

std::pair<std::vector<QAPair>, RefinementReport> balance_existence(std::vector<QAPair> batch,
                                                                   const GraphIndex& graphs, const WildVocab& vocab,
                                                                   Rng& rng, double tolerance,
                                                                   const QaResources& resources) {
  if (!(tolerance > 0.0 && tolerance < 0.5)) {
    throw Error("balance_existence: tolerance must be in (0, 0.5)");
  }
  RefinementReport report;
  auto [yes, no] = yes_no_counts(batch);
  if (within(yes, no, tolerance)) {
    return {std::move(batch), std::move(report)};
  }

  if (yes > no) {
    // Smallest no-count that meets the tolerance.
    const auto target =
        static_cast<std::size_t>(std::ceil(static_cast<double>(yes) * (1.0 - tolerance) / (1.0 + tolerance) - 1e-9));
    const std::size_t need = target > no ? target - no : 0;

    std::set<std::string> ids;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& qa : batch) {
      ids.insert(qa.qa_id);
      seen.insert({qa.situation_id, qa.question.flat()});
    }
    std::vector<std::vector<QAPair>> pools;
    for (const auto& [sid, graph] : graphs) {
      pools.push_back(augment_negative_existence(scene_of(graph), graph, vocab, rng, static_cast<int>(need), resources));
    }
    std::vector<std::size_t> cursor(pools.size(), 0);
    std::size_t added = 0;
    std::size_t serial = 0;
    bool progress = true;
    while (added < need && progress) {
      progress = false;
      for (std::size_t g = 0; g < pools.size() && added < need; ++g) {
        while (cursor[g] < pools[g].size()) {
          QAPair qa = pools[g][cursor[g]++];
          if (!seen.insert({qa.situation_id, qa.question.flat()}).second) continue;
          do {
            qa.qa_id = qa.situation_id + ":aug" + std::to_string(serial++);
          } while (!ids.insert(qa.qa_id).second);
          report.record(qa, RefineAction::added, "verified negative existence");
          batch.push_back(std::move(qa));
          ++added;
          ++no;
          progress = true;
          break;
        }
      }
    }
  }

  if (!within(yes, no, tolerance)) {
    // Subsample the majority answer.
    const bool drop_yes = yes > no;
    std::vector<std::size_t> majority;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i].category != Category::existence) continue;
      const auto v = parse_yes_no(batch[i].answer);
      if (v && *v == drop_yes) majority.push_back(i);
    }
    shuffle(majority, rng);
    std::vector<bool> remove(batch.size(), false);
    for (const std::size_t i : majority) {
      if (within(yes, no, tolerance)) break;
      remove[i] = true;
      (drop_yes ? yes : no)--;
    }
    std::vector<QAPair> kept;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (remove[i]) {
        report.record(batch[i], RefineAction::dropped, "subsampled for yes/no balance");
      } else {
        kept.push_back(std::move(batch[i]));
      }
    }
    batch = std::move(kept);
  }
  if (!within(yes, no, tolerance)) {
    report.warnings.push_back("yes/no balance not reached: " + std::to_string(yes) + " yes, " + std::to_string(no) +
                              " no");
  }
  return {std::move(batch), std::move(report)};
}

// --- verdicts --------------------------------------------------------------------

std::vector<FieldError> validate_verdict_json(const json& body) {
  std::vector<FieldError> errors;
  if (!body.is_object()) {
    errors.push_back({"body", "expected a JSON object"});
    return errors;
  }
  static const std::set<std::string> known = {"qa_id", "scores", "verdict", "fixed_answer", "reviewer", "timestamp"};
  for (const auto& [key, value] : body.items()) {
    if (!known.count(key)) errors.push_back({key, "unknown field"});
  }
  const auto optional_string = [&](const char* key) {
    if (body.contains(key) && !body.at(key).is_string()) errors.push_back({key, "expected a string"});
  };
  optional_string("qa_id");
  optional_string("timestamp");

  if (!body.contains("scores")) {
    errors.push_back({"scores", "missing field"});
  } else if (!body.at("scores").is_object()) {
    errors.push_back({"scores", "expected an object"});
  } else {
    const auto& scores = body.at("scores");
    for (const char* aspect : {"situation", "question", "answer"}) {
      const std::string field = std::string("scores.") + aspect;
      if (!scores.contains(aspect)) {
        errors.push_back({field, "missing field"});
      } else if (!scores.at(aspect).is_number_integer()) {
        errors.push_back({field, "expected an integer 1..5"});
      } else if (const int v = scores.at(aspect).get<int>(); v < 1 || v > 5) {
        errors.push_back({field, "must be between 1 and 5"});
      }
    }
    for (const auto& [key, value] : scores.items()) {
      if (key != "situation" && key != "question" && key != "answer") {
        errors.push_back({"scores." + key, "unknown field"});
      }
    }
  }

  std::optional<std::string> verdict;
  if (!body.contains("verdict")) {
    errors.push_back({"verdict", "missing field"});
  } else if (!body.at("verdict").is_string()) {
    errors.push_back({"verdict", "expected one of accept, reject, fix"});
  } else {
    verdict = body.at("verdict").get<std::string>();
    if (std::find(kVerdictNames.begin(), kVerdictNames.end(), *verdict) == kVerdictNames.end()) {
      errors.push_back({"verdict", "expected one of accept, reject, fix"});
    }
  }
  if (body.contains("fixed_answer") && !body.at("fixed_answer").is_null() && !body.at("fixed_answer").is_string()) {
    errors.push_back({"fixed_answer", "expected a string"});
  } else if (verdict == "fix") {
    const bool present = body.contains("fixed_answer") && body.at("fixed_answer").is_string() &&
                         !text::trim(body.at("fixed_answer").get<std::string>()).empty();
    if (!present) errors.push_back({"fixed_answer", "required when verdict is fix"});
  }

  if (!body.contains("reviewer")) {
    errors.push_back({"reviewer", "missing field"});
  } else if (!body.at("reviewer").is_string() || text::trim(body.at("reviewer").get<std::string>()).empty()) {
    errors.push_back({"reviewer", "expected a non-empty string"});
  }
  return errors;
}

ReviewVerdict verdict_from_json(const json& body) {
  const auto errors = validate_verdict_json(body);
  if (!errors.empty()) {
    throw SchemaError(errors.front().field, errors.front().message);
  }
  ReviewVerdict v;
  v.qa_id = body.value("qa_id", std::string());
  const auto& scores = body.at("scores");
  v.scores = {scores.at("situation").get<int>(), scores.at("question").get<int>(), scores.at("answer").get<int>()};
  const auto name = body.at("verdict").get<std::string>();
  v.verdict = static_cast<VerdictKind>(std::find(kVerdictNames.begin(), kVerdictNames.end(), name) -
                                       kVerdictNames.begin());
  if (body.contains("fixed_answer") && body.at("fixed_answer").is_string()) {
    v.fixed_answer = body.at("fixed_answer").get<std::string>();
  }
  v.reviewer = body.at("reviewer").get<std::string>();
  v.timestamp = body.value("timestamp", std::string());
  return v;
}

json verdict_to_json(const ReviewVerdict& v) {
  json out = {{"qa_id", v.qa_id},
              {"scores", {{"situation", v.scores.situation}, {"question", v.scores.question}, {"answer", v.scores.answer}}},
              {"verdict", to_string(v.verdict)},
              {"reviewer", v.reviewer},
              {"timestamp", v.timestamp}};
  if (v.fixed_answer) out["fixed_answer"] = *v.fixed_answer;
  return out;
}

std::vector<ReviewVerdict> load_verdicts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open verdicts " + path.string());
  }
  std::vector<ReviewVerdict> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(verdict_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
    if (out.back().qa_id.empty()) {
      throw Error(path.string() + ":" + std::to_string(number) + ": verdict without qa_id");
    }
  }
  return out;
}

std::pair<std::vector<QAPair>, RefinementReport> apply_verdicts(std::vector<QAPair> batch,
                                                                const std::vector<ReviewVerdict>& verdicts) {
  std::map<std::string, const ReviewVerdict*> last;
  for (const auto& v : verdicts) last[v.qa_id] = &v;

  std::set<std::string> ids;
  for (const auto& qa : batch) ids.insert(qa.qa_id);
  std::vector<std::string> dangling;
  for (const auto& [id, v] : last) {
    if (!ids.count(id)) dangling.push_back(id);
  }
  if (!dangling.empty()) {
    throw Error("verdicts reference unknown qa_ids: " + text::join(dangling, ", "));
  }

  RefinementReport report;
  std::vector<QAPair> kept;
  for (auto& qa : batch) {
    const auto it = last.find(qa.qa_id);
    if (it == last.end()) {
      kept.push_back(std::move(qa));
      continue;
    }
    const ReviewVerdict& v = *it->second;
    switch (v.verdict) {
      case VerdictKind::reject:
        report.record(qa, RefineAction::dropped, "rejected by " + v.reviewer);
        continue;
      case VerdictKind::fix:
        if (v.fixed_answer && *v.fixed_answer != qa.answer) {
          if (!qa.meta.count("original_answer")) qa.meta["original_answer"] = qa.answer;
          qa.answer = *v.fixed_answer;
          qa.meta["review"] = "fixed";
          report.record(qa, RefineAction::corrected, "fixed by " + v.reviewer);
        } else {
          report.record(qa, RefineAction::untouched);
        }
        break;
      case VerdictKind::accept:
        report.record(qa, RefineAction::untouched);
        break;
    }
    kept.push_back(std::move(qa));
  }
  return {std::move(kept), std::move(report)};
}

}  // namespace situgen
