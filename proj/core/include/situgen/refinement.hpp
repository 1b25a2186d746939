#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/graph.hpp"
#include "situgen/qa.hpp"
#include "situgen/rng.hpp"

namespace situgen {

enum class RefineAction { untouched, corrected, flagged, dropped, added };

std::string_view to_string(RefineAction action);

struct CategoryTally {
  std::size_t checked = 0;
  std::size_t corrected = 0;
  std::size_t dropped = 0;
  std::size_t flagged = 0;

  friend bool operator==(const CategoryTally&, const CategoryTally&) = default;
};

/// Counts for one or more refinement steps. `checked` pairs end up corrected,
/// dropped or untouched; flagged pairs are untouched but queued for review.
/// Pairs minted by balancing are counted in `added`, not in `checked`.
struct RefinementReport {
  struct Entry {
    std::string qa_id;
    RefineAction action = RefineAction::untouched;
    std::string reason;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::size_t checked = 0;
  std::size_t corrected = 0;
  std::size_t dropped = 0;
  std::size_t untouched = 0;
  std::size_t flagged = 0;
  std::size_t added = 0;
  std::map<Category, CategoryTally> per_category;
  std::vector<Entry> reasons;
  std::vector<std::string> warnings;

  void record(const QAPair& qa, RefineAction action, std::string reason = {});
  /// Adds the counts and entries of another step.
  void merge(const RefinementReport& other);

  nlohmann::json to_json() const;
  std::string summary() const;

  friend bool operator==(const RefinementReport&, const RefinementReport&) = default;
};

/// Graphs keyed by situation id.
using GraphIndex = std::map<std::string, SituatedGraph>;

/// Re-counts the question's predicate on the graph and rewrites a wrong
/// answer. Questions outside the grammar are flagged, never guessed.
std::pair<QAPair, RefineAction> verify_counting(QAPair qa, const SituatedGraph& graph,
                                                const QaResources& resources = QaResources::bundled());
std::pair<QAPair, RefineAction> verify_existence(QAPair qa, const SituatedGraph& graph,
                                                 const QaResources& resources = QaResources::bundled());

std::vector<std::string> default_negative_patterns();

/// Removes pairs whose answer contains a negative-response pattern as whole words.
std::pair<std::vector<QAPair>, RefinementReport> drop_negative_responses(
    std::vector<QAPair> batch, const std::vector<std::string>& patterns = default_negative_patterns());

/// Runs the validators over counting/existence pairs, then drops negative
/// responses. Pairs without a graph are flagged.
std::pair<std::vector<QAPair>, RefinementReport> refine_batch(
    std::vector<QAPair> batch, const GraphIndex& graphs,
    const std::vector<std::string>& patterns = default_negative_patterns(),
    const QaResources& resources = QaResources::bundled());

/// Adds verified "no" existence pairs round-robin over the graphs and
/// subsamples the majority answer until |yes - no| / (yes + no) <= tolerance.
std::pair<std::vector<QAPair>, RefinementReport> balance_existence(
    std::vector<QAPair> batch, const GraphIndex& graphs, const WildVocab& vocab, Rng& rng, double tolerance = 0.05,
    const QaResources& resources = QaResources::bundled());

/// (yes, no) tally over existence pairs.
std::pair<std::size_t, std::size_t> yes_no_counts(const std::vector<QAPair>& batch);

enum class VerdictKind { accept, reject, fix };

std::string_view to_string(VerdictKind kind);

struct ReviewScores {
  int situation = 0;
  int question = 0;
  int answer = 0;

  friend bool operator==(const ReviewScores&, const ReviewScores&) = default;
};

struct ReviewVerdict {
  std::string qa_id;
  ReviewScores scores;
  VerdictKind verdict = VerdictKind::accept;
  std::optional<std::string> fixed_answer;
  std::string reviewer;
  std::string timestamp;

  friend bool operator==(const ReviewVerdict&, const ReviewVerdict&) = default;
};

struct FieldError {
  std::string field;
  std::string message;
};

/// Every problem with a verdict body, for 422 responses. Empty means valid.
std::vector<FieldError> validate_verdict_json(const nlohmann::json& body);
/// Throws SchemaError naming the first invalid field.
ReviewVerdict verdict_from_json(const nlohmann::json& body);
nlohmann::json verdict_to_json(const ReviewVerdict& verdict);

std::vector<ReviewVerdict> load_verdicts(const std::filesystem::path& path);

/// Applies the last verdict per qa_id: reject drops, fix replaces the answer,
/// accept leaves the pair alone. Unknown qa_ids are an error.
std::pair<std::vector<QAPair>, RefinementReport> apply_verdicts(std::vector<QAPair> batch,
                                                                const std::vector<ReviewVerdict>& verdicts);

}  // namespace situgen
