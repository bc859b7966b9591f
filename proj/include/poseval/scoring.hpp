#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poseval/runner.hpp"

namespace poseval::scoring {

inline constexpr const char* kExtractionRulesId = "extract-v1";

struct RestatementParams {
  size_t min_word_len = 4;
  double overlap_threshold = 0.8;
  double window_factor = 1.5;
};

struct GradedRecord {
  runner::ConditionKey key;
  std::string target_id;
  long budget_tokens = 0;  // resolved filler budget, for tier display
  std::optional<corpus::GoldAnswer> extracted;
  bool correct = false;
  bool match_any_filler = false;
  bool match_last_filler = false;
  bool match_applicable = false;  // false for neutral / gold-free manifests
  std::optional<bool> restated_target;  // present iff a reasoning trace was
  std::optional<RestatementParams> restatement_params;  // thresholds used
  std::optional<std::string> error_flag;  // api_error / timeout / empty

  nlohmann::json to_json() const;
  static GradedRecord from_json(const nlohmann::json& j);
};

/// Pulls the final numeric answer out of a response. Priority: the number
/// after the last final-answer marker ("####", "answer is", "answer:",
/// "\boxed{"), then the last standalone number anywhere. Normalization
/// matches gold parsing (commas, currency, trailing period).
std::optional<util::Decimal> extract_math_answer(const std::string& text);

/// Pulls the chosen letter out of a response. Priority: letter after the
/// last final-answer marker; then the isolated letter tokens when they all
/// name one choice; then a unique choice-text mention. Two distinct bare
/// letters with no marker is ambiguous.
std::optional<char> extract_choice_answer(const std::string& text,
                                          const std::vector<corpus::Choice>& choices);

/// Correctness only: extracted answer equals gold (numeric equality for
/// math, letter equality for choice). api_error / timeout / empty records
/// grade incorrect and carry error_flag.
GradedRecord grade(const runner::RunRecord& record,
                   const corpus::TaskInstance& target);

/// Filler answer matching (math tasks): for an incorrect record with an
/// extracted number, match_any when it equals any manifest gold and
/// match_last when it equals the final filler item's gold. Correct records
/// keep both flags false; gold-free manifests are marked not applicable.
GradedRecord filler_match(GradedRecord graded, const runner::RunRecord& record);

/// True iff enough of the target question's content words recur inside a
/// sliding window of the reasoning trace.
bool detect_restatement(const std::string& trace,
                        const corpus::TaskInstance& target,
                        const RestatementParams& params = {});

/// Full per-record pipeline: grade, filler-match, restatement when a
/// trace is present.
GradedRecord grade_full(const runner::RunRecord& record,
                        const corpus::TaskInstance& target,
                        const RestatementParams& params = {});

/// Grades a whole store. resolve maps (task_id, target_id) to the task
/// instance; unknown ids are an error.
std::vector<GradedRecord> score_records(
    const std::vector<runner::RunRecord>& records,
    const std::function<const corpus::TaskInstance*(const std::string&,
                                                    const std::string&)>& resolve,
    const RestatementParams& params = {});

}  // namespace poseval::scoring
