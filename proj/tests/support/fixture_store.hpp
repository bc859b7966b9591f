#pragma once

#include <map>
#include <string>
#include <vector>

#include "poseval/runner.hpp"
#include "poseval/scoring.hpp"

namespace testsupport {

/// One aggregate cell to materialize as synthetic run records. Responses
/// are constructed so the real extraction/grading pipeline reproduces the
/// requested success count exactly. The optional manifest fields drive the
/// filler-match flags: wrong answers can be forced to equal the last
/// manifest gold, some other manifest gold, or nothing.
struct FixtureCell {
  std::string model;
  std::string task = "gsm8k";
  std::string filler = "with_solutions";  // long code or "none"
  std::string tier = "8K";
  std::string layout = "end";
  long long seed = 42;
  long successes = 0;
  long n = 50;
  long budget = -1;  // -1: nominal from tier label; "none" filler: 0
  std::vector<long> manifest_golds;  // empty: no manifest
  long wrong_match_last = 0;
  long wrong_match_any = 0;  // matches a non-last manifest gold
};

/// Builds stores and graded sets whose aggregate counts encode a chosen
/// table, flowing through the real grading pipeline rather than synthesizing
/// GradedRecords directly.
class FixtureBuilder {
 public:
  FixtureBuilder& add(FixtureCell cell);
  FixtureBuilder& add_drop(const std::string& model, const std::string& task,
                           const std::string& filler, const std::string& tier,
                           long end_succ, long mid_succ, long n = 50,
                           long long seed = 42, long budget = -1);

  std::vector<poseval::runner::RunRecord> records() const;
  std::vector<poseval::scoring::GradedRecord> graded() const;

  /// Target lookup for scoring::score_records.
  const poseval::corpus::TaskInstance* resolve(const std::string& task_id,
                                               const std::string& target_id) const;

 private:
  void ensure_targets(const std::string& task, long n) const;

  std::vector<FixtureCell> cells_;
  mutable std::map<std::string, std::vector<poseval::corpus::TaskInstance>> targets_;
};

/// Fixture store encoding the published drop/ablation/seed tables:
/// the ws tier grid, the 8K ablation spectrum, the choice-task 8K drops,
/// the qo_v2 and neutral controls, the second-round qo_v2 grid, the
/// no-filler baselines and the second-seed cells.
FixtureBuilder paper_tables_fixture();

/// Worst-case filler mapping used by the ablation table.
std::map<std::string, std::string> paper_worst_case_filler();

/// Row order shared by the published tables.
std::vector<std::string> paper_model_order();

/// Separate fixture whose graded set aggregates to a 76% middle / 22% end
/// filler-match rate, with per-cell rates exercising every flag path.
FixtureBuilder filler_match_fixture();

}  // namespace testsupport
