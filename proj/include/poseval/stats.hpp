#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poseval/scoring.hpp"
#include "poseval/util.hpp"

namespace poseval::stats {

enum class Sidedness { one_sided, two_sided };
std::string to_string(Sidedness s);

/// Axes identifying one aggregate cell. seeds holds one entry for a plain
/// cell and several after pooling.
struct CellAxes {
  std::string model_id;
  std::string task_id;
  std::string filler_kind;
  std::string tier_label;
  std::string layout;
  std::string gen_variant = "maxgen2048";
  std::vector<long long> seeds;

  bool same_except_layout(const CellAxes& o) const;
  bool same_except_seed(const CellAxes& o) const;
  std::string display() const;
};

struct ConditionCell {
  CellAxes axes;
  long successes = 0;
  long n = 0;
  long error_count = 0;  // api_error / timeout / empty, graded incorrect

  double accuracy() const;
};

struct DropResult {
  ConditionCell end_cell;
  ConditionCell mid_cell;
  double drop_pp = 0.0;  // 100 * (mid accuracy - end accuracy)
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;
  bool significant = false;  // set by significance_sweep
};

/// Fisher's exact test on the 2x2 table (a_succ, a_n - a_succ) vs
/// (b_succ, b_n - b_succ), computed with log-gamma hypergeometric terms
/// and compensated summation. Two-sided sums all tables at most as
/// probable as the observed one; one-sided takes the tail in the
/// direction of the observed difference and returns 1.0 when the observed
/// proportions are equal.
double fisher_exact(long a_succ, long a_n, long b_succ, long b_n,
                    Sidedness sidedness);

double bonferroni_threshold(double alpha, long comparisons);

enum class CiMethod { wald, wilson };
std::string to_string(CiMethod m);

/// Halfwidth of the binomial confidence interval at the given level
/// (e.g. 0.95). Wald is z*sqrt(p(1-p)/n); Wilson is the score-interval
/// halfwidth.
double binomial_ci_halfwidth(double p_hat, long n, double level, CiMethod method);

/// Drop in percentage points plus both Fisher p-values. Cells must differ
/// only in layout.
DropResult compute_drop(const ConditionCell& end_cell,
                        const ConditionCell& mid_cell);

/// Count pooling across seeds: successes and n summed; all other axes
/// must agree.
ConditionCell pool_seeds(const std::vector<ConditionCell>& cells);

struct SweepResult {
  std::vector<DropResult> drops;  // significance flags filled in
  double threshold = 0.0;
  long significant_count = 0;
  Sidedness sidedness = Sidedness::one_sided;
};

/// Marks each drop significant iff p < alpha / m under the chosen
/// sidedness. m defaults to the number of drops when <= 0.
SweepResult significance_sweep(std::vector<DropResult> drops, double alpha,
                               long m, Sidedness sidedness);

/// Axes selector for aggregation; unset fields match anything.
struct CellFilter {
  std::optional<std::string> model_id;
  std::optional<std::string> task_id;
  std::optional<std::string> filler_kind;
  std::optional<std::string> tier_label;
  std::optional<std::string> layout;
  std::optional<std::string> gen_variant;
  std::optional<long long> seed;

  bool matches(const runner::ConditionKey& key) const;
};

/// Aggregates the records selected by the filter into one cell. Empty
/// selections and selections spanning more than one cell are errors.
ConditionCell aggregate(const std::vector<scoring::GradedRecord>& records,
                        const CellFilter& filter);

/// Groups every record into its cell; cells come back sorted by axes.
std::vector<ConditionCell> aggregate_all(
    const std::vector<scoring::GradedRecord>& records);

}  // namespace poseval::stats
