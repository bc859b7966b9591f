#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "poseval/exclusion.hpp"
#include "poseval/stats.hpp"

namespace poseval::report {

enum class TableKind {
  drop_by_tier,
  ablation_8k,
  filler_match,
  seed_stability,
  qov2_drops,
  neutral_controls,
  filler_penalty,
  maxgen_rerun,
  restatement
};
TableKind table_kind_from_string(const std::string& s);
std::string to_string(TableKind k);

enum class OutputFormat { markdown, csv, json };
OutputFormat output_format_from_string(const std::string& s);

struct ReportSpec {
  TableKind table_kind = TableKind::drop_by_tier;
  OutputFormat format = OutputFormat::markdown;
  std::optional<std::string> task_id;
  std::optional<std::string> filler_kind;   // drop tables; short or long code
  std::vector<std::string> tiers;           // empty: every tier present
  std::vector<long long> seeds;             // empty: every seed present
  std::string gen_variant = "maxgen2048";
  stats::Sidedness sidedness = stats::Sidedness::one_sided;
  double alpha = 0.01;
  long comparisons = 0;                     // 0: number of rendered drops
  std::vector<std::string> model_order;     // row order; empty: sorted
  std::map<std::string, std::string> worst_case_filler;  // ablation rows
  std::set<std::string> excluded_models;
  bool include_excluded = false;
  std::string seed_stat = "acc";            // seed_stability: "acc" | "drop"
  std::string variant_a = "maxgen2048";     // maxgen_rerun columns
  std::string variant_b = "maxgen4096";
};

/// Rendered table: cells are final display strings so markdown, CSV and
/// JSON carry identical values.
struct Table {
  std::string id;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;

  bool operator==(const Table&) const = default;
};

std::string to_markdown(const Table& t);
std::string to_csv(const Table& t);
nlohmann::json to_json(const Table& t);
Table table_from_json(const nlohmann::json& j);
std::string render(const Table& t, OutputFormat format);

/// Builds the requested table from graded records.
Table emit(const std::vector<scoring::GradedRecord>& graded,
           const ReportSpec& spec);

Table emit_drop_by_tier(const std::vector<scoring::GradedRecord>& graded,
                        const ReportSpec& spec);
Table emit_ablation_8k(const std::vector<scoring::GradedRecord>& graded,
                       const ReportSpec& spec);
Table emit_filler_match(const std::vector<scoring::GradedRecord>& graded,
                        const ReportSpec& spec);
Table emit_seed_stability(const std::vector<scoring::GradedRecord>& graded,
                          const ReportSpec& spec);
Table emit_qov2_drops(const std::vector<scoring::GradedRecord>& graded,
                      const ReportSpec& spec);
Table emit_neutral_controls(const std::vector<scoring::GradedRecord>& graded,
                            const ReportSpec& spec);
Table emit_filler_penalty(const std::vector<scoring::GradedRecord>& graded,
                          const ReportSpec& spec);
Table emit_maxgen_rerun(const std::vector<scoring::GradedRecord>& graded,
                        const ReportSpec& spec);
Table emit_restatement(const std::vector<scoring::GradedRecord>& graded,
                       const ReportSpec& spec);

// display formatting, shared with the stats CLI output
std::string format_pct(long successes, long n);
std::string format_pct_counts(long successes, long n);
std::string format_pp(double pp);
std::string format_p(double p);
std::string tier_display(long budget_tokens, const std::string& fallback_label);

}  // namespace poseval::report
