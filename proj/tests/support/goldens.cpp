#include "support/goldens.hpp"

#include "support/fixture_store.hpp"

namespace testsupport {

using namespace poseval;
using report::ReportSpec;
using report::TableKind;

std::vector<GoldenCase> golden_tables() {
  const auto graded = paper_tables_fixture().graded();
  const auto match_graded = filler_match_fixture().graded();
  const std::vector<std::string> initial_five = {
      "Qwen 2.5-7B", "MiMo-v2-Flash", "GLM-4.7-FlashX", "DeepSeek-R", "Kimi k2.5"};
  const std::vector<std::string> round_two = {"DeepSeek-V4-Pro", "MiMo-V2.5-Pro",
                                              "Kimi-K2.6", "GLM-5.1"};

  std::vector<GoldenCase> out;
  auto base = [] {
    ReportSpec spec;
    spec.task_id = "gsm8k";
    spec.seeds = {42};
    spec.model_order = paper_model_order();
    return spec;
  };

  {
    ReportSpec spec = base();
    spec.table_kind = TableKind::drop_by_tier;
    spec.filler_kind = "with_solutions";
    spec.tiers = {"8K", "32K", "64K"};
    spec.comparisons = 27;
    out.push_back({"table1_ws_drop_by_tier", report::emit(graded, spec)});
  }
  {
    ReportSpec spec = base();
    spec.table_kind = TableKind::ablation_8k;
    spec.tiers = {"8K"};
    spec.worst_case_filler = paper_worst_case_filler();
    out.push_back({"table2_ablation_8k", report::emit(graded, spec)});
  }
  {
    ReportSpec spec = base();
    spec.table_kind = TableKind::drop_by_tier;
    spec.task_id = "arc";
    spec.filler_kind = "with_solutions";
    spec.tiers = {"8K"};
    spec.comparisons = 9;
    out.push_back({"table3_arc_ws_8k", report::emit(graded, spec)});
  }
  for (const char* tier : {"32K", "64K"}) {
    ReportSpec spec = base();
    spec.table_kind = TableKind::qov2_drops;
    spec.tiers = {tier};
    spec.model_order = initial_five;
    out.push_back({std::string("appa_qov2_") + (tier[0] == '3' ? "32k" : "64k"),
                   report::emit(graded, spec)});
  }
  for (const char* tier : {"8K", "32K", "64K"}) {
    ReportSpec spec = base();
    spec.table_kind = TableKind::neutral_controls;
    spec.tiers = {tier};
    spec.model_order = initial_five;
    std::string stem = "appa_neutral_";
    stem += tier;
    for (auto& c : stem) c = static_cast<char>(std::tolower(c));
    out.push_back({stem, report::emit(graded, spec)});
  }
  {
    ReportSpec spec = base();
    spec.table_kind = TableKind::qov2_drops;
    spec.tiers = {"8K", "32K", "64K"};
    spec.model_order = round_two;
    out.push_back({"round2_qov2", report::emit(graded, spec)});
  }
  {
    ReportSpec spec = base();
    spec.table_kind = TableKind::seed_stability;
    spec.seeds = {42, 100};
    spec.seed_stat = "acc";
    out.push_back({"appb_seed_stability", report::emit(graded, spec)});
  }
  {
    ReportSpec spec = base();
    spec.table_kind = TableKind::seed_stability;
    spec.seeds = {42, 100};
    spec.seed_stat = "drop";
    spec.filler_kind = "neutral_text";
    out.push_back({"appb_qwen_neutral_drops", report::emit(graded, spec)});
  }
  {
    ReportSpec spec = base();
    spec.table_kind = TableKind::filler_penalty;
    spec.tiers = {"8K"};
    spec.model_order = initial_five;
    out.push_back({"appa_filler_penalty_8k", report::emit(graded, spec)});
  }
  {
    ReportSpec spec;
    spec.table_kind = TableKind::filler_match;
    spec.seeds = {42};
    out.push_back({"fillermatch_aggregate", report::emit(match_graded, spec)});
  }
  return out;
}

}  // namespace testsupport
