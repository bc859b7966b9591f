#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poseval/modelgate.hpp"
#include "poseval/promptbuild.hpp"

namespace poseval::runner {

struct TaskConfig {
  std::string task_id;
  corpus::TaskKind kind = corpus::TaskKind::math_word;
  std::string test_path;
  std::string train_path;  // filler source; required for ws / qo_v2 pools
  size_t n_per_condition = 50;
};

/// Baseline quality gate: models whose baseline-cell accuracy falls below
/// min_accuracy get flagged excluded. The baseline is either an existing
/// end-position cell or the no-filler condition (filler_kind "none").
struct ExclusionRule {
  std::string task_id;
  std::string filler_kind = "with_solutions";
  std::string tier_label = "8K";
  std::string layout = "end";
  double min_accuracy = 0.0;
};

struct GenVariant {
  std::string name = "maxgen2048";
  long max_gen_tokens = 2048;
};

struct RunConfig {
  std::vector<modelgate::ModelSpec> models;
  std::vector<TaskConfig> tasks;
  std::vector<std::string> fillers;  // filler kinds, plus "none" for baselines
  std::vector<std::string> prose_paths;
  std::vector<promptbuild::TokenBudget> tiers;
  std::vector<promptbuild::LayoutKind> layouts;
  std::vector<long long> seeds;
  std::vector<std::string> diagnostics_tiers;  // probe layouts run here only
  std::vector<GenVariant> gen_variants;
  std::optional<ExclusionRule> exclusion;
  std::map<std::string, std::string> worst_case_filler;  // model -> filler kind
  std::string template_dir;       // empty: builtin templates
  std::string token_oracle_path;  // empty: byte/4 estimator

  void validate() const;

  /// Parses a JSON config file; relative paths are resolved against the
  /// config file's directory.
  static RunConfig load(const std::string& path);
};

/// Default context tiers: 8K=8192, 32K=32768, 64K=65536 filler tokens at
/// 2% tolerance.
std::vector<promptbuild::TokenBudget> default_tiers();

}  // namespace poseval::runner
