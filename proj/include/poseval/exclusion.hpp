#pragma once

#include <set>
#include <string>
#include <vector>

#include "poseval/config.hpp"
#include "poseval/scoring.hpp"

namespace poseval::runner {

struct ExclusionEntry {
  std::string model_id;
  double baseline_accuracy = 0.0;
  bool excluded = false;
  std::string reason;
};

struct ExclusionReport {
  ExclusionRule rule;
  std::vector<ExclusionEntry> entries;
  std::set<std::string> excluded_models() const;
};

/// Flags models whose baseline-cell accuracy falls below the rule's
/// threshold. Excluded models stay in the store; reports omit them unless
/// asked, and the exclusion itself is always reported.
ExclusionReport apply_exclusion(const std::vector<scoring::GradedRecord>& graded,
                                const ExclusionRule& rule);

}  // namespace poseval::runner
