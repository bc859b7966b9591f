#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "poseval/config.hpp"

namespace testsupport {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Solvable two-number word problems with the "#### <gold>" answer
/// convention. Golds are gold_base + i, questions vary in length.
std::string write_math_jsonl(const std::filesystem::path& dir,
                             const std::string& name, int count, long gold_base);

/// Four-option multiple-choice records in the nested question/stem shape.
std::string write_choice_jsonl(const std::filesystem::path& dir,
                               const std::string& name, int count);

/// Blank-line-separated prose paragraphs, each comfortably over 200 chars.
std::string write_neutral_prose(const std::filesystem::path& dir,
                                const std::string& name, int paragraphs);

struct MockWorkspaceOptions {
  std::vector<std::string> fillers = {"with_solutions"};
  std::vector<std::string> layouts = {"end", "middle"};
  std::vector<std::pair<std::string, long>> tiers = {{"8K", 8192}};
  std::vector<long long> seeds = {42};
  size_t n_per_condition = 50;
  int train_items = 80;
  int test_items = 60;
  // mock rules as (layout, policy); "*" matches every layout
  std::vector<std::pair<std::string, std::string>> policies = {
      {"end", "answer_target_correct"}, {"middle", "answer_last_filler"}};
  std::map<std::string, long> budget_override;  // tier -> tokens
};

/// Writes datasets plus a run-config JSON for a single mock model and
/// returns the config path.
std::string make_mock_workspace(const std::filesystem::path& dir,
                                const MockWorkspaceOptions& options = {});

}  // namespace testsupport
