#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poseval/util.hpp"

namespace poseval::corpus {

enum class TaskKind { math_word, multiple_choice };
enum class Split { train, test };
enum class FillerKind { with_solutions, questions_only_v2, neutral_text };

std::string to_string(TaskKind k);
std::string to_string(FillerKind k);
/// Short display codes used in tables: ws / qo_v2 / neutral.
std::string short_code(FillerKind k);
FillerKind filler_kind_from_string(const std::string& s);

/// Grading target: either an exact decimal number or a choice letter.
struct GoldAnswer {
  enum class Kind { number, letter };
  Kind kind = Kind::number;
  util::Decimal number_value;  // valid when kind == number
  char letter_value = 0;       // uppercase, valid when kind == letter

  static GoldAnswer number(util::Decimal d);
  static GoldAnswer letter(char c);
  bool operator==(const GoldAnswer& o) const;
  std::string display() const;
};

struct Choice {
  std::string label;  // single letter
  std::string text;
};

struct TaskInstance {
  std::string id;
  TaskKind kind = TaskKind::math_word;
  std::string question;
  std::vector<Choice> choices;  // multiple_choice only
  GoldAnswer gold;
  Split source_split = Split::test;
  std::string rationale;  // worked solution text, math train items
};

struct FillerItem {
  std::string id;
  FillerKind kind = FillerKind::neutral_text;
  std::string text;  // rendered block, trailing separator included
  std::optional<GoldAnswer> gold;
  long est_tokens = 0;
};

struct FillerPool {
  FillerKind kind = FillerKind::neutral_text;
  std::vector<FillerItem> items;
  std::string source_fingerprint;
  int skipped_short = 0;  // neutral paragraphs below the length floor
};

/// Loads a math word-problem dataset: JSONL, one record per line with a
/// "question" field and an "answer" field whose final line carries the
/// "#### <number>" gold marker.
std::vector<TaskInstance> load_math_dataset(const std::string& path,
                                            Split split);

/// Loads a multiple-choice dataset: JSONL with question, labeled choices,
/// and a gold label. Accepts both flat {label,text} choice arrays and the
/// parallel-array {"label":[...],"text":[...]} shape; the question may be a
/// plain string or an object with a "stem".
std::vector<TaskInstance> load_choice_dataset(const std::string& path);

class TemplateSet;  // templates.hpp

/// Builds a task-derived filler pool (with_solutions / questions_only_v2)
/// from train-split instances.
FillerPool build_filler_pool(const std::vector<TaskInstance>& task_items,
                             FillerKind kind, const TemplateSet& tpl);

/// Builds a neutral-prose pool from plain-text files; paragraphs split on
/// blank lines, anything under min_paragraph_chars is skipped and counted.
FillerPool build_neutral_pool(const std::vector<std::string>& prose_paths,
                              const TemplateSet& tpl,
                              size_t min_paragraph_chars = 200);

/// Deterministic sampling without replacement (splitmix64 + Fisher-Yates
/// prefix). Same (instances, n, seed) always yields the same sequence.
std::vector<TaskInstance> sample_targets(
    const std::vector<TaskInstance>& instances, size_t n, uint64_t seed);

}  // namespace poseval::corpus
