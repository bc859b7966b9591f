#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poseval/corpus.hpp"
#include "poseval/templates.hpp"

namespace poseval::promptbuild {

enum class LayoutKind { end, middle, middle_twice, middle_dup };

std::string to_string(LayoutKind k);
LayoutKind layout_from_string(const std::string& s);
/// Number of target copies a layout places: end/middle 1, the probes 2.
int copy_count(LayoutKind k);

struct TokenBudget {
  std::string tier_label;       // e.g. "8K"
  long filler_tokens = 0;       // > 0
  double tolerance_fraction = 0.02;  // in (0, 0.05]

  void validate() const;
};

/// Token counting capability. count("") == 0 and counting is monotone
/// under concatenation.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual const std::string& id() const = 0;
  virtual long count(const std::string& text) const = 0;
};

/// Default estimator: ceil(byte_length / 4).
class ByteEstimator : public Tokenizer {
 public:
  const std::string& id() const override;
  long count(const std::string& text) const override;
};

/// Exact counts replayed from an offline oracle file. The file format is a
/// JSON header line {"tokenizer_id": ...} followed by "<hash> <count>"
/// lines keyed by content hash. Unknown text is an error: the oracle is a
/// recording, not an estimator.
class OracleFileTokenizer : public Tokenizer {
 public:
  explicit OracleFileTokenizer(const std::string& path);
  const std::string& id() const override;
  long count(const std::string& text) const override;

 private:
  std::string id_;
  std::map<std::string, long> counts_;
};

long estimate_tokens(const Tokenizer& tok, const std::string& text);

/// Budget-packed filler selection. wrap_count is how many times the
/// shuffled sequence restarted after pool exhaustion.
struct FillerSequence {
  std::vector<corpus::FillerItem> items;  // est_tokens per active tokenizer
  int wrap_count = 0;
};

/// Greedy accumulation of seeded-shuffled pool items until the next item
/// would exceed the budget. The accumulated total must land within
/// [(1-tol) * filler_tokens, filler_tokens]; an unreachable envelope is an
/// error, as is a first item that alone exceeds the budget.
FillerSequence fill_to_budget(const corpus::FillerPool& pool,
                              const TokenBudget& budget, uint64_t seed,
                              const Tokenizer& tok);

struct ManifestEntry {
  std::string filler_id;
  std::optional<corpus::GoldAnswer> gold;
  long est_tokens = 0;
  size_t start = 0;  // character offsets of the item block in text
  size_t end = 0;
};

struct AssembledPrompt {
  std::string text;
  LayoutKind layout = LayoutKind::end;
  TokenBudget tier;
  std::vector<std::pair<size_t, size_t>> target_spans;  // ascending
  std::vector<ManifestEntry> filler_manifest;           // textual order
  int wrap_count = 0;
  size_t insert_index = 0;  // filler items before the first target copy
  double preceding_filler_fraction = 1.0;
  long est_total_tokens = 0;  // sum of block estimates
  std::string template_id;
  std::string tokenizer_id;

  // target metadata carried for mocks, validation and scoring
  std::string target_id;
  std::string target_text;  // rendered block, no trailing separator
  corpus::GoldAnswer target_gold;
  corpus::TaskKind task_kind = corpus::TaskKind::math_word;
  std::string filler_kind;  // "with_solutions" / ... / "none"
  std::string system_text;  // optional system message from the template
};

/// Places the rendered target into the packed filler at the requested
/// layout and appends the answer instruction. Middle layouts insert at the
/// filler-item boundary whose preceding-token fraction is closest to 0.5
/// (ties break toward the earlier boundary) and require at least two
/// items.
AssembledPrompt assemble(const corpus::TaskInstance& target,
                         const FillerSequence& filler, LayoutKind layout,
                         const TokenBudget& budget,
                         const corpus::TemplateSet& tpl, const Tokenizer& tok);

struct LayoutReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Re-derives spans, manifest blocks, and the preceding-filler fraction
/// from the prompt text and compares them with the stored metadata.
/// Report-only; never throws on a violation.
LayoutReport layout_check(const AssembledPrompt& prompt);

}  // namespace poseval::promptbuild
