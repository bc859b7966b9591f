#include "poseval/scoring.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace poseval::scoring {

using corpus::GoldAnswer;
using nlohmann::json;
using util::Decimal;

// --- number scanning ---------------------------------------------------

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

struct NumberToken {
  size_t start = 0;
  Decimal value;
};

/// Standalone number tokens: optional sign/currency then digits with
/// commas and at most one decimal point, not glued to letters or digits on
/// either side (so "v2.5" or "72pp" never match).
std::vector<NumberToken> find_numbers(const std::string& text) {
  std::vector<NumberToken> out;
  const size_t n = text.size();
  size_t i = 0;
  while (i < n) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    // token start: back up over one sign and/or a '$'
    size_t start = i;
    if (start > 0 && text[start - 1] == '$') --start;
    if (start > 0 && (text[start - 1] == '-' || text[start - 1] == '+')) {
      // a sign glued to a word ("x-4") is subtraction, not a sign
      if (start < 2 || !is_alnum(text[start - 2])) --start;
    }
    if (start > 0 && (is_alnum(text[start - 1]) || text[start - 1] == '.')) {
      while (i < n && is_alnum(text[i])) ++i;
      continue;
    }
    size_t j = i;
    while (j < n) {
      const char c = text[j];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++j;
      } else if (c == ',' && j + 1 < n &&
                 std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
      } else if (c == '.' && j + 1 < n &&
                 std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
      } else {
        break;
      }
    }
    if (j < n && is_alnum(text[j])) {
      // glued suffix ("72pp", "3rd"): not standalone
      while (j < n && is_alnum(text[j])) ++j;
      i = j;
      continue;
    }
    auto value = Decimal::parse(text.substr(start, j - start));
    if (value) out.push_back({start, *value});
    i = j;
  }
  return out;
}

/// One match position per final-answer marker occurrence; the scan keys on
/// the position where the answer is expected to follow.
std::vector<size_t> find_markers(const std::string& text) {
  static const std::array<const char*, 5> kMarkers = {
      "####", "answer is", "answer:", "final answer", "\\boxed{"};
  const std::string lower = util::to_lower(text);
  std::vector<size_t> out;
  for (const char* marker : kMarkers) {
    size_t pos = 0;
    const std::string m = marker;
    while ((pos = lower.find(m, pos)) != std::string::npos) {
      out.push_back(pos + m.size());
      pos += m.size();
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::optional<Decimal> extract_math_answer(const std::string& text) {
  const auto numbers = find_numbers(text);
  if (numbers.empty()) return std::nullopt;
  const auto markers = find_markers(text);
  if (!markers.empty()) {
    const size_t after = markers.back();
    for (const auto& tok : numbers)
      if (tok.start >= after) return tok.value;
    // marker with no number after it: fall back to the last number
  }
  return numbers.back().value;
}

// --- choice scanning -----------------------------------------------------

namespace {

struct LetterToken {
  size_t start = 0;
  char letter = 0;
};

std::vector<LetterToken> find_letters(const std::string& text,
                                      const std::set<char>& valid) {
  std::vector<LetterToken> out;
  const size_t n = text.size();
  for (size_t i = 0; i < n; ++i) {
    const char upper =
        static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    if (!valid.count(upper)) continue;
    const bool left_ok = i == 0 || !is_alnum(text[i - 1]);
    const bool right_ok = i + 1 == n || !is_alnum(text[i + 1]);
    if (left_ok && right_ok) out.push_back({i, upper});
  }
  return out;
}

}  // namespace

std::optional<char> extract_choice_answer(const std::string& text,
                                          const std::vector<corpus::Choice>& choices) {
  std::set<char> valid;
  for (const auto& c : choices)
    if (!c.label.empty()) valid.insert(c.label[0]);
  if (valid.empty()) return std::nullopt;

  const auto letters = find_letters(text, valid);
  const auto markers = find_markers(text);
  if (!markers.empty()) {
    const size_t after = markers.back();
    for (const auto& tok : letters)
      if (tok.start >= after) return tok.letter;
  }

  std::set<char> distinct;
  for (const auto& tok : letters) distinct.insert(tok.letter);
  if (distinct.size() == 1) return *distinct.begin();

  // ambiguous or absent letters: accept a unique choice-text mention
  const std::string lower = util::to_lower(text);
  char matched = 0;
  int matches = 0;
  for (const auto& c : choices) {
    const std::string choice_text = util::to_lower(util::trim(c.text));
    if (choice_text.size() < 4) continue;
    if (lower.find(choice_text) != std::string::npos) {
      ++matches;
      matched = c.label[0];
    }
  }
  if (matches == 1) return matched;
  return std::nullopt;
}

// --- grading ------------------------------------------------------------

GradedRecord grade(const runner::RunRecord& record,
                   const corpus::TaskInstance& target) {
  if (record.target_id != target.id)
    throw Error("grade: record target " + record.target_id +
                " does not match instance " + target.id);
  GradedRecord g;
  g.key = record.key;
  g.target_id = record.target_id;
  g.budget_tokens = record.budget_tokens;

  using modelgate::ResponseStatus;
  const auto status = record.response.status;
  if (status == ResponseStatus::api_error || status == ResponseStatus::timeout ||
      status == ResponseStatus::empty) {
    g.error_flag = modelgate::to_string(status);
    g.correct = false;
    return g;
  }

  if (target.kind == corpus::TaskKind::math_word) {
    auto value = extract_math_answer(record.response.text);
    if (value) g.extracted = GoldAnswer::number(*value);
  } else {
    auto letter = extract_choice_answer(record.response.text, target.choices);
    if (letter) g.extracted = GoldAnswer::letter(*letter);
  }
  g.correct = g.extracted && *g.extracted == target.gold;
  return g;
}

GradedRecord filler_match(GradedRecord graded, const runner::RunRecord& record) {
  graded.match_any_filler = false;
  graded.match_last_filler = false;
  graded.match_applicable = false;

  bool any_gold = false;
  for (const auto& e : record.filler_manifest)
    if (e.gold) any_gold = true;
  if (!any_gold) return graded;  // neutral or empty manifest: not applicable
  graded.match_applicable = true;

  if (graded.correct || !graded.extracted) return graded;
  if (graded.extracted->kind != GoldAnswer::Kind::number) return graded;

  for (const auto& e : record.filler_manifest)
    if (e.gold && *e.gold == *graded.extracted) graded.match_any_filler = true;
  const auto& last = record.filler_manifest.back();
  if (last.gold && *last.gold == *graded.extracted)
    graded.match_last_filler = true;
  return graded;
}

// --- restatement ----------------------------------------------------------

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kStopwords = {
      "about", "above", "after", "again", "against", "also", "been", "being",
      "below", "between", "both", "could", "does", "down", "during", "each",
      "from", "further", "have", "having", "here", "into", "itself", "just",
      "like", "made", "make", "many", "more", "most", "much", "must", "never",
      "once", "only", "other", "over", "same", "shall", "should", "some",
      "such", "than", "that", "their", "theirs", "them", "then", "there",
      "these", "they", "this", "those", "through", "under", "until", "upon",
      "very", "were", "what", "when", "where", "which", "while", "will",
      "with", "would", "your", "yours"};
  return kStopwords;
}

}  // namespace

bool detect_restatement(const std::string& trace,
                        const corpus::TaskInstance& target,
                        const RestatementParams& params) {
  const auto question_words = util::word_tokens(target.question);
  std::set<std::string> content;
  for (const auto& w : question_words)
    if (w.size() >= params.min_word_len && !stopwords().count(w))
      content.insert(w);
  if (content.empty()) return false;

  const auto trace_words = util::word_tokens(trace);
  const size_t window = std::max<size_t>(
      1, static_cast<size_t>(
             std::ceil(params.window_factor *
                       static_cast<double>(question_words.size()))));
  const size_t needed = static_cast<size_t>(
      std::ceil(params.overlap_threshold * static_cast<double>(content.size())));

  std::map<std::string, size_t> in_window;  // content word -> count in window
  size_t covered = 0;
  size_t lo = 0;
  for (size_t hi = 0; hi < trace_words.size(); ++hi) {
    const auto& w = trace_words[hi];
    if (content.count(w) && ++in_window[w] == 1) ++covered;
    if (hi + 1 - lo > window) {
      const auto& out = trace_words[lo++];
      if (content.count(out) && --in_window[out] == 0) --covered;
    }
    if (covered >= needed) return true;
  }
  return false;
}

// --- pipeline ----------------------------------------------------------

GradedRecord grade_full(const runner::RunRecord& record,
                        const corpus::TaskInstance& target,
                        const RestatementParams& params) {
  GradedRecord g = filler_match(grade(record, target), record);
  if (record.response.reasoning_trace) {
    g.restated_target =
        detect_restatement(*record.response.reasoning_trace, target, params);
    g.restatement_params = params;
  }
  return g;
}

std::vector<GradedRecord> score_records(
    const std::vector<runner::RunRecord>& records,
    const std::function<const corpus::TaskInstance*(const std::string&,
                                                    const std::string&)>& resolve,
    const RestatementParams& params) {
  std::vector<GradedRecord> out;
  out.reserve(records.size());
  for (const auto& record : records) {
    const corpus::TaskInstance* target =
        resolve(record.key.task_id, record.target_id);
    if (!target)
      throw Error("score_records: unknown target " + record.target_id +
                  " for task " + record.key.task_id);
    out.push_back(grade_full(record, *target, params));
  }
  return out;
}

// --- serialization ----------------------------------------------------------

json GradedRecord::to_json() const {
  json j;
  j["key"] = {{"model", key.model_id},     {"task", key.task_id},
              {"filler", key.filler_kind}, {"tier", key.tier_label},
              {"layout", key.layout},      {"seed", key.seed},
              {"gen_variant", key.gen_variant}, {"item_index", key.item_index}};
  j["target_id"] = target_id;
  j["budget_tokens"] = budget_tokens;
  if (extracted) {
    j["extracted"] = {{"kind", extracted->kind == GoldAnswer::Kind::number
                                   ? "number"
                                   : "letter"},
                      {"value", extracted->display()}};
  }
  j["correct"] = correct;
  j["match_any_filler"] = match_any_filler;
  j["match_last_filler"] = match_last_filler;
  j["match_applicable"] = match_applicable;
  if (restated_target) j["restated_target"] = *restated_target;
  if (restatement_params)
    j["restatement_params"] = {
        {"min_word_len", restatement_params->min_word_len},
        {"overlap_threshold", restatement_params->overlap_threshold},
        {"window_factor", restatement_params->window_factor}};
  if (error_flag) j["error_flag"] = *error_flag;
  j["extraction_rules"] = kExtractionRulesId;
  return j;
}

GradedRecord GradedRecord::from_json(const json& j) {
  GradedRecord g;
  const json& k = j.at("key");
  g.key.model_id = k.at("model").get<std::string>();
  g.key.task_id = k.at("task").get<std::string>();
  g.key.filler_kind = k.at("filler").get<std::string>();
  g.key.tier_label = k.at("tier").get<std::string>();
  g.key.layout = k.at("layout").get<std::string>();
  g.key.seed = k.at("seed").get<long long>();
  g.key.gen_variant = k.at("gen_variant").get<std::string>();
  g.key.item_index = k.at("item_index").get<long>();
  g.target_id = j.at("target_id").get<std::string>();
  g.budget_tokens = j.value("budget_tokens", 0L);
  if (j.contains("extracted")) {
    const json& e = j["extracted"];
    const std::string kind = e.at("kind").get<std::string>();
    const std::string value = e.at("value").get<std::string>();
    if (kind == "number") {
      auto d = Decimal::parse(value);
      if (!d) throw Error("bad extracted number in graded record: " + value);
      g.extracted = GoldAnswer::number(*d);
    } else {
      g.extracted = GoldAnswer::letter(value.at(0));
    }
  }
  g.correct = j.at("correct").get<bool>();
  g.match_any_filler = j.value("match_any_filler", false);
  g.match_last_filler = j.value("match_last_filler", false);
  g.match_applicable = j.value("match_applicable", false);
  if (j.contains("restated_target"))
    g.restated_target = j["restated_target"].get<bool>();
  if (j.contains("restatement_params")) {
    RestatementParams p;
    p.min_word_len = j["restatement_params"].value("min_word_len", 4UL);
    p.overlap_threshold = j["restatement_params"].value("overlap_threshold", 0.8);
    p.window_factor = j["restatement_params"].value("window_factor", 1.5);
    g.restatement_params = p;
  }
  if (j.contains("error_flag")) g.error_flag = j["error_flag"].get<std::string>();
  return g;
}

}  // namespace poseval::scoring
