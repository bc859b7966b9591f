#include "poseval/corpus.hpp"

#include <algorithm>
#include <set>
#include <nlohmann/json.hpp>

#include "poseval/templates.hpp"

namespace poseval::corpus {

using nlohmann::json;

std::string to_string(TaskKind k) {
  return k == TaskKind::math_word ? "math_word" : "multiple_choice";
}

std::string to_string(FillerKind k) {
  switch (k) {
    case FillerKind::with_solutions: return "with_solutions";
    case FillerKind::questions_only_v2: return "questions_only_v2";
    case FillerKind::neutral_text: return "neutral_text";
  }
  throw Error("bad FillerKind");
}

std::string short_code(FillerKind k) {
  switch (k) {
    case FillerKind::with_solutions: return "ws";
    case FillerKind::questions_only_v2: return "qo_v2";
    case FillerKind::neutral_text: return "neutral";
  }
  throw Error("bad FillerKind");
}

FillerKind filler_kind_from_string(const std::string& s) {
  if (s == "with_solutions" || s == "ws") return FillerKind::with_solutions;
  if (s == "questions_only_v2" || s == "qo_v2")
    return FillerKind::questions_only_v2;
  if (s == "neutral_text" || s == "neutral") return FillerKind::neutral_text;
  throw Error("unknown filler kind: " + s);
}

GoldAnswer GoldAnswer::number(util::Decimal d) {
  GoldAnswer g;
  g.kind = Kind::number;
  g.number_value = std::move(d);
  return g;
}

GoldAnswer GoldAnswer::letter(char c) {
  if (c < 'A' || c > 'Z') throw Error("GoldAnswer::letter: not an uppercase letter");
  GoldAnswer g;
  g.kind = Kind::letter;
  g.letter_value = c;
  return g;
}

bool GoldAnswer::operator==(const GoldAnswer& o) const {
  if (kind != o.kind) return false;
  return kind == Kind::number ? number_value == o.number_value
                              : letter_value == o.letter_value;
}

std::string GoldAnswer::display() const {
  return kind == Kind::number ? number_value.str() : std::string(1, letter_value);
}

// --- loaders -----------------------------------------------------------

namespace {

json parse_jsonl_line(const std::string& line, const std::string& path,
                      size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(path + ":" + std::to_string(line_no) +
                ": malformed JSON line: " + e.what());
  }
}

/// The gold marker is the dataset's "#### <number>" convention on the
/// final line of the answer text.
std::optional<util::Decimal> parse_gold_marker(const std::string& answer) {
  size_t pos = answer.rfind("####");
  if (pos == std::string::npos) return std::nullopt;
  std::string tail = answer.substr(pos + 4);
  if (size_t nl = tail.find('\n'); nl != std::string::npos)
    tail = tail.substr(0, nl);
  return util::Decimal::parse(tail);
}

}  // namespace

std::vector<TaskInstance> load_math_dataset(const std::string& path,
                                            Split split) {
  const std::string content = util::read_file(path);
  std::vector<TaskInstance> out;
  std::set<std::string> seen_ids;
  size_t line_no = 0;
  for (const auto& line : util::split_lines(content)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    json rec = parse_jsonl_line(line, path, line_no);
    TaskInstance t;
    t.kind = TaskKind::math_word;
    t.source_split = split;
    if (!rec.contains("question") || !rec["question"].is_string())
      throw Error(path + ":" + std::to_string(line_no) + ": missing question field");
    t.question = util::trim(rec["question"].get<std::string>());
    if (t.question.empty())
      throw Error(path + ":" + std::to_string(line_no) + ": empty question");
    if (!rec.contains("answer") || !rec["answer"].is_string())
      throw Error(path + ":" + std::to_string(line_no) + ": missing answer field");
    const std::string answer = rec["answer"].get<std::string>();
    t.id = rec.value("id", "math:" + std::to_string(line_no));
    auto gold = parse_gold_marker(answer);
    if (!gold)
      throw Error(path + ": record " + t.id + ": no '#### <number>' gold marker");
    t.gold = GoldAnswer::number(*gold);
    size_t marker = answer.rfind("####");
    t.rationale = util::trim(answer.substr(0, marker));
    if (!seen_ids.insert(t.id).second)
      throw Error(path + ": duplicate id " + t.id);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TaskInstance> load_choice_dataset(const std::string& path) {
  const std::string content = util::read_file(path);
  std::vector<TaskInstance> out;
  std::set<std::string> seen_ids;
  size_t line_no = 0;
  for (const auto& line : util::split_lines(content)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    json rec = parse_jsonl_line(line, path, line_no);
    TaskInstance t;
    t.kind = TaskKind::multiple_choice;
    t.source_split = Split::test;
    t.id = rec.value("id", "choice:" + std::to_string(line_no));
    const std::string where = path + ": record " + t.id;

    json q = rec.contains("question") ? rec["question"] : json();
    json choices_node;
    if (q.is_string()) {
      t.question = q.get<std::string>();
      if (rec.contains("choices")) choices_node = rec["choices"];
    } else if (q.is_object()) {
      t.question = q.value("stem", "");
      if (q.contains("choices")) choices_node = q["choices"];
      else if (rec.contains("choices")) choices_node = rec["choices"];
    }
    t.question = util::trim(t.question);
    if (t.question.empty()) throw Error(where + ": empty question");

    if (choices_node.is_array()) {
      for (const auto& c : choices_node) {
        Choice ch;
        ch.label = c.at("label").get<std::string>();
        ch.text = c.at("text").get<std::string>();
        t.choices.push_back(std::move(ch));
      }
    } else if (choices_node.is_object() && choices_node.contains("label")) {
      const auto& labels = choices_node["label"];
      const auto& texts = choices_node["text"];
      if (labels.size() != texts.size())
        throw Error(where + ": choice label/text arrays differ in length");
      for (size_t i = 0; i < labels.size(); ++i)
        t.choices.push_back({labels[i].get<std::string>(), texts[i].get<std::string>()});
    } else {
      throw Error(where + ": no choices");
    }
    if (t.choices.size() < 2) throw Error(where + ": fewer than 2 choices");

    std::set<std::string> labels;
    for (auto& c : t.choices) {
      c.label = util::trim(c.label);
      if (c.label.size() == 1 && c.label[0] >= 'a' && c.label[0] <= 'z')
        c.label[0] = static_cast<char>(c.label[0] - 'a' + 'A');
      if (c.label.size() != 1 || c.label[0] < 'A' || c.label[0] > 'Z')
        throw Error(where + ": choice label is not a single letter: '" + c.label + "'");
      if (!labels.insert(c.label).second)
        throw Error(where + ": duplicate choice label " + c.label);
    }

    std::string gold;
    if (rec.contains("answerKey")) gold = rec["answerKey"].get<std::string>();
    else if (rec.contains("gold")) gold = rec["gold"].get<std::string>();
    else throw Error(where + ": no gold label (answerKey)");
    gold = util::trim(gold);
    if (gold.size() == 1 && gold[0] >= 'a' && gold[0] <= 'z')
      gold[0] = static_cast<char>(gold[0] - 'a' + 'A');
    if (gold.size() != 1 || !labels.count(gold))
      throw Error(where + ": gold label '" + gold + "' not among choices");
    t.gold = GoldAnswer::letter(gold[0]);

    if (!seen_ids.insert(t.id).second) throw Error(path + ": duplicate id " + t.id);
    out.push_back(std::move(t));
  }
  return out;
}

// --- filler pools --------------------------------------------------------

namespace {

long default_token_estimate(const std::string& text) {
  return static_cast<long>((text.size() + 3) / 4);
}

}  // namespace

FillerPool build_filler_pool(const std::vector<TaskInstance>& task_items,
                             FillerKind kind, const TemplateSet& tpl) {
  if (kind == FillerKind::neutral_text)
    throw Error("build_filler_pool: neutral pools come from prose files");
  if (task_items.empty()) throw Error("build_filler_pool: empty source");
  FillerPool pool;
  pool.kind = kind;
  std::string fingerprint_src = tpl.id();
  for (const auto& item : task_items) {
    if (item.source_split != Split::train)
      throw Error("build_filler_pool: item " + item.id + " is not from the train split");
    FillerItem f;
    f.id = item.id;
    f.kind = kind;
    f.text = tpl.render_filler(item, kind);
    f.gold = item.gold;
    f.est_tokens = default_token_estimate(f.text);
    fingerprint_src += f.text;
    pool.items.push_back(std::move(f));
  }
  pool.source_fingerprint = util::content_hash(fingerprint_src);
  return pool;
}

FillerPool build_neutral_pool(const std::vector<std::string>& prose_paths,
                              const TemplateSet& tpl,
                              size_t min_paragraph_chars) {
  if (prose_paths.empty()) throw Error("build_neutral_pool: empty source");
  FillerPool pool;
  pool.kind = FillerKind::neutral_text;
  std::string fingerprint_src = tpl.id();
  for (const auto& path : prose_paths) {
    const std::string content = util::read_file(path);
    // paragraphs split on blank lines
    std::vector<std::string> paragraphs;
    std::string cur;
    for (const auto& line : util::split_lines(content)) {
      if (util::trim(line).empty()) {
        if (!cur.empty()) paragraphs.push_back(cur);
        cur.clear();
      } else {
        if (!cur.empty()) cur += "\n";
        cur += line;
      }
    }
    if (!cur.empty()) paragraphs.push_back(cur);

    size_t para_no = 0;
    std::string stem = path;
    if (size_t slash = stem.find_last_of('/'); slash != std::string::npos)
      stem = stem.substr(slash + 1);
    for (const auto& p : paragraphs) {
      ++para_no;
      if (p.size() < min_paragraph_chars) {
        ++pool.skipped_short;
        continue;
      }
      FillerItem f;
      f.id = "neutral:" + stem + ":" + std::to_string(para_no);
      f.kind = FillerKind::neutral_text;
      f.text = tpl.render_neutral(p);
      f.est_tokens = default_token_estimate(f.text);
      fingerprint_src += f.text;
      pool.items.push_back(std::move(f));
    }
  }
  if (pool.items.empty())
    throw Error("build_neutral_pool: no paragraph met the length floor");
  pool.source_fingerprint = util::content_hash(fingerprint_src);
  return pool;
}

std::vector<TaskInstance> sample_targets(
    const std::vector<TaskInstance>& instances, size_t n, uint64_t seed) {
  for (const auto& t : instances)
    if (t.source_split != Split::test)
      throw Error("sample_targets: " + t.id + " is not from the test split");
  if (n > instances.size())
    throw Error("sample_targets: n (" + std::to_string(n) +
                ") exceeds available instances (" +
                std::to_string(instances.size()) + ")");
  auto idx = util::sample_indices(instances.size(), n, seed);
  std::vector<TaskInstance> out;
  out.reserve(n);
  for (size_t i : idx) out.push_back(instances[i]);
  return out;
}

}  // namespace poseval::corpus
