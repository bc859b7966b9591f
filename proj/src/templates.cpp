#include "poseval/templates.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "poseval/util.hpp"

namespace poseval::corpus {

using nlohmann::json;

namespace {

// Rendered filler blocks end with a blank line: the separator belongs to
// the block so token accounting stays additive during packing.
constexpr const char* kFillerWs =
    "Question: {{question}}\nSolution: {{solution}}\n\n";
constexpr const char* kFillerQo = "Question: {{question}}\n\n";
constexpr const char* kFillerNeutral = "{{text}}\n\n";
constexpr const char* kTargetMath = "Problem to solve:\n{{question}}";
constexpr const char* kTargetChoice =
    "Question to answer:\n{{question}}\n{{choices}}";
constexpr const char* kInstructionMath =
    "Solve the problem stated above. Show your work, then give the final "
    "numeric answer on its own last line in the form:\n#### <answer>";
constexpr const char* kInstructionChoice =
    "Answer the question stated above. End your response with a line in "
    "the form:\nThe answer is (<letter>)";

std::string render_choices(const std::vector<Choice>& choices) {
  std::string out;
  for (const auto& c : choices) {
    out += c.label;
    out += ". ";
    out += c.text;
    out += "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace

std::string TemplateSet::substitute(
    std::string tpl, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string marker = "{{" + key + "}}";
    size_t pos = 0;
    while ((pos = tpl.find(marker, pos)) != std::string::npos) {
      tpl.replace(pos, marker.size(), value);
      pos += value.size();
    }
  }
  return tpl;
}

const TemplateSet& TemplateSet::builtin_default() {
  static const TemplateSet instance = [] {
    TemplateSet t;
    t.id_ = "builtin-default-v1";
    t.filler_ws_ = kFillerWs;
    t.filler_qo_ = kFillerQo;
    t.filler_neutral_ = kFillerNeutral;
    t.target_math_ = kTargetMath;
    t.target_choice_ = kTargetChoice;
    t.instruction_math_ = kInstructionMath;
    t.instruction_choice_ = kInstructionChoice;
    return t;
  }();
  return instance;
}

TemplateSet TemplateSet::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  const fs::path manifest = root / "template.json";
  if (!fs::exists(manifest))
    throw Error("template directory has no template.json: " + dir);
  json m = json::parse(util::read_file(manifest.string()));
  TemplateSet t;
  t.id_ = m.at("id").get<std::string>();
  auto piece = [&](const char* key) -> std::string {
    const std::string file = m.at("files").at(key).get<std::string>();
    return util::read_file((root / file).string());
  };
  t.filler_ws_ = piece("filler_with_solutions");
  t.filler_qo_ = piece("filler_questions_only");
  t.filler_neutral_ = piece("filler_neutral");
  t.target_math_ = piece("target_math");
  t.target_choice_ = piece("target_choice");
  t.instruction_math_ = piece("instruction_math");
  t.instruction_choice_ = piece("instruction_choice");
  if (m.at("files").contains("system")) t.system_ = piece("system");
  return t;
}

std::string TemplateSet::render_filler(const TaskInstance& item,
                                       FillerKind kind) const {
  std::string question = item.question;
  if (item.kind == TaskKind::multiple_choice && !item.choices.empty())
    question += "\n" + render_choices(item.choices);
  switch (kind) {
    case FillerKind::with_solutions: {
      std::string solution = item.rationale;
      if (solution.empty()) solution = "The answer is " + item.gold.display() + ".";
      return substitute(filler_ws_,
                        {{"question", question}, {"solution", solution}});
    }
    case FillerKind::questions_only_v2:
      return substitute(filler_qo_, {{"question", question}});
    case FillerKind::neutral_text:
      throw Error("render_filler: neutral items use render_neutral");
  }
  throw Error("render_filler: unknown kind");
}

std::string TemplateSet::render_neutral(const std::string& paragraph) const {
  return substitute(filler_neutral_, {{"text", paragraph}});
}

std::string TemplateSet::render_target(const TaskInstance& target) const {
  if (target.kind == TaskKind::math_word)
    return substitute(target_math_, {{"question", target.question}});
  return substitute(target_choice_,
                    {{"question", target.question},
                     {"choices", render_choices(target.choices)}});
}

const std::string& TemplateSet::instruction(TaskKind kind) const {
  return kind == TaskKind::math_word ? instruction_math_ : instruction_choice_;
}

}  // namespace poseval::corpus
