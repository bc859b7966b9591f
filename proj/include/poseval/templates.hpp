#pragma once

#include <map>
#include <string>

#include "poseval/corpus.hpp"

namespace poseval::corpus {

/// Versioned prompt-rendering assets. Every rendered prompt records the
/// template id so runs stay reproducible when wording changes.
///
/// Pieces and their placeholders:
///   filler_with_solutions   {{question}} {{solution}}
///   filler_questions_only   {{question}}
///   filler_neutral          {{text}}
///   target_math             {{question}}
///   target_choice           {{question}} {{choices}}
///   instruction_math        (no placeholders)
///   instruction_choice      (no placeholders)
///   system                  optional system message, may be empty
class TemplateSet {
 public:
  /// Compiled-in default assets, id "builtin-default-v1".
  static const TemplateSet& builtin_default();

  /// Loads a template directory: template.json names the id and one .txt
  /// file per piece.
  static TemplateSet load_dir(const std::string& dir);

  const std::string& id() const { return id_; }
  const std::string& system_message() const { return system_; }

  std::string render_filler(const TaskInstance& item, FillerKind kind) const;
  std::string render_neutral(const std::string& paragraph) const;
  std::string render_target(const TaskInstance& target) const;
  const std::string& instruction(TaskKind kind) const;

 private:
  std::string id_;
  std::string filler_ws_, filler_qo_, filler_neutral_;
  std::string target_math_, target_choice_;
  std::string instruction_math_, instruction_choice_;
  std::string system_;

  static std::string substitute(std::string tpl,
                                const std::map<std::string, std::string>& vars);
};

}  // namespace poseval::corpus
