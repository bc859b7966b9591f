#include "poseval/config.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <nlohmann/json.hpp>

namespace poseval::runner {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<promptbuild::TokenBudget> default_tiers() {
  return {{"8K", 8192, 0.02}, {"32K", 32768, 0.02}, {"64K", 65536, 0.02}};
}

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  return path.is_absolute() ? path.string() : (base / path).string();
}

modelgate::ModelSpec parse_model(const json& j) {
  modelgate::ModelSpec m;
  m.model_id = j.at("model_id").get<std::string>();
  m.endpoint_url = j.value("endpoint_url", std::string("mock:"));
  m.api_key_env = j.value("api_key_env", std::string());
  m.reasoning_mode =
      modelgate::reasoning_mode_from_string(j.value("reasoning_mode", "vendor_default"));
  m.max_gen_tokens = j.value("max_gen_tokens", 2048L);
  m.temperature = j.value("temperature", 0.0);
  m.max_concurrency = j.value("max_concurrency", 4);
  m.request_timeout_ms = j.value("request_timeout_ms", 120000L);
  if (j.contains("filler_budget_override"))
    for (auto& [tier, tokens] : j["filler_budget_override"].items())
      m.filler_budget_override[tier] = tokens.get<long>();
  if (j.contains("extra_body")) m.extra_body = j["extra_body"];
  if (j.contains("mock_script")) m.mock_script = j["mock_script"];
  return m;
}

}  // namespace

void RunConfig::validate() const {
  if (models.empty()) throw Error("config: no models");
  if (tasks.empty()) throw Error("config: no tasks");
  if (fillers.empty()) throw Error("config: no fillers");
  if (tiers.empty()) throw Error("config: no tiers");
  if (layouts.empty()) throw Error("config: no layouts");
  if (seeds.empty()) throw Error("config: no seeds");
  if (gen_variants.empty()) throw Error("config: no gen_variants");

  std::vector<std::string> tier_labels;
  std::set<std::string> tier_set;
  for (const auto& t : tiers) {
    t.validate();
    tier_labels.push_back(t.tier_label);
    if (!tier_set.insert(t.tier_label).second)
      throw Error("config: duplicate tier label " + t.tier_label);
  }
  for (const auto& d : diagnostics_tiers)
    if (!tier_set.count(d))
      throw Error("config: diagnostics tier " + d + " is not a configured tier");

  std::set<std::string> model_ids;
  for (const auto& m : models) {
    m.validate(tier_labels);
    if (!model_ids.insert(m.model_id).second)
      throw Error("config: duplicate model_id " + m.model_id);
  }

  std::set<std::string> task_ids;
  for (const auto& t : tasks) {
    if (t.task_id.empty()) throw Error("config: task with empty task_id");
    if (t.task_id.find('|') != std::string::npos)
      throw Error("config: task_id must not contain '|': " + t.task_id);
    if (t.test_path.empty()) throw Error("config: task " + t.task_id + " has no test_path");
    if (t.n_per_condition == 0)
      throw Error("config: task " + t.task_id + " has n_per_condition 0");
    if (!task_ids.insert(t.task_id).second)
      throw Error("config: duplicate task_id " + t.task_id);
  }

  for (const auto& f : fillers) {
    if (f == "none") continue;
    corpus::filler_kind_from_string(f);  // throws on junk
  }
  for (const auto& [model, filler] : worst_case_filler) {
    if (!model_ids.count(model))
      throw Error("config: worst_case_filler names unknown model " + model);
    corpus::filler_kind_from_string(filler);
  }
  if (exclusion) {
    if (!exclusion->task_id.empty() && !task_ids.count(exclusion->task_id))
      throw Error("config: exclusion rule names unknown task " + exclusion->task_id);
    if (exclusion->min_accuracy < 0.0 || exclusion->min_accuracy > 1.0)
      throw Error("config: exclusion min_accuracy out of [0, 1]");
  }
}

RunConfig RunConfig::load(const std::string& path) {
  const fs::path base = fs::absolute(fs::path(path)).parent_path();
  json j = json::parse(util::read_file(path));
  RunConfig cfg;

  for (const auto& m : j.at("models")) cfg.models.push_back(parse_model(m));

  for (const auto& t : j.at("tasks")) {
    TaskConfig task;
    task.task_id = t.at("task_id").get<std::string>();
    const std::string kind = t.value("kind", "math_word");
    if (kind == "math_word") task.kind = corpus::TaskKind::math_word;
    else if (kind == "multiple_choice") task.kind = corpus::TaskKind::multiple_choice;
    else throw Error("config: unknown task kind " + kind);
    task.test_path = resolve(base, t.at("test_path").get<std::string>());
    task.train_path = resolve(base, t.value("train_path", std::string()));
    task.n_per_condition = t.value("n_per_condition", 50UL);
    cfg.tasks.push_back(std::move(task));
  }

  cfg.fillers = j.value("fillers", std::vector<std::string>{});
  for (const auto& p : j.value("prose_paths", std::vector<std::string>{}))
    cfg.prose_paths.push_back(resolve(base, p));

  if (j.contains("tiers")) {
    for (const auto& t : j["tiers"]) {
      promptbuild::TokenBudget b;
      b.tier_label = t.at("label").get<std::string>();
      b.filler_tokens = t.at("filler_tokens").get<long>();
      b.tolerance_fraction = t.value("tolerance", 0.02);
      cfg.tiers.push_back(std::move(b));
    }
  } else {
    cfg.tiers = default_tiers();
  }

  for (const auto& l : j.value("layouts", std::vector<std::string>{"end", "middle"}))
    cfg.layouts.push_back(promptbuild::layout_from_string(l));

  cfg.seeds = j.value("seeds", std::vector<long long>{42});
  if (j.contains("diagnostics_tiers")) {
    cfg.diagnostics_tiers = j["diagnostics_tiers"].get<std::vector<std::string>>();
  } else {
    // default probes to the 8K tier when the run has one
    cfg.diagnostics_tiers = {"8K"};
    std::erase_if(cfg.diagnostics_tiers, [&](const std::string& d) {
      return std::none_of(cfg.tiers.begin(), cfg.tiers.end(),
                          [&](const auto& t) { return t.tier_label == d; });
    });
  }

  if (j.contains("gen_variants")) {
    for (const auto& g : j["gen_variants"]) {
      GenVariant v;
      v.name = g.at("name").get<std::string>();
      v.max_gen_tokens = g.at("max_gen_tokens").get<long>();
      cfg.gen_variants.push_back(std::move(v));
    }
  } else {
    cfg.gen_variants.push_back(GenVariant{});
  }

  if (j.contains("exclusion")) {
    const auto& e = j["exclusion"];
    ExclusionRule rule;
    rule.task_id = e.value("task_id", std::string());
    rule.filler_kind = e.value("filler_kind", std::string("with_solutions"));
    rule.tier_label = e.value("tier_label", std::string("8K"));
    rule.layout = e.value("layout", std::string("end"));
    rule.min_accuracy = e.at("min_accuracy").get<double>();
    cfg.exclusion = rule;
  }

  if (j.contains("worst_case_filler"))
    for (auto& [model, filler] : j["worst_case_filler"].items())
      cfg.worst_case_filler[model] = filler.get<std::string>();

  cfg.template_dir = resolve(base, j.value("template_dir", std::string()));
  cfg.token_oracle_path = resolve(base, j.value("token_oracle_path", std::string()));

  cfg.validate();
  return cfg;
}

}  // namespace poseval::runner
