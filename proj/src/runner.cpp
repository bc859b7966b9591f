#include "poseval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "poseval/exclusion.hpp"
#include "poseval/scoring.hpp"
#include "poseval/templates.hpp"

namespace poseval::runner {

using nlohmann::json;
namespace fs = std::filesystem;

// --- keys --------------------------------------------------------------

std::string ConditionKey::to_key_string() const {
  return model_id + "|" + task_id + "|" + filler_kind + "|" + tier_label + "|" +
         layout + "|" + std::to_string(seed) + "|" + gen_variant + "|" +
         std::to_string(item_index);
}

ConditionKey ConditionKey::from_key_string(const std::string& s) {
  std::vector<std::string> parts;
  size_t start = 0;
  for (;;) {
    size_t bar = s.find('|', start);
    if (bar == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, bar - start));
    start = bar + 1;
  }
  if (parts.size() != 8) throw Error("bad condition key string: " + s);
  ConditionKey k;
  k.model_id = parts[0];
  k.task_id = parts[1];
  k.filler_kind = parts[2];
  k.tier_label = parts[3];
  k.layout = parts[4];
  k.seed = std::stoll(parts[5]);
  k.gen_variant = parts[6];
  k.item_index = std::stol(parts[7]);
  return k;
}

// --- record serialization ---------------------------------------------

namespace {

json gold_to_json(const corpus::GoldAnswer& g) {
  if (g.kind == corpus::GoldAnswer::Kind::number)
    return {{"kind", "number"}, {"value", g.number_value.str()}};
  return {{"kind", "letter"}, {"value", std::string(1, g.letter_value)}};
}

corpus::GoldAnswer gold_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::string value = j.at("value").get<std::string>();
  if (kind == "number") {
    auto d = util::Decimal::parse(value);
    if (!d) throw Error("bad stored gold number: " + value);
    return corpus::GoldAnswer::number(*d);
  }
  if (kind == "letter" && value.size() == 1)
    return corpus::GoldAnswer::letter(value[0]);
  throw Error("bad stored gold answer");
}

json key_to_json(const ConditionKey& k) {
  return {{"model", k.model_id},     {"task", k.task_id},
          {"filler", k.filler_kind}, {"tier", k.tier_label},
          {"layout", k.layout},      {"seed", k.seed},
          {"gen_variant", k.gen_variant}, {"item_index", k.item_index}};
}

ConditionKey key_from_json(const json& j) {
  ConditionKey k;
  k.model_id = j.at("model").get<std::string>();
  k.task_id = j.at("task").get<std::string>();
  k.filler_kind = j.at("filler").get<std::string>();
  k.tier_label = j.at("tier").get<std::string>();
  k.layout = j.at("layout").get<std::string>();
  k.seed = j.at("seed").get<long long>();
  k.gen_variant = j.at("gen_variant").get<std::string>();
  k.item_index = j.at("item_index").get<long>();
  return k;
}

json response_to_json(const modelgate::ModelResponse& r) {
  json j;
  j["text"] = r.text;
  if (r.reasoning_trace) j["reasoning_trace"] = *r.reasoning_trace;
  if (r.prompt_tokens) j["prompt_tokens"] = *r.prompt_tokens;
  if (r.completion_tokens) j["completion_tokens"] = *r.completion_tokens;
  j["status"] = modelgate::to_string(r.status);
  j["latency_ms"] = r.latency_ms;
  j["attempt_count"] = r.attempt_count;
  if (!r.error_detail.empty()) j["error_detail"] = r.error_detail;
  return j;
}

modelgate::ModelResponse response_from_json(const json& j) {
  modelgate::ModelResponse r;
  r.text = j.value("text", std::string());
  if (j.contains("reasoning_trace"))
    r.reasoning_trace = j["reasoning_trace"].get<std::string>();
  if (j.contains("prompt_tokens")) r.prompt_tokens = j["prompt_tokens"].get<long>();
  if (j.contains("completion_tokens"))
    r.completion_tokens = j["completion_tokens"].get<long>();
  r.status = modelgate::response_status_from_string(j.at("status").get<std::string>());
  r.latency_ms = j.value("latency_ms", 0L);
  r.attempt_count = j.value("attempt_count", 1);
  r.error_detail = j.value("error_detail", std::string());
  return r;
}

}  // namespace

json RunRecord::to_json() const {
  json entries = json::array();
  for (const auto& e : filler_manifest) {
    json je;
    je["id"] = e.filler_id;
    if (e.gold) je["gold"] = gold_to_json(*e.gold);
    je["est_tokens"] = e.est_tokens;
    je["start"] = e.start;
    je["end"] = e.end;
    entries.push_back(std::move(je));
  }
  return {{"schema_version", schema_version},
          {"key", key_to_json(key)},
          {"prompt_hash", prompt_hash},
          {"target_id", target_id},
          {"filler_manifest", std::move(entries)},
          {"wrap_count", wrap_count},
          {"budget_tokens", budget_tokens},
          {"temperature", temperature},
          {"max_gen_tokens", max_gen_tokens},
          {"response", response_to_json(response)},
          {"created_at", created_at},
          {"template_id", template_id}};
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.schema_version = j.value("schema_version", 1);
  r.key = key_from_json(j.at("key"));
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.target_id = j.at("target_id").get<std::string>();
  for (const auto& je : j.at("filler_manifest")) {
    promptbuild::ManifestEntry e;
    e.filler_id = je.at("id").get<std::string>();
    if (je.contains("gold")) e.gold = gold_from_json(je["gold"]);
    e.est_tokens = je.value("est_tokens", 0L);
    e.start = je.value("start", 0UL);
    e.end = je.value("end", 0UL);
    r.filler_manifest.push_back(std::move(e));
  }
  r.wrap_count = j.value("wrap_count", 0);
  r.budget_tokens = j.value("budget_tokens", 0L);
  r.temperature = j.value("temperature", 0.0);
  r.max_gen_tokens = j.value("max_gen_tokens", 0L);
  r.response = response_from_json(j.at("response"));
  r.created_at = j.value("created_at", std::string());
  r.template_id = j.value("template_id", std::string());
  return r;
}

// --- store --------------------------------------------------------------

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

}  // namespace

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) {}
RunStore::~RunStore() = default;

fs::path RunStore::file_for(const ConditionKey& key) const {
  return dir_ / (sanitize(key.model_id) + "__" + sanitize(key.task_id) + ".jsonl");
}

void RunStore::open() {
  std::lock_guard lock(mutex_);
  fs::create_directories(dir_);
  index_.clear();
  writers_.clear();
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    const std::string content = util::read_file(entry.path().string());
    size_t pos = 0;
    size_t good_end = 0;
    size_t line_no = 0;
    while (pos < content.size()) {
      size_t nl = content.find('\n', pos);
      ++line_no;
      if (nl == std::string::npos) {
        // torn trailing line from a killed writer: drop it
        break;
      }
      const std::string line = content.substr(pos, nl - pos);
      if (!util::trim(line).empty()) {
        try {
          RunRecord rec = RunRecord::from_json(json::parse(line));
          index_.insert(rec.key.to_key_string());
        } catch (const std::exception& e) {
          throw Error(entry.path().string() + ":" + std::to_string(line_no) +
                      ": corrupt record mid-file: " + e.what());
        }
      }
      pos = nl + 1;
      good_end = pos;
    }
    if (good_end < content.size())
      fs::resize_file(entry.path(), good_end);
  }
}

bool RunStore::contains(const std::string& key_string) const {
  std::lock_guard lock(mutex_);
  return index_.count(key_string) > 0;
}

void RunStore::append(const RunRecord& record) {
  std::lock_guard lock(mutex_);
  const std::string key_string = record.key.to_key_string();
  if (index_.count(key_string))
    throw Error("store already holds key " + key_string);
  const fs::path file = file_for(record.key);
  auto& writer = writers_[file.string()];
  if (!writer) {
    writer = std::make_unique<std::ofstream>(file, std::ios::app);
    if (!*writer) throw Error("cannot open store file for append: " + file.string());
  }
  *writer << record.to_json().dump() << "\n";
  writer->flush();
  if (!*writer) throw Error("store append failed: " + file.string());
  index_.insert(key_string);
}

std::vector<RunRecord> RunStore::load_all() const {
  std::lock_guard lock(mutex_);
  std::vector<RunRecord> out;
  if (!fs::exists(dir_)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_))
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    for (const auto& line : util::split_lines(util::read_file(file.string()))) {
      if (util::trim(line).empty()) continue;
      out.push_back(RunRecord::from_json(json::parse(line)));
    }
  }
  return out;
}

size_t RunStore::size() const {
  std::lock_guard lock(mutex_);
  return index_.size();
}

// --- planning ----------------------------------------------------------

std::vector<ConditionKey> plan_matrix(const RunConfig& config) {
  config.validate();
  std::vector<ConditionKey> plan;
  std::set<std::string> diag(config.diagnostics_tiers.begin(),
                             config.diagnostics_tiers.end());
  for (const auto& model : config.models)
    for (const auto& task : config.tasks)
      for (const auto& filler : config.fillers)
        for (const auto& tier : config.tiers)
          for (const auto layout : config.layouts) {
            const bool probe = layout == promptbuild::LayoutKind::middle_twice ||
                               layout == promptbuild::LayoutKind::middle_dup;
            if (probe && !diag.count(tier.tier_label)) continue;
            if (filler == "none" && layout != promptbuild::LayoutKind::end)
              continue;  // the no-filler baseline has no interior position
            for (const auto seed : config.seeds)
              for (const auto& variant : config.gen_variants)
                for (long item = 0;
                     item < static_cast<long>(task.n_per_condition); ++item) {
                  ConditionKey k;
                  k.model_id = model.model_id;
                  k.task_id = task.task_id;
                  k.filler_kind = filler;
                  k.tier_label = tier.tier_label;
                  k.layout = promptbuild::to_string(layout);
                  k.seed = seed;
                  k.gen_variant = variant.name;
                  k.item_index = item;
                  plan.push_back(std::move(k));
                }
          }
  std::sort(plan.begin(), plan.end());
  return plan;
}

promptbuild::TokenBudget resolve_budget(const RunConfig& config,
                                        const std::string& model_id,
                                        const std::string& tier_label) {
  const promptbuild::TokenBudget* tier = nullptr;
  for (const auto& t : config.tiers)
    if (t.tier_label == tier_label) tier = &t;
  if (!tier) throw Error("resolve_budget: unknown tier " + tier_label);
  promptbuild::TokenBudget budget = *tier;
  for (const auto& m : config.models) {
    if (m.model_id != model_id) continue;
    auto it = m.filler_budget_override.find(tier_label);
    if (it != m.filler_budget_override.end()) budget.filler_tokens = it->second;
    return budget;
  }
  throw Error("resolve_budget: unknown model " + model_id);
}

// --- context ----------------------------------------------------------

struct ExperimentContext::SequenceCache {
  std::mutex mutex;
  std::map<std::string, promptbuild::FillerSequence> sequences;
};

ExperimentContext ExperimentContext::build(const RunConfig& config) {
  config.validate();
  ExperimentContext ctx;
  ctx.config_ = &config;
  ctx.cache_ = std::make_shared<SequenceCache>();
  ctx.templates_ = config.template_dir.empty()
                       ? std::shared_ptr<const corpus::TemplateSet>(
                             &corpus::TemplateSet::builtin_default(),
                             [](const corpus::TemplateSet*) {})
                       : std::make_shared<const corpus::TemplateSet>(
                             corpus::TemplateSet::load_dir(config.template_dir));
  ctx.tokenizer_ =
      config.token_oracle_path.empty()
          ? std::shared_ptr<const promptbuild::Tokenizer>(
                std::make_shared<promptbuild::ByteEstimator>())
          : std::shared_ptr<const promptbuild::Tokenizer>(
                std::make_shared<promptbuild::OracleFileTokenizer>(
                    config.token_oracle_path));

  const bool needs_neutral =
      std::count(config.fillers.begin(), config.fillers.end(), "neutral_text") > 0;
  corpus::FillerPool neutral_pool;
  if (needs_neutral)
    neutral_pool = corpus::build_neutral_pool(config.prose_paths, *ctx.templates_);

  for (const auto& task : config.tasks) {
    std::vector<corpus::TaskInstance> test_items =
        task.kind == corpus::TaskKind::math_word
            ? corpus::load_math_dataset(task.test_path, corpus::Split::test)
            : corpus::load_choice_dataset(task.test_path);
    for (const auto& inst : test_items)
      ctx.instances_by_id_[task.task_id][inst.id] = inst;
    for (const auto seed : config.seeds)
      ctx.targets_[{task.task_id, seed}] = corpus::sample_targets(
          test_items, task.n_per_condition, static_cast<uint64_t>(seed));

    std::vector<corpus::TaskInstance> train_items;
    for (const auto& filler : config.fillers) {
      if (filler == "none") continue;
      const auto kind = corpus::filler_kind_from_string(filler);
      if (kind == corpus::FillerKind::neutral_text) {
        ctx.pools_[{task.task_id, filler}] = neutral_pool;
        continue;
      }
      if (train_items.empty()) {
        if (task.train_path.empty())
          throw Error("task " + task.task_id + " needs a train_path for " + filler);
        if (task.kind == corpus::TaskKind::math_word) {
          train_items = corpus::load_math_dataset(task.train_path, corpus::Split::train);
        } else {
          train_items = corpus::load_choice_dataset(task.train_path);
          for (auto& t : train_items) t.source_split = corpus::Split::train;
        }
      }
      ctx.pools_[{task.task_id, filler}] =
          corpus::build_filler_pool(train_items, kind, *ctx.templates_);
    }
  }

  // train/test leakage guard: filler ids never collide with any test id
  for (const auto& [key, pool] : ctx.pools_) {
    const auto& ids = ctx.instances_by_id_.at(key.first);
    for (const auto& item : pool.items)
      if (ids.count(item.id))
        throw Error("filler item " + item.id + " also appears in the " +
                    key.first + " test split");
  }
  return ctx;
}

const corpus::TaskInstance& ExperimentContext::target_for(
    const ConditionKey& key) const {
  auto it = targets_.find({key.task_id, key.seed});
  if (it == targets_.end())
    throw Error("no sampled targets for task " + key.task_id + " seed " +
                std::to_string(key.seed));
  if (key.item_index < 0 ||
      static_cast<size_t>(key.item_index) >= it->second.size())
    throw Error("item_index out of range for " + key.to_key_string());
  return it->second[static_cast<size_t>(key.item_index)];
}

const corpus::TaskInstance* ExperimentContext::find_instance(
    const std::string& task_id, const std::string& instance_id) const {
  auto task_it = instances_by_id_.find(task_id);
  if (task_it == instances_by_id_.end()) return nullptr;
  auto it = task_it->second.find(instance_id);
  return it == task_it->second.end() ? nullptr : &it->second;
}

promptbuild::AssembledPrompt ExperimentContext::build_prompt(
    const ConditionKey& key) const {
  const promptbuild::TokenBudget budget =
      resolve_budget(*config_, key.model_id, key.tier_label);
  const auto layout = promptbuild::layout_from_string(key.layout);
  const corpus::TaskInstance& target = target_for(key);

  promptbuild::FillerSequence sequence;
  if (key.filler_kind != "none") {
    // one filler shuffle per cell; the N items share it. The generation
    // variant is excluded so a max-gen rerun sees byte-identical prompts.
    const std::string cell = key.model_id + "|" + key.task_id + "|" +
                             key.filler_kind + "|" + key.tier_label + "|" +
                             key.layout + "|" + std::to_string(key.seed);
    std::lock_guard lock(cache_->mutex);
    auto it = cache_->sequences.find(cell);
    if (it == cache_->sequences.end()) {
      auto pool_it = pools_.find({key.task_id, key.filler_kind});
      if (pool_it == pools_.end())
        throw Error("no filler pool for (" + key.task_id + ", " +
                    key.filler_kind + ")");
      const uint64_t cell_seed =
          util::derive_seed(static_cast<uint64_t>(key.seed), cell);
      it = cache_->sequences
               .emplace(cell, promptbuild::fill_to_budget(
                                  pool_it->second, budget, cell_seed, *tokenizer_))
               .first;
    }
    sequence = it->second;
  }
  return promptbuild::assemble(target, sequence, layout, budget, *templates_,
                               *tokenizer_);
}

// --- execution ----------------------------------------------------------

ExecutionSummary execute(const ExperimentContext& ctx,
                         const std::vector<ConditionKey>& plan, RunStore& store,
                         modelgate::Gateway& gateway, const RunConfig& config,
                         const ExecuteOptions& options) {
  std::map<std::string, const modelgate::ModelSpec*> specs;
  for (const auto& m : config.models) specs[m.model_id] = &m;
  std::map<std::string, long> variant_tokens;
  for (const auto& v : config.gen_variants) variant_tokens[v.name] = v.max_gen_tokens;

  std::atomic<size_t> cursor{0};
  std::atomic<long> completed{0}, skipped{0}, failed{0}, tickets{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (!stop.load()) {
      const size_t i = cursor.fetch_add(1);
      if (i >= plan.size()) break;
      const ConditionKey& key = plan[i];
      try {
        if (store.contains(key.to_key_string())) {
          ++skipped;
          continue;
        }
        if (options.limit > 0 && tickets.fetch_add(1) >= options.limit) {
          stop.store(true);
          break;
        }
        modelgate::ModelSpec spec = *specs.at(key.model_id);
        spec.max_gen_tokens = variant_tokens.at(key.gen_variant);

        const auto prompt = ctx.build_prompt(key);
        const auto response = gateway.complete(spec, prompt);

        RunRecord record;
        record.key = key;
        record.prompt_hash = util::content_hash(prompt.text);
        record.target_id = prompt.target_id;
        record.filler_manifest = prompt.filler_manifest;
        record.wrap_count = prompt.wrap_count;
        record.budget_tokens = prompt.tier.filler_tokens;
        record.temperature = spec.temperature;
        record.max_gen_tokens = spec.max_gen_tokens;
        record.response = response;
        record.created_at = util::iso8601_utc_now();
        record.template_id = prompt.template_id;
        store.append(record);

        if (response.status == modelgate::ResponseStatus::api_error ||
            response.status == modelgate::ResponseStatus::timeout)
          ++failed;
        else
          ++completed;
        if (options.throttle_ms > 0)
          std::this_thread::sleep_for(std::chrono::milliseconds(options.throttle_ms));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
        break;
      }
    }
  };

  const int workers = std::max(1, options.workers);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  return {completed.load(), skipped.load(), failed.load()};
}

// --- exclusion (declared in exclusion.hpp) -------------------------------

ExclusionReport apply_exclusion(const std::vector<scoring::GradedRecord>& graded,
                                const ExclusionRule& rule) {
  std::map<std::string, std::pair<long, long>> baseline;  // model -> (succ, n)
  std::set<std::string> models;
  for (const auto& g : graded) {
    models.insert(g.key.model_id);
    if (g.key.layout != rule.layout) continue;
    if (g.key.tier_label != rule.tier_label) continue;
    if (g.key.filler_kind != rule.filler_kind) continue;
    if (!rule.task_id.empty() && g.key.task_id != rule.task_id) continue;
    auto& [succ, n] = baseline[g.key.model_id];
    succ += g.correct ? 1 : 0;
    n += 1;
  }
  if (baseline.empty())
    throw Error("apply_exclusion: no records match the baseline cell (" +
                rule.layout + ", " + rule.tier_label + ", " + rule.filler_kind + ")");

  ExclusionReport report;
  report.rule = rule;
  for (const auto& model : models) {
    auto it = baseline.find(model);
    if (it == baseline.end())
      throw Error("apply_exclusion: model " + model + " has no baseline cell");
    ExclusionEntry entry;
    entry.model_id = model;
    entry.baseline_accuracy = static_cast<double>(it->second.first) /
                              static_cast<double>(it->second.second);
    entry.excluded = entry.baseline_accuracy < rule.min_accuracy;
    if (entry.excluded) {
      char buf[128];
      std::snprintf(buf, sizeof(buf),
                    "baseline accuracy %.0f%% below threshold %.0f%%",
                    100.0 * entry.baseline_accuracy, 100.0 * rule.min_accuracy);
      entry.reason = buf;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

std::set<std::string> ExclusionReport::excluded_models() const {
  std::set<std::string> out;
  for (const auto& e : entries)
    if (e.excluded) out.insert(e.model_id);
  return out;
}

}  // namespace poseval::runner
