#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "poseval/config.hpp"
#include "poseval/modelgate.hpp"

namespace poseval::runner {

inline constexpr int kStoreSchemaVersion = 1;

struct ConditionKey {
  std::string model_id;
  std::string task_id;
  std::string filler_kind;  // "with_solutions" / ... / "none"
  std::string tier_label;
  std::string layout;
  long long seed = 42;
  std::string gen_variant = "maxgen2048";
  long item_index = 0;

  std::string to_key_string() const;  // '|'-joined, unique per run store
  static ConditionKey from_key_string(const std::string& s);

  auto tie() const {
    return std::tie(model_id, task_id, filler_kind, tier_label, layout, seed,
                    gen_variant, item_index);
  }
  bool operator<(const ConditionKey& o) const { return tie() < o.tie(); }
  bool operator==(const ConditionKey& o) const { return tie() == o.tie(); }
};

struct RunRecord {
  int schema_version = kStoreSchemaVersion;
  ConditionKey key;
  std::string prompt_hash;
  std::string target_id;
  std::vector<promptbuild::ManifestEntry> filler_manifest;
  int wrap_count = 0;
  long budget_tokens = 0;  // resolved filler budget (override applied)
  double temperature = 0.0;
  long max_gen_tokens = 0;
  modelgate::ModelResponse response;
  std::string created_at;
  std::string template_id;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

/// Append-only JSONL record store, one file per (model, task). Opening
/// rebuilds the key index and truncates a torn trailing line left by a
/// killed writer; every append is flushed so an interrupted run resumes
/// without duplicates.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir);
  ~RunStore();

  void open();
  bool contains(const std::string& key_string) const;
  void append(const RunRecord& record);
  std::vector<RunRecord> load_all() const;
  size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path file_for(const ConditionKey& key) const;

  std::filesystem::path dir_;
  std::set<std::string> index_;
  std::map<std::string, std::unique_ptr<std::ofstream>> writers_;
  mutable std::mutex mutex_;
};

/// Full condition matrix: the cross product of the config axes with probe
/// layouts (middle_twice / middle_dup) restricted to diagnostics_tiers and
/// the no-filler axis restricted to end position. Ordering is
/// lexicographic by key.
std::vector<ConditionKey> plan_matrix(const RunConfig& config);

/// Tier budget with any per-model override applied.
promptbuild::TokenBudget resolve_budget(const RunConfig& config,
                                        const std::string& model_id,
                                        const std::string& tier_label);

/// Loaded corpus state: datasets, sampled targets, filler pools, template
/// set and tokenizer. Immutable after build; prompt construction is pure
/// given a key, so stored prompt hashes stay reproducible from config +
/// seed.
class ExperimentContext {
 public:
  static ExperimentContext build(const RunConfig& config);

  promptbuild::AssembledPrompt build_prompt(const ConditionKey& key) const;
  const corpus::TaskInstance& target_for(const ConditionKey& key) const;
  const corpus::TaskInstance* find_instance(const std::string& task_id,
                                            const std::string& instance_id) const;
  const corpus::TemplateSet& templates() const { return *templates_; }
  const promptbuild::Tokenizer& tokenizer() const { return *tokenizer_; }

 private:
  const RunConfig* config_ = nullptr;
  std::shared_ptr<const corpus::TemplateSet> templates_;
  std::shared_ptr<const promptbuild::Tokenizer> tokenizer_;
  // (task_id, seed) -> sampled targets
  std::map<std::pair<std::string, long long>, std::vector<corpus::TaskInstance>> targets_;
  // (task_id, filler_kind) -> pool; neutral pools keyed per task as well
  std::map<std::pair<std::string, std::string>, corpus::FillerPool> pools_;
  std::map<std::string, std::map<std::string, corpus::TaskInstance>> instances_by_id_;

  // one filler shuffle per cell, shared by the N items
  struct SequenceCache;
  std::shared_ptr<SequenceCache> cache_;
};

struct ExecuteOptions {
  int workers = 1;
  long throttle_ms = 0;  // pacing between records, per worker
  long limit = 0;        // stop after this many new records (0 = no limit)
};

struct ExecutionSummary {
  long completed = 0;
  long skipped_existing = 0;
  long failed = 0;  // stored records with api_error / timeout status
};

/// Executes every planned key not already in the store; records append as
/// they finish, so a killed run resumes with no duplicates.
ExecutionSummary execute(const ExperimentContext& ctx,
                         const std::vector<ConditionKey>& plan, RunStore& store,
                         modelgate::Gateway& gateway, const RunConfig& config,
                         const ExecuteOptions& options = {});

}  // namespace poseval::runner
