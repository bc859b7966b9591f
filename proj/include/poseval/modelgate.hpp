#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseval/promptbuild.hpp"

namespace poseval::modelgate {

enum class ReasoningMode { enabled, disabled, vendor_default };
std::string to_string(ReasoningMode m);
ReasoningMode reasoning_mode_from_string(const std::string& s);

struct ModelSpec {
  std::string model_id;
  std::string endpoint_url;  // "mock:" selects the scripted gateway
  std::string api_key_env;
  ReasoningMode reasoning_mode = ReasoningMode::vendor_default;
  long max_gen_tokens = 2048;
  double temperature = 0.0;
  std::map<std::string, long> filler_budget_override;  // tier label -> tokens
  int max_concurrency = 4;
  long request_timeout_ms = 120000;
  nlohmann::json extra_body;  // vendor-specific request knobs, merged as-is
  nlohmann::json mock_script; // inline script when endpoint_url is "mock:"

  bool is_mock() const { return endpoint_url.rfind("mock:", 0) == 0; }
  void validate(const std::vector<std::string>& known_tiers) const;
};

enum class ResponseStatus { ok, truncated, api_error, timeout, empty };
std::string to_string(ResponseStatus s);
ResponseStatus response_status_from_string(const std::string& s);

struct ModelResponse {
  std::string text;
  std::optional<std::string> reasoning_trace;
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
  ResponseStatus status = ResponseStatus::api_error;
  long latency_ms = 0;
  int attempt_count = 1;
  std::string error_detail;  // diagnostic only, empty on success
};

class Gateway {
 public:
  virtual ~Gateway() = default;
  /// One chat turn carrying the prompt as the user message. Never mutates
  /// the prompt text.
  virtual ModelResponse complete(const ModelSpec& spec,
                                 const promptbuild::AssembledPrompt& prompt) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  long base_delay_ms = 1000;
  double factor = 2.0;
  long max_delay_ms = 60000;
  bool jitter = true;
  uint64_t jitter_seed = 0;  // 0: seed from the prompt hash
};

/// JSON-over-HTTP chat-completions client with exponential backoff on
/// transient failures (429/5xx/408/transport errors), immediate failure
/// on other 4xx, and honor for Retry-After. Safe for concurrent use;
/// in-flight requests per model are bounded by ModelSpec::max_concurrency.
class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(RetryPolicy retry = {}, std::string log_path = {});
  ~HttpGateway() override;
  ModelResponse complete(const ModelSpec& spec,
                         const promptbuild::AssembledPrompt& prompt) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// --- scripted mock --------------------------------------------------------

enum class MockPolicy {
  answer_target_correct,
  answer_last_filler,
  answer_random_filler,
  garbage
};
std::string to_string(MockPolicy p);
MockPolicy mock_policy_from_string(const std::string& s);

/// Maps condition keys (layout, tier, filler kind; "*" wildcards allowed)
/// to response policies. A prompt that matches no rule is an error.
class MockScript {
 public:
  struct Rule {
    std::string layout = "*";
    std::string tier = "*";
    std::string filler = "*";
    MockPolicy policy = MockPolicy::garbage;
  };

  MockScript() = default;
  static MockScript from_json(const nlohmann::json& j);

  MockScript& add_rule(std::string layout, std::string tier, std::string filler,
                       MockPolicy policy);
  MockScript& set_seed(uint64_t seed);

  MockPolicy lookup(const std::string& layout, const std::string& tier,
                    const std::string& filler) const;
  uint64_t seed() const { return seed_; }

 private:
  std::vector<Rule> rules_;
  uint64_t seed_ = 0;
};

/// Deterministic scripted model: the same (script, prompt, seed) always
/// produces the same response. answer_last_filler emits the gold answer of
/// the final filler item in the prompt's manifest.
class MockGateway : public Gateway {
 public:
  explicit MockGateway(MockScript script) : script_(std::move(script)) {}
  ModelResponse complete(const ModelSpec& spec,
                         const promptbuild::AssembledPrompt& prompt) override;

 private:
  MockScript script_;
};

/// Routes each ModelSpec to the scripted mock or the HTTP client.
class RoutingGateway : public Gateway {
 public:
  explicit RoutingGateway(RetryPolicy retry = {}, std::string log_path = {});
  ModelResponse complete(const ModelSpec& spec,
                         const promptbuild::AssembledPrompt& prompt) override;

 private:
  HttpGateway http_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<MockGateway>> mocks_;
};

}  // namespace poseval::modelgate
