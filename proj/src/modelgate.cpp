#include "poseval/modelgate.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace poseval::modelgate {

using nlohmann::json;

std::string to_string(ReasoningMode m) {
  switch (m) {
    case ReasoningMode::enabled: return "enabled";
    case ReasoningMode::disabled: return "disabled";
    case ReasoningMode::vendor_default: return "vendor_default";
  }
  throw Error("bad ReasoningMode");
}

ReasoningMode reasoning_mode_from_string(const std::string& s) {
  if (s == "enabled") return ReasoningMode::enabled;
  if (s == "disabled") return ReasoningMode::disabled;
  if (s == "vendor_default") return ReasoningMode::vendor_default;
  throw Error("unknown reasoning_mode: " + s);
}

std::string to_string(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::ok: return "ok";
    case ResponseStatus::truncated: return "truncated";
    case ResponseStatus::api_error: return "api_error";
    case ResponseStatus::timeout: return "timeout";
    case ResponseStatus::empty: return "empty";
  }
  throw Error("bad ResponseStatus");
}

ResponseStatus response_status_from_string(const std::string& s) {
  if (s == "ok") return ResponseStatus::ok;
  if (s == "truncated") return ResponseStatus::truncated;
  if (s == "api_error") return ResponseStatus::api_error;
  if (s == "timeout") return ResponseStatus::timeout;
  if (s == "empty") return ResponseStatus::empty;
  throw Error("unknown response status: " + s);
}

void ModelSpec::validate(const std::vector<std::string>& known_tiers) const {
  if (model_id.empty()) throw Error("ModelSpec: empty model_id");
  if (model_id.find('|') != std::string::npos)
    throw Error("ModelSpec: model_id must not contain '|': " + model_id);
  if (max_gen_tokens <= 0) throw Error("ModelSpec: max_gen_tokens must be > 0");
  if (max_concurrency <= 0) throw Error("ModelSpec: max_concurrency must be > 0");
  for (const auto& [tier, tokens] : filler_budget_override) {
    if (tokens <= 0)
      throw Error("ModelSpec " + model_id + ": override for " + tier +
                  " must be > 0");
    if (std::find(known_tiers.begin(), known_tiers.end(), tier) ==
        known_tiers.end())
      throw Error("ModelSpec " + model_id + ": override names unknown tier " + tier);
  }
}

// --- HTTP gateway --------------------------------------------------------

namespace {

struct ParsedUrl {
  bool https = false;
  std::string host_port;  // scheme://host:port for httplib client
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  ParsedUrl out;
  std::string rest;
  if (url.rfind("https://", 0) == 0) {
    out.https = true;
    rest = url.substr(8);
  } else if (url.rfind("http://", 0) == 0) {
    rest = url.substr(7);
  } else {
    throw Error("endpoint_url must be http(s)://...: " + url);
  }
  const size_t slash = rest.find('/');
  const std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  out.host_port = (out.https ? "https://" : "http://") + host;
  return out;
}

/// Counting semaphore bounding in-flight requests for one model.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int permits) : permits_(permits) {}
  void acquire() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return permits_ > 0; });
    --permits_;
  }
  void release() {
    {
      std::lock_guard lock(m_);
      ++permits_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  int permits_;
};

struct PermitGuard {
  ConcurrencyLimiter& limiter;
  explicit PermitGuard(ConcurrencyLimiter& l) : limiter(l) { limiter.acquire(); }
  ~PermitGuard() { limiter.release(); }
};

bool transient_status(int code) {
  return code == 408 || code == 429 || code >= 500;
}

}  // namespace

struct HttpGateway::Impl {
  RetryPolicy retry;
  std::string log_path;
  std::mutex log_mutex;

  std::mutex state_mutex;
  std::map<std::string, std::unique_ptr<ConcurrencyLimiter>> limiters;
  // host -> earliest next send, from Retry-After
  std::map<std::string, std::chrono::steady_clock::time_point> not_before;

  ConcurrencyLimiter& limiter_for(const ModelSpec& spec) {
    std::lock_guard lock(state_mutex);
    auto& slot = limiters[spec.model_id];
    if (!slot) slot = std::make_unique<ConcurrencyLimiter>(spec.max_concurrency);
    return *slot;
  }

  void wait_for_host(const std::string& host) {
    std::chrono::steady_clock::time_point until{};
    {
      std::lock_guard lock(state_mutex);
      auto it = not_before.find(host);
      if (it != not_before.end()) until = it->second;
    }
    const auto now = std::chrono::steady_clock::now();
    if (until > now) std::this_thread::sleep_for(until - now);
  }

  void defer_host(const std::string& host, long ms) {
    std::lock_guard lock(state_mutex);
    auto candidate = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
    auto& slot = not_before[host];
    if (candidate > slot) slot = candidate;
  }

  void log_event(const json& event) {
    if (log_path.empty()) return;
    std::lock_guard lock(log_mutex);
    std::ofstream out(log_path, std::ios::app);
    out << event.dump() << "\n";
  }

  long backoff_ms(int failed_attempts, uint64_t stream_seed) {
    double delay = static_cast<double>(retry.base_delay_ms);
    for (int i = 1; i < failed_attempts; ++i) delay *= retry.factor;
    if (retry.jitter) {
      util::SplitMix64 rng(stream_seed + static_cast<uint64_t>(failed_attempts));
      const double u =
          static_cast<double>(rng.next() >> 11) / 9007199254740992.0;  // [0,1)
      delay *= 0.5 + u;  // [0.5, 1.5)
    }
    return std::min(static_cast<long>(delay), retry.max_delay_ms);
  }
};

HttpGateway::HttpGateway(RetryPolicy retry, std::string log_path)
    : impl_(std::make_unique<Impl>()) {
  impl_->retry = retry;
  impl_->log_path = std::move(log_path);
}

HttpGateway::~HttpGateway() = default;

ModelResponse HttpGateway::complete(const ModelSpec& spec,
                                    const promptbuild::AssembledPrompt& prompt) {
  if (prompt.text.empty()) throw Error("complete: empty prompt");
  const char* key = nullptr;
  if (!spec.api_key_env.empty()) {
    key = std::getenv(spec.api_key_env.c_str());
    if (!key || !*key)
      throw Error("complete: API key env var " + spec.api_key_env + " is not set");
  }
  const ParsedUrl url = parse_url(spec.endpoint_url);

  json body;
  body["model"] = spec.model_id;
  json messages = json::array();
  if (!prompt.system_text.empty())
    messages.push_back({{"role", "system"}, {"content", prompt.system_text}});
  messages.push_back({{"role", "user"}, {"content", prompt.text}});
  body["messages"] = std::move(messages);
  body["temperature"] = spec.temperature;
  body["max_tokens"] = spec.max_gen_tokens;
  if (spec.extra_body.is_object())
    for (auto& [k, v] : spec.extra_body.items()) body[k] = v;
  const std::string payload = body.dump();
  const std::string prompt_hash = util::content_hash(prompt.text);
  const uint64_t jitter_seed = impl_->retry.jitter_seed != 0
                                   ? impl_->retry.jitter_seed
                                   : util::fnv1a64(prompt.text);

  ModelResponse resp;
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](ModelResponse r) {
    r.latency_ms = static_cast<long>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    impl_->log_event({{"ts", util::iso8601_utc_now()},
                      {"model", spec.model_id},
                      {"endpoint", spec.endpoint_url},
                      {"prompt_hash", prompt_hash},
                      {"status", to_string(r.status)},
                      {"attempts", r.attempt_count},
                      {"latency_ms", r.latency_ms},
                      {"error", r.error_detail}});
    return r;
  };

  ConcurrencyLimiter& limiter = impl_->limiter_for(spec);
  bool saw_timeout = false;
  std::string last_error;

  for (int attempt = 1; attempt <= impl_->retry.max_attempts; ++attempt) {
    resp.attempt_count = attempt;
    impl_->wait_for_host(url.host_port);

    httplib::Result result = [&] {
      PermitGuard permit(limiter);
      httplib::Client client(url.host_port);
      client.set_connection_timeout(0, 30'000'000);
      client.set_read_timeout(spec.request_timeout_ms / 1000,
                              (spec.request_timeout_ms % 1000) * 1000);
      httplib::Headers headers;
      if (key) headers.emplace("Authorization", std::string("Bearer ") + key);
      return client.Post(url.path, headers, payload, "application/json");
    }();

    long retry_after_ms = 0;
    if (!result) {
      const auto err = result.error();
      saw_timeout = err == httplib::Error::ConnectionTimeout ||
                    err == httplib::Error::Read || err == httplib::Error::Write;
      last_error = "transport: " + httplib::to_string(err);
    } else if (result->status == 200) {
      try {
        json j = json::parse(result->body);
        const json& choice = j.at("choices").at(0);
        const json& message = choice.at("message");
        if (message.contains("content") && message["content"].is_string())
          resp.text = message["content"].get<std::string>();
        if (message.contains("reasoning_content") &&
            message["reasoning_content"].is_string())
          resp.reasoning_trace = message["reasoning_content"].get<std::string>();
        else if (message.contains("reasoning") && message["reasoning"].is_string())
          resp.reasoning_trace = message["reasoning"].get<std::string>();
        const std::string finish_reason = choice.value("finish_reason", "");
        if (j.contains("usage")) {
          const json& usage = j["usage"];
          if (usage.contains("prompt_tokens"))
            resp.prompt_tokens = usage["prompt_tokens"].get<long>();
          if (usage.contains("completion_tokens"))
            resp.completion_tokens = usage["completion_tokens"].get<long>();
        }
        if (finish_reason == "length")
          resp.status = ResponseStatus::truncated;
        else if (resp.text.empty())
          resp.status = ResponseStatus::empty;
        else
          resp.status = ResponseStatus::ok;
        return finish(resp);
      } catch (const json::exception& e) {
        resp.status = ResponseStatus::api_error;
        resp.error_detail = std::string("unparseable response body: ") + e.what();
        return finish(resp);
      }
    } else if (transient_status(result->status)) {
      last_error = "http " + std::to_string(result->status);
      if (result->has_header("Retry-After")) {
        try {
          retry_after_ms = 1000 * std::stol(result->get_header_value("Retry-After"));
        } catch (...) {
        }
      }
      saw_timeout = false;
    } else {
      // non-transient 4xx: fail immediately, no retry
      resp.status = ResponseStatus::api_error;
      resp.error_detail = "http " + std::to_string(result->status) + ": " +
                          result->body.substr(0, 200);
      return finish(resp);
    }

    if (attempt < impl_->retry.max_attempts) {
      const long wait_ms =
          std::max(retry_after_ms, impl_->backoff_ms(attempt, jitter_seed));
      if (retry_after_ms > 0) impl_->defer_host(url.host_port, retry_after_ms);
      std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
    }
  }

  resp.status = saw_timeout ? ResponseStatus::timeout : ResponseStatus::api_error;
  resp.error_detail = "retries exhausted; last: " + last_error;
  return finish(resp);
}

// --- scripted mock ---------------------------------------------------------

std::string to_string(MockPolicy p) {
  switch (p) {
    case MockPolicy::answer_target_correct: return "answer_target_correct";
    case MockPolicy::answer_last_filler: return "answer_last_filler";
    case MockPolicy::answer_random_filler: return "answer_random_filler";
    case MockPolicy::garbage: return "garbage";
  }
  throw Error("bad MockPolicy");
}

MockPolicy mock_policy_from_string(const std::string& s) {
  if (s == "answer_target_correct") return MockPolicy::answer_target_correct;
  if (s == "answer_last_filler") return MockPolicy::answer_last_filler;
  if (s == "answer_random_filler") return MockPolicy::answer_random_filler;
  if (s == "garbage") return MockPolicy::garbage;
  throw Error("unknown mock policy: " + s);
}

MockScript MockScript::from_json(const json& j) {
  MockScript script;
  script.seed_ = j.value("seed", 0ULL);
  if (!j.contains("rules") || !j["rules"].is_array())
    throw Error("mock script needs a rules array");
  for (const auto& r : j["rules"]) {
    Rule rule;
    rule.layout = r.value("layout", "*");
    rule.tier = r.value("tier", "*");
    rule.filler = r.value("filler", "*");
    rule.policy = mock_policy_from_string(r.at("policy").get<std::string>());
    script.rules_.push_back(std::move(rule));
  }
  return script;
}

MockScript& MockScript::add_rule(std::string layout, std::string tier,
                                 std::string filler, MockPolicy policy) {
  rules_.push_back({std::move(layout), std::move(tier), std::move(filler), policy});
  return *this;
}

MockScript& MockScript::set_seed(uint64_t seed) {
  seed_ = seed;
  return *this;
}

MockPolicy MockScript::lookup(const std::string& layout, const std::string& tier,
                              const std::string& filler) const {
  for (const auto& r : rules_) {
    if ((r.layout == "*" || r.layout == layout) &&
        (r.tier == "*" || r.tier == tier) &&
        (r.filler == "*" || r.filler == filler))
      return r.policy;
  }
  throw Error("mock script has no rule for condition (" + layout + ", " + tier +
              ", " + filler + ")");
}

namespace {

std::string render_answer(const corpus::GoldAnswer& gold,
                          corpus::TaskKind task_kind) {
  if (task_kind == corpus::TaskKind::math_word &&
      gold.kind == corpus::GoldAnswer::Kind::number)
    return "Working through the problem step by step.\n#### " + gold.display();
  return "Considering the options. The answer is (" + gold.display() + ")";
}

constexpr const char* kGarbageText = "I cannot determine the answer.";

}  // namespace

ModelResponse MockGateway::complete(const ModelSpec& spec,
                                    const promptbuild::AssembledPrompt& prompt) {
  if (prompt.text.empty()) throw Error("complete: empty prompt");
  const MockPolicy policy =
      script_.lookup(to_string(prompt.layout), prompt.tier.tier_label,
                     prompt.filler_kind);

  std::optional<corpus::GoldAnswer> answer;
  switch (policy) {
    case MockPolicy::answer_target_correct:
      answer = prompt.target_gold;
      break;
    case MockPolicy::answer_last_filler:
      if (!prompt.filler_manifest.empty())
        answer = prompt.filler_manifest.back().gold;
      break;
    case MockPolicy::answer_random_filler: {
      std::vector<corpus::GoldAnswer> golds;
      for (const auto& e : prompt.filler_manifest)
        if (e.gold) golds.push_back(*e.gold);
      if (!golds.empty()) {
        util::SplitMix64 rng(script_.seed() ^ util::fnv1a64(prompt.text));
        answer = golds[static_cast<size_t>(rng.bounded(golds.size()))];
      }
      break;
    }
    case MockPolicy::garbage:
      break;
  }

  ModelResponse resp;
  resp.text = answer ? render_answer(*answer, prompt.task_kind) : kGarbageText;
  resp.status = ResponseStatus::ok;
  resp.attempt_count = 1;
  resp.latency_ms = 0;
  resp.prompt_tokens = prompt.est_total_tokens;
  resp.completion_tokens = static_cast<long>((resp.text.size() + 3) / 4);
  if (spec.reasoning_mode == ReasoningMode::enabled)
    resp.reasoning_trace = "Reading the task. " + prompt.target_text;
  return resp;
}

// --- routing ---------------------------------------------------------------

RoutingGateway::RoutingGateway(RetryPolicy retry, std::string log_path)
    : http_(retry, std::move(log_path)) {}

ModelResponse RoutingGateway::complete(const ModelSpec& spec,
                                       const promptbuild::AssembledPrompt& prompt) {
  if (!spec.is_mock()) return http_.complete(spec, prompt);
  MockGateway* mock = nullptr;
  {
    std::lock_guard lock(mutex_);
    auto& slot = mocks_[spec.model_id];
    if (!slot) {
      json script_json = spec.mock_script;
      if (script_json.is_null() && spec.endpoint_url.size() > 5) {
        const std::string path = spec.endpoint_url.substr(5);
        script_json = json::parse(util::read_file(path));
      }
      if (!script_json.is_object())
        throw Error("mock model " + spec.model_id +
                    " has no mock_script and no script path in endpoint_url");
      slot = std::make_unique<MockGateway>(MockScript::from_json(script_json));
    }
    mock = slot.get();
  }
  return mock->complete(spec, prompt);
}

}  // namespace poseval::modelgate
