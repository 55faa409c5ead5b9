#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kevo/result.hpp"

namespace kevo {

struct ChatRequest {
    std::string role_label; // agent name, for scripting and telemetry
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.2;
    int max_output_tokens = 8192;
};

struct ChatResponse {
    std::string text;
    std::string provider_name;
    double latency_ms = 0.0;
};

enum class ProviderErrorKind {
    Timeout,
    AuthFailure,
    MalformedResponse,
    Transport,
    ScriptExhausted,
    Aggregate,
};

struct ProviderError {
    ProviderErrorKind kind = ProviderErrorKind::Transport;
    std::string message;
};

std::string to_string(ProviderErrorKind kind);

using ChatResult = Result<ChatResponse, ProviderError>;

/// Uniform chat-completion interface. Implementations must be safe for
/// concurrent calls.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    virtual ChatResult complete(const ChatRequest& req) = 0;

    /// Issues n requests; results are returned in request-index order
    /// regardless of completion order, with per-index error slots on partial
    /// failure. Default implementation calls complete() sequentially.
    virtual std::vector<ChatResult> complete_many(const ChatRequest& req, int n);

    virtual std::string name() const = 0;

    /// Checkpoint support: providers with replayable internal state expose it
    /// here so a resumed run continues the same transcript.
    virtual nlohmann::json state_snapshot() const;
    virtual void restore_state(const nlohmann::json& state);
};

bool all_failed(const std::vector<ChatResult>& results);
ProviderError aggregate_error(const std::vector<ChatResult>& results);

/// Deterministic test/replay backend. Fixtures map a role_label to an ordered
/// list of completion texts, consumed by a per-role call counter.
class ScriptedProvider : public ChatProvider {
public:
    explicit ScriptedProvider(std::map<std::string, std::vector<std::string>> fixtures);

    /// Fixture file: JSON object {role_label: [completion, ...], ...}.
    static Result<std::unique_ptr<ScriptedProvider>, ProviderError> from_file(
        const std::string& path);

    ChatResult complete(const ChatRequest& req) override;
    std::vector<ChatResult> complete_many(const ChatRequest& req, int n) override;
    std::string name() const override { return "scripted"; }

    nlohmann::json state_snapshot() const override;
    void restore_state(const nlohmann::json& state) override;

private:
    ChatResult take(const std::string& role, std::size_t index) const;

    std::map<std::string, std::vector<std::string>> fixtures_;
    mutable std::map<std::string, std::size_t> counters_;
    mutable std::mutex mutex_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_delay{1000};
    double backoff_multiplier = 2.0;
};

struct HttpProviderConfig {
    std::string base_url;                       // e.g. "https://api.example.com"
    std::string path = "/v1/chat/completions";  // chat-completions style endpoint
    std::string model;
    std::string api_key;                        // resolved from env when empty
    std::string api_key_env = "KP_PROVIDER_KEY";
    int connect_timeout_s = 10;
    int read_timeout_s = 120;
    int total_timeout_ms = 0; // per-complete() deadline across retries; 0 = unlimited
    int max_in_flight = 4;
    RetryPolicy retry;
    /// Injectable for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleeper;
};

/// Production backend speaking chat-completions JSON over HTTP(S). Transient
/// failures (transport, timeout, 429/5xx) are retried with exponential
/// backoff; auth and malformed-body failures are not.
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(HttpProviderConfig config);

    ChatResult complete(const ChatRequest& req) override;
    std::vector<ChatResult> complete_many(const ChatRequest& req, int n) override;
    std::string name() const override { return "http:" + config_.model; }

private:
    ChatResult attempt_once(const ChatRequest& req);

    HttpProviderConfig config_;
};

/// Runs fn(0..n-1) with at most max_in_flight tasks at a time; results land
/// at their index, so output order never depends on scheduling.
void bounded_parallel_for(int n, int max_in_flight, const std::function<void(int)>& fn);

} // namespace kevo
