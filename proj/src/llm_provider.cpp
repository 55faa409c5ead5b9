#include "kevo/llm_provider.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace kevo {

using nlohmann::json;

std::string to_string(ProviderErrorKind kind) {
    switch (kind) {
        case ProviderErrorKind::Timeout: return "timeout";
        case ProviderErrorKind::AuthFailure: return "auth_failure";
        case ProviderErrorKind::MalformedResponse: return "malformed_response";
        case ProviderErrorKind::Transport: return "transport";
        case ProviderErrorKind::ScriptExhausted: return "script_exhausted";
        case ProviderErrorKind::Aggregate: return "aggregate";
    }
    return "transport";
}

namespace {

void validate_request(const ChatRequest& req) {
    if (req.system_prompt.empty() || req.user_prompt.empty())
        throw std::invalid_argument("ChatRequest prompts must be non-empty");
}

} // namespace

std::vector<ChatResult> ChatProvider::complete_many(const ChatRequest& req, int n) {
    std::vector<ChatResult> results;
    results.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) results.push_back(complete(req));
    return results;
}

nlohmann::json ChatProvider::state_snapshot() const { return nullptr; }
void ChatProvider::restore_state(const nlohmann::json&) {}

bool all_failed(const std::vector<ChatResult>& results) {
    for (const auto& r : results)
        if (r.ok()) return false;
    return !results.empty();
}

ProviderError aggregate_error(const std::vector<ChatResult>& results) {
    std::string message = "all requests failed:";
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok())
            message += " [" + std::to_string(i) + "] " + to_string(results[i].error().kind) + ": " +
                       results[i].error().message + ";";
    }
    return ProviderError{ProviderErrorKind::Aggregate, message};
}

void bounded_parallel_for(int n, int max_in_flight, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (max_in_flight <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    const int workers = std::min(max_in_flight, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

ScriptedProvider::ScriptedProvider(std::map<std::string, std::vector<std::string>> fixtures)
    : fixtures_(std::move(fixtures)) {}

Result<std::unique_ptr<ScriptedProvider>, ProviderError> ScriptedProvider::from_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open())
        return ProviderError{ProviderErrorKind::Transport, "cannot open fixture file: " + path};
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        return ProviderError{ProviderErrorKind::MalformedResponse,
                             "fixture file is not a JSON object: " + path};
    std::map<std::string, std::vector<std::string>> fixtures;
    for (const auto& [role, completions] : j.items()) {
        if (!completions.is_array())
            return ProviderError{ProviderErrorKind::MalformedResponse,
                                 "fixture entry for role '" + role + "' must be an array"};
        fixtures[role] = completions.get<std::vector<std::string>>();
    }
    return std::make_unique<ScriptedProvider>(std::move(fixtures));
}

ChatResult ScriptedProvider::take(const std::string& role, std::size_t index) const {
    auto it = fixtures_.find(role);
    if (it == fixtures_.end() || index >= it->second.size()) {
        return ProviderError{ProviderErrorKind::ScriptExhausted,
                             "script exhausted for role '" + role + "' at call " +
                                 std::to_string(index + 1)};
    }
    return ChatResponse{it->second[index], "scripted", 0.0};
}

ChatResult ScriptedProvider::complete(const ChatRequest& req) {
    validate_request(req);
    std::size_t index;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        index = counters_[req.role_label]++;
    }
    return take(req.role_label, index);
}

std::vector<ChatResult> ScriptedProvider::complete_many(const ChatRequest& req, int n) {
    validate_request(req);
    std::size_t base;
    {
        // Reserve a contiguous counter block so concurrent batches keep
        // index-order determinism.
        std::lock_guard<std::mutex> lock(mutex_);
        base = counters_[req.role_label];
        counters_[req.role_label] += static_cast<std::size_t>(n);
    }
    std::vector<ChatResult> results;
    results.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) results.push_back(take(req.role_label, base + static_cast<std::size_t>(i)));
    return results;
}

nlohmann::json ScriptedProvider::state_snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    json counters = json::object();
    for (const auto& [role, count] : counters_) counters[role] = count;
    return json{{"counters", counters}};
}

void ScriptedProvider::restore_state(const nlohmann::json& state) {
    if (!state.is_object() || !state.contains("counters")) return;
    std::lock_guard<std::mutex> lock(mutex_);
    counters_.clear();
    for (const auto& [role, count] : state.at("counters").items())
        counters_[role] = count.get<std::size_t>();
}

HttpChatProvider::HttpChatProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty() && !config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) config_.api_key = key;
    }
    if (!config_.sleeper) {
        config_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

ChatResult HttpChatProvider::attempt_once(const ChatRequest& req) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.connect_timeout_s, 0);
    client.set_read_timeout(config_.read_timeout_s, 0);

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    const json body{{"model", config_.model},
                    {"messages",
                     json::array({json{{"role", "system"}, {"content", req.system_prompt}},
                                  json{{"role", "user"}, {"content", req.user_prompt}}})},
                    {"temperature", req.temperature},
                    {"max_tokens", req.max_output_tokens}};

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    const double elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();

    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write) {
            return ProviderError{ProviderErrorKind::Timeout,
                                 "request timed out: " + httplib::to_string(err)};
        }
        return ProviderError{ProviderErrorKind::Transport,
                             "transport failure: " + httplib::to_string(err)};
    }
    if (res->status == 401 || res->status == 403) {
        return ProviderError{ProviderErrorKind::AuthFailure,
                             "authentication rejected (HTTP " + std::to_string(res->status) + ")"};
    }
    if (res->status == 429 || res->status >= 500) {
        return ProviderError{ProviderErrorKind::Transport,
                             "upstream unavailable (HTTP " + std::to_string(res->status) + ")"};
    }
    if (res->status != 200) {
        return ProviderError{ProviderErrorKind::MalformedResponse,
                             "unexpected HTTP status " + std::to_string(res->status)};
    }

    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded())
        return ProviderError{ProviderErrorKind::MalformedResponse, "response body is not JSON"};
    try {
        std::string text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        return ChatResponse{std::move(text), name(), elapsed_ms};
    } catch (const std::exception& e) {
        return ProviderError{ProviderErrorKind::MalformedResponse,
                             std::string("missing completion field: ") + e.what()};
    }
}

ChatResult HttpChatProvider::complete(const ChatRequest& req) {
    validate_request(req);
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(config_.total_timeout_ms);
    auto delay = config_.retry.initial_delay;
    ChatResult result = attempt_once(req);
    for (int attempt = 0; attempt < config_.retry.max_retries; ++attempt) {
        if (result.ok()) return result;
        const auto kind = result.error().kind;
        const bool transient =
            kind == ProviderErrorKind::Timeout || kind == ProviderErrorKind::Transport;
        if (!transient) return result;
        if (config_.total_timeout_ms > 0 && std::chrono::steady_clock::now() + delay >= deadline) {
            return ProviderError{ProviderErrorKind::Timeout,
                                 "total timeout exhausted after " + std::to_string(attempt + 1) +
                                     " attempt(s): " + result.error().message};
        }
        config_.sleeper(delay);
        delay = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(delay.count()) * config_.retry.backoff_multiplier));
        result = attempt_once(req);
    }
    return result;
}

std::vector<ChatResult> HttpChatProvider::complete_many(const ChatRequest& req, int n) {
    validate_request(req);
    std::vector<ChatResult> results(static_cast<std::size_t>(n),
                                    ChatResult(ProviderError{ProviderErrorKind::Transport, "unset"}));
    bounded_parallel_for(n, config_.max_in_flight,
                         [&](int i) { results[static_cast<std::size_t>(i)] = complete(req); });
    return results;
}

} // namespace kevo
