#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "pedcot/errors.hpp"

namespace pedcot {

// ── Configuration ───────────────────────────────────────────────────

enum class Mode { Live, Replay, Mock };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::Live: return "live";
        case Mode::Replay: return "replay";
        case Mode::Mock: return "mock";
    }
    return "";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "live") return Mode::Live;
    if (s == "replay") return Mode::Replay;
    if (s == "mock") return Mode::Mock;
    throw InvalidInput("unknown mode: " + s);
}

struct ModelConfig {
    std::string provider = "openai";
    std::string model_name = "gpt-4-1106-preview";
    double temperature = 0.0; // evaluation runs keep this at 0
    int max_output_tokens = 1024;
    std::string base_url = "https://api.openai.com";
    std::string api_key_ref = "LLM_API_KEY"; // env var holding the credential
    double timeout_seconds = 120.0;
    int max_retries = 2;
    int requests_per_minute = 0; // 0 = unlimited
};

// Non-fatal configuration warnings (e.g. a non-zero temperature).
inline std::vector<std::string> validate_model_config(const ModelConfig& cfg) {
    std::vector<std::string> warnings;
    if (cfg.temperature != 0.0) {
        warnings.push_back("temperature is " + std::to_string(cfg.temperature) +
                           "; evaluation runs expect 0 for reproducibility");
    }
    if (cfg.model_name.empty()) throw InvalidInput("model_name is empty");
    if (cfg.max_output_tokens <= 0) throw InvalidInput("max_output_tokens must be positive");
    if (cfg.max_retries < 0) throw InvalidInput("max_retries must be non-negative");
    return warnings;
}

// Identifies a request for mock-fixture lookup: trace id, 1-based step
// index, and stage number (1, 2, or 1 for single-request strategies).
struct RequestTag {
    std::string trace_id;
    int step_index = 0;
    int stage = 1;

    std::string key() const {
        return trace_id + "/" + std::to_string(step_index) + "/" + std::to_string(stage);
    }
};

struct CompletionRequest {
    std::string prompt;
    ModelConfig config;
    std::optional<RequestTag> tag;
};

// ── Cache ───────────────────────────────────────────────────────────

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct CacheEntry {
    std::string key; // content hash of (model_name, temperature, prompt)
    std::string model_name;
    double temperature = 0.0;
    std::string prompt;
    std::string response;
    std::string created_at; // ISO-8601 UTC
    std::optional<TokenUsage> token_usage;
};

namespace detail {

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace detail

// Key is a pure function of request content: any byte change in the prompt,
// model name, or temperature yields a different key.
inline std::string cache_key(const CompletionRequest& req) {
    nlohmann::json j = {{"model", req.config.model_name},
                        {"temperature", req.config.temperature},
                        {"prompt", req.prompt}};
    return detail::sha256_hex(j.dump());
}

// Append-only directory of JSON files named by key hash plus an index file.
// Writers stage to a temp file and publish with an atomic rename, so
// concurrent readers never see partial entries.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_ / "entries");
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::optional<CacheEntry> lookup(const std::string& key) const {
        const std::filesystem::path p = entry_path(key);
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error("corrupt cache entry " + p.string() + ": " + e.what());
        }
        CacheEntry e;
        e.key = j.value("key", key);
        e.model_name = j.value("model", "");
        e.temperature = j.value("temperature", 0.0);
        e.prompt = j.value("prompt", "");
        e.response = j.at("response").get<std::string>();
        e.created_at = j.value("created_at", "");
        if (j.contains("token_usage")) {
            e.token_usage = TokenUsage{j["token_usage"].value("prompt_tokens", std::int64_t{0}),
                                       j["token_usage"].value("completion_tokens", std::int64_t{0})};
        }
        return e;
    }

    void put(const CacheEntry& e) {
        nlohmann::json j = {{"key", e.key},
                            {"model", e.model_name},
                            {"temperature", e.temperature},
                            {"prompt", e.prompt},
                            {"response", e.response},
                            {"created_at", e.created_at}};
        if (e.token_usage) {
            j["token_usage"] = {{"prompt_tokens", e.token_usage->prompt_tokens},
                                {"completion_tokens", e.token_usage->completion_tokens}};
        }
        const std::filesystem::path final_path = entry_path(e.key);
        std::ostringstream tid;
        tid << std::this_thread::get_id();
        const std::filesystem::path tmp = final_path.string() + ".tmp." + tid.str();
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << j.dump(2) << '\n';
        }
        std::filesystem::rename(tmp, final_path);

        std::lock_guard<std::mutex> lock(index_mutex_);
        std::ofstream index(dir_ / "index.jsonl", std::ios::app);
        index << nlohmann::json{{"key", e.key},
                                {"model", e.model_name},
                                {"created_at", e.created_at}}
                     .dump()
              << '\n';
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& p : std::filesystem::directory_iterator(dir_ / "entries")) {
            if (p.path().extension() == ".json") ++n;
        }
        return n;
    }

private:
    std::filesystem::path entry_path(const std::string& key) const {
        return dir_ / "entries" / (key + ".json");
    }

    std::filesystem::path dir_;
    mutable std::mutex index_mutex_;
};

// ── Rate limiting ───────────────────────────────────────────────────

// Token bucket shared by all workers; capacity and refill rate derive from
// a requests-per-minute budget.
class TokenBucket {
public:
    using Clock = std::chrono::steady_clock;

    explicit TokenBucket(int requests_per_minute,
                         std::function<void(std::chrono::milliseconds)> sleeper = nullptr)
        : rpm_(requests_per_minute),
          tokens_(static_cast<double>(requests_per_minute)),
          last_(Clock::now()),
          sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::milliseconds d) {
              std::this_thread::sleep_for(d);
          }) {}

    bool unlimited() const { return rpm_ <= 0; }

    void acquire() {
        if (unlimited()) return;
        while (true) {
            std::chrono::milliseconds wait{0};
            {
                std::lock_guard<std::mutex> lock(mutex_);
                refill();
                if (tokens_ >= 1.0) {
                    tokens_ -= 1.0;
                    return;
                }
                const double deficit = 1.0 - tokens_;
                wait = std::chrono::milliseconds(
                    static_cast<std::int64_t>(deficit * 60000.0 / rpm_) + 1);
            }
            sleeper_(wait);
        }
    }

private:
    void refill() {
        const auto now = Clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(static_cast<double>(rpm_), tokens_ + elapsed * rpm_ / 60.0);
    }

    int rpm_;
    double tokens_;
    Clock::time_point last_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
    std::mutex mutex_;
};

// ── Backends ────────────────────────────────────────────────────────

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string error; // transport-level failure when status == 0
};

// Minimal transport seam so retry behavior is testable without sockets.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& base_url, const std::string& path,
                              const std::vector<std::pair<std::string, std::string>>& headers,
                              const std::string& body, double timeout_seconds) = 0;
};

struct BackendResult {
    std::string text;
    std::optional<TokenUsage> usage;
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual BackendResult complete(const CompletionRequest& req) = 0;
    // True only for backends that may touch the network.
    virtual bool network_enabled() const { return false; }
};

// Scripted fixture backend. Fixture values are either a single response or
// a list consumed call by call (the last entry repeats), keyed by
// "trace_id/step_index/stage".
class MockBackend : public CompletionBackend {
public:
    using FixtureMap = std::map<std::string, std::vector<std::string>>;

    explicit MockBackend(FixtureMap fixtures) : fixtures_(std::move(fixtures)) {}

    static FixtureMap fixtures_from_json(const nlohmann::json& j) {
        FixtureMap m;
        for (const auto& [key, value] : j.items()) {
            if (value.is_string()) {
                m[key] = {value.get<std::string>()};
            } else if (value.is_array()) {
                std::vector<std::string> seq;
                for (const auto& v : value) seq.push_back(v.get<std::string>());
                if (seq.empty()) throw InvalidInput("fixture " + key + ": empty response list");
                m[key] = std::move(seq);
            } else {
                throw InvalidInput("fixture " + key + ": value must be string or string array");
            }
        }
        return m;
    }

    static FixtureMap fixtures_from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InvalidInput("fixture file not found: " + path.string());
        nlohmann::json j;
        in >> j;
        return fixtures_from_json(j);
    }

    BackendResult complete(const CompletionRequest& req) override {
        if (!req.tag) {
            throw FixtureMiss("(untagged request; mock lookups need trace/step/stage)");
        }
        const std::string key = req.tag->key();
        std::lock_guard<std::mutex> lock(mutex_);
        const auto it = fixtures_.find(key);
        if (it == fixtures_.end()) throw FixtureMiss(key);
        const std::size_t call = calls_[key]++;
        const auto& seq = it->second;
        return {seq[std::min(call, seq.size() - 1)], std::nullopt};
    }

private:
    FixtureMap fixtures_;
    std::map<std::string, std::size_t> calls_;
    std::mutex mutex_;
};

// Serves strictly from a recorded cache; never constructs a transport.
class ReplayBackend : public CompletionBackend {
public:
    explicit ReplayBackend(std::shared_ptr<ResponseCache> cache) : cache_(std::move(cache)) {}

    BackendResult complete(const CompletionRequest& req) override {
        const std::string key = cache_key(req);
        if (auto entry = cache_->lookup(key)) return {entry->response, entry->token_usage};
        throw ReplayMiss(key);
    }

private:
    std::shared_ptr<ResponseCache> cache_;
};

// OpenAI-compatible chat completion over HTTPS with capped exponential
// backoff. A single user-role message carries the whole prompt.
class LiveBackend : public CompletionBackend {
public:
    LiveBackend(std::shared_ptr<HttpTransport> transport,
                std::function<void(std::chrono::milliseconds)> sleeper = nullptr)
        : transport_(std::move(transport)),
          sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::milliseconds d) {
              std::this_thread::sleep_for(d);
          }) {}

    bool network_enabled() const override { return true; }

    BackendResult complete(const CompletionRequest& req) override {
        const char* key = std::getenv(req.config.api_key_ref.c_str());
        if (!key || !*key) {
            throw ProviderError("credential not found in environment variable " +
                                req.config.api_key_ref);
        }
        const nlohmann::json body = {
            {"model", req.config.model_name},
            {"temperature", req.config.temperature},
            {"max_tokens", req.config.max_output_tokens},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})}};
        const std::vector<std::pair<std::string, std::string>> headers = {
            {"Authorization", std::string("Bearer ") + key},
            {"Content-Type", "application/json"}};

        std::string last_error;
        for (int attempt = 0; attempt <= req.config.max_retries; ++attempt) {
            if (attempt > 0) {
                // 250ms, 500ms, 1s, ... capped at 8s
                const auto delay = std::min<std::int64_t>(250LL << (attempt - 1), 8000);
                sleeper_(std::chrono::milliseconds(delay));
            }
            const HttpResponse resp =
                transport_->post(req.config.base_url, "/v1/chat/completions", headers,
                                 body.dump(), req.config.timeout_seconds);
            if (resp.status == 200) return parse_response(resp.body);
            if (resp.status == 0) {
                last_error = "transport failure: " + resp.error;
            } else {
                last_error = "HTTP " + std::to_string(resp.status) + ": " + resp.body;
                const bool retryable = resp.status == 408 || resp.status == 429 ||
                                       resp.status >= 500;
                if (!retryable) break;
            }
        }
        throw ProviderError(last_error);
    }

private:
    static BackendResult parse_response(const std::string& body) {
        try {
            const nlohmann::json j = nlohmann::json::parse(body);
            BackendResult result;
            result.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                result.usage = TokenUsage{j["usage"].value("prompt_tokens", std::int64_t{0}),
                                          j["usage"].value("completion_tokens", std::int64_t{0})};
            }
            return result;
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("malformed completion response: ") + e.what());
        }
    }

    std::shared_ptr<HttpTransport> transport_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
};

// ── Client ──────────────────────────────────────────────────────────

// Provider-agnostic completion client. Shareable across worker threads:
// the request counter is atomic, cache writes are serialized, and backends
// guard their own state.
class Client {
public:
    Client(Mode mode, std::shared_ptr<CompletionBackend> backend,
           std::shared_ptr<ResponseCache> cache = nullptr,
           std::shared_ptr<TokenBucket> limiter = nullptr)
        : mode_(mode), backend_(std::move(backend)), cache_(std::move(cache)),
          limiter_(std::move(limiter)) {}

    static Client live(const ModelConfig& cfg, std::shared_ptr<HttpTransport> transport,
                       std::shared_ptr<ResponseCache> cache) {
        for (const std::string& w : validate_model_config(cfg)) {
            std::cerr << "warning: " << w << '\n';
        }
        auto limiter = std::make_shared<TokenBucket>(cfg.requests_per_minute);
        return Client(Mode::Live, std::make_shared<LiveBackend>(std::move(transport)),
                      std::move(cache), std::move(limiter));
    }

    static Client replay(std::shared_ptr<ResponseCache> cache) {
        return Client(Mode::Replay, std::make_shared<ReplayBackend>(cache));
    }

    // Mock client; pass a cache to also record responses for later replay.
    static Client mock(MockBackend::FixtureMap fixtures,
                       std::shared_ptr<ResponseCache> cache = nullptr) {
        return Client(Mode::Mock, std::make_shared<MockBackend>(std::move(fixtures)),
                      std::move(cache));
    }

    Mode mode() const { return mode_; }
    bool network_enabled() const { return backend_->network_enabled(); }

    // Total completions issued through this client, monotonically increasing.
    std::uint64_t request_count() const { return requests_.load(std::memory_order_relaxed); }

    std::string complete(const CompletionRequest& req) {
        if (req.prompt.empty()) throw InvalidInput("complete: empty prompt");
        if (limiter_) limiter_->acquire();
        requests_.fetch_add(1, std::memory_order_relaxed);
        BackendResult result = backend_->complete(req);
        if (cache_ && mode_ != Mode::Replay) {
            CacheEntry e;
            e.key = cache_key(req);
            e.model_name = req.config.model_name;
            e.temperature = req.config.temperature;
            e.prompt = req.prompt;
            e.response = result.text;
            e.created_at = detail::utc_timestamp();
            e.token_usage = result.usage;
            cache_->put(e);
        }
        return std::move(result.text);
    }

private:
    Mode mode_;
    std::shared_ptr<CompletionBackend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    std::shared_ptr<TokenBucket> limiter_;
    std::atomic<std::uint64_t> requests_{0};
};

} // namespace pedcot
