#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scogen {

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason r);
FinishReason finish_reason_from_string(std::string_view s);

struct GenerationRequest {
    std::optional<std::string> system_text;
    std::string user_text;
    int max_output_tokens = 2048;
    double temperature = 0.7;  // [0, 2]
    std::string model_id;
    bool thinking_mode = false;
};

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

enum class BackendErrorKind { Precondition, Transport, Authentication, RateLimit, Malformed, MissingFixture };

std::string_view to_string(BackendErrorKind k);

class BackendError : public std::runtime_error {
public:
    BackendError(BackendErrorKind kind, const std::string& what, bool retryable = false)
        : std::runtime_error(what), kind_(kind), retryable_(retryable) {}

    BackendErrorKind kind() const { return kind_; }
    bool retryable() const { return retryable_; }

private:
    BackendErrorKind kind_;
    bool retryable_;
};

struct GenerationResult {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    TokenUsage usage;
    std::size_t attempts = 1;
    std::optional<BackendErrorKind> error_kind;  // set when finish_reason == Error
    std::string error;

    bool ok() const { return finish_reason != FinishReason::Error; }
};

/// Throws BackendError{Precondition} for empty user text or temperature
/// outside [0, 2].
void validate_request(const GenerationRequest& req);

/// Key for mock fixtures: SHA-256 of `system_text + '\0' + user_text`,
/// or of `user_text` alone when there is no system text.
std::string prompt_hash(const GenerationRequest& req);

/// Text generation service. Implementations are safe to call from several
/// threads at once.
class Backend {
public:
    virtual ~Backend() = default;
    /// Returns a Stop/Length result or throws BackendError.
    virtual GenerationResult complete(const GenerationRequest& req) = 0;
};

/// Positionally aligned results; at most `parallelism` requests in flight.
/// Failures become results with FinishReason::Error instead of aborting.
std::vector<GenerationResult> complete_batch(Backend& backend, std::span<const GenerationRequest> reqs,
                                             std::size_t parallelism);

/// Fallback reply for prompts without an exact fixture: the first rule whose
/// `contains` string occurs in the user text answers. `{hash}` and `{hash8}`
/// in the response are replaced with the prompt hash (full / first 8 chars).
struct MockRule {
    std::string contains;
    std::string response;
};

/// Offline backend. Exact fixtures are files `<prompt-hash>.txt` in the
/// fixture directory; optional `rules.json` holds [{"contains", "response"}].
class MockBackend : public Backend {
public:
    MockBackend() = default;
    explicit MockBackend(const std::filesystem::path& fixture_dir);

    void add_fixture(std::string hash, std::string response);
    void add_rule(MockRule rule);

    GenerationResult complete(const GenerationRequest& req) override;

private:
    std::map<std::string, std::string> fixtures_;
    std::vector<MockRule> rules_;
};

/// Replays a fixed script of replies in call order, regardless of prompt.
/// A scripted entry with an error kind throws instead of replying.
class ScriptedBackend : public Backend {
public:
    struct Step {
        std::string text;
        std::optional<BackendErrorKind> error;
    };

    explicit ScriptedBackend(std::vector<Step> script) : script_(std::move(script)) {}
    static ScriptedBackend of(std::vector<std::string> replies);

    GenerationResult complete(const GenerationRequest& req) override;

    std::vector<GenerationRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::vector<Step> script_;
    std::size_t next_ = 0;
    std::vector<GenerationRequest> seen_;
};

struct RetryPolicy {
    std::size_t max_attempts = 5;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
    /// Each delay is scaled by a uniform factor in [1 - jitter, 1].
    double jitter = 0.5;

    std::chrono::milliseconds delay_before_retry(std::size_t retry_index, double unit_random) const;
};

/// Chat-completion client: POST {model, messages, temperature, max_tokens}
/// and read choices[0].message.content.
class HttpBackend : public Backend {
public:
    struct Options {
        std::string endpoint;  // http(s)://host[:port]/path
        std::string api_key;   // sent as a bearer token when non-empty
        std::chrono::seconds timeout{120};
        RetryPolicy retry;
    };

    explicit HttpBackend(Options opts);

    GenerationResult complete(const GenerationRequest& req) override;

    static nlohmann::json request_body(const GenerationRequest& req);
    /// Throws BackendError{Malformed} when the body lacks a message content.
    static GenerationResult parse_response(const std::string& body);

private:
    GenerationResult attempt(const GenerationRequest& req) const;

    Options opts_;
    std::string host_;
    std::string path_;
};

enum class BackendMode { Mock, Live };

struct BackendConfig {
    BackendMode mode = BackendMode::Mock;
    std::filesystem::path fixtures;
    std::string endpoint;
    std::string model_id = "mock";
    std::string api_key_env = "SCOGEN_API_KEY";
    int timeout_seconds = 120;
    std::size_t max_retries = 5;
    std::size_t parallelism = 4;
    std::size_t backoff_initial_ms = 1000;
    double temperature = 0.7;
    int max_output_tokens = 2048;
    bool thinking_mode = false;

    GenerationRequest request(std::string user_text) const;
    /// All problems at once; empty when valid.
    std::vector<std::string> validate() const;
};

void to_json(nlohmann::json& j, const BackendConfig& c);
void from_json(const nlohmann::json& j, BackendConfig& c);

/// Throws std::invalid_argument when the config does not validate.
std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

}  // namespace scogen
