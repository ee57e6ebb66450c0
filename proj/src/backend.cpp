#include "scogen/backend.hpp"

#include "scogen/hashing.hpp"
#include "scogen/jsonl.hpp"
#include "scogen/log.hpp"
#include "scogen/parallel.hpp"
#include "scogen/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace scogen {

std::string_view to_string(FinishReason r) {
    switch (r) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_string(std::string_view s) {
    if (s == "stop") return FinishReason::Stop;
    if (s == "length") return FinishReason::Length;
    return FinishReason::Error;
}

std::string_view to_string(BackendErrorKind k) {
    switch (k) {
        case BackendErrorKind::Precondition: return "precondition";
        case BackendErrorKind::Transport: return "transport";
        case BackendErrorKind::Authentication: return "authentication";
        case BackendErrorKind::RateLimit: return "rate-limit";
        case BackendErrorKind::Malformed: return "malformed-response";
        case BackendErrorKind::MissingFixture: return "missing-fixture";
    }
    return "unknown";
}

void validate_request(const GenerationRequest& req) {
    if (req.user_text.empty()) throw BackendError(BackendErrorKind::Precondition, "user_text must be non-empty");
    if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
        throw BackendError(BackendErrorKind::Precondition, "temperature must lie in [0, 2]");
    }
    if (req.max_output_tokens < 1) throw BackendError(BackendErrorKind::Precondition, "max_output_tokens must be >= 1");
}

std::string prompt_hash(const GenerationRequest& req) {
    if (!req.system_text) return sha256_hex(req.user_text);
    std::string joined = *req.system_text;
    joined.push_back('\0');
    joined += req.user_text;
    return sha256_hex(joined);
}

std::vector<GenerationResult> complete_batch(Backend& backend, std::span<const GenerationRequest> reqs,
                                             std::size_t parallelism) {
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    std::vector<GenerationResult> results(reqs.size());
    parallel_for(reqs.size(), parallelism, [&](std::size_t i) {
        try {
            results[i] = backend.complete(reqs[i]);
        } catch (const BackendError& e) {
            results[i].finish_reason = FinishReason::Error;
            results[i].error_kind = e.kind();
            results[i].error = e.what();
        } catch (const std::exception& e) {
            results[i].finish_reason = FinishReason::Error;
            results[i].error_kind = BackendErrorKind::Transport;
            results[i].error = e.what();
        }
    });
    return results;
}

namespace {

std::size_t approx_tokens(std::string_view s) { return text::tokenize(s).size(); }

GenerationResult canned(const GenerationRequest& req, std::string text) {
    GenerationResult r;
    r.usage = {approx_tokens(req.user_text), approx_tokens(text)};
    r.text = std::move(text);
    r.finish_reason = r.text.empty() ? FinishReason::Length : FinishReason::Stop;
    return r;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

}  // namespace

MockBackend::MockBackend(const std::filesystem::path& fixture_dir) {
    if (!std::filesystem::is_directory(fixture_dir)) {
        throw std::invalid_argument("mock fixture directory not found: " + fixture_dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(fixture_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            fixtures_[entry.path().stem().string()] = jsonl::read_text(entry.path());
        }
    }
    const auto rules_path = fixture_dir / "rules.json";
    if (std::filesystem::exists(rules_path)) {
        for (const auto& r : nlohmann::json::parse(jsonl::read_text(rules_path))) {
            rules_.push_back({r.at("contains").get<std::string>(), r.at("response").get<std::string>()});
        }
    }
}

void MockBackend::add_fixture(std::string hash, std::string response) { fixtures_[std::move(hash)] = std::move(response); }

void MockBackend::add_rule(MockRule rule) { rules_.push_back(std::move(rule)); }

GenerationResult MockBackend::complete(const GenerationRequest& req) {
    validate_request(req);
    const std::string hash = prompt_hash(req);
    if (auto it = fixtures_.find(hash); it != fixtures_.end()) return canned(req, it->second);
    for (const auto& rule : rules_) {
        if (req.user_text.find(rule.contains) != std::string::npos) {
            std::string text = rule.response;
            replace_all(text, "{hash}", hash);
            replace_all(text, "{hash8}", std::string_view(hash).substr(0, 8));
            return canned(req, std::move(text));
        }
    }
    throw BackendError(BackendErrorKind::MissingFixture, "no mock fixture for prompt " + hash);
}

ScriptedBackend ScriptedBackend::of(std::vector<std::string> replies) {
    std::vector<Step> steps;
    for (auto& r : replies) steps.push_back({std::move(r), std::nullopt});
    return ScriptedBackend(std::move(steps));
}

GenerationResult ScriptedBackend::complete(const GenerationRequest& req) {
    validate_request(req);
    Step step;
    {
        std::lock_guard lock(mu_);
        seen_.push_back(req);
        if (next_ >= script_.size()) {
            throw BackendError(BackendErrorKind::MissingFixture, "scripted backend exhausted");
        }
        step = script_[next_++];
    }
    if (step.error) throw BackendError(*step.error, "scripted failure", false);
    return canned(req, std::move(step.text));
}

std::vector<GenerationRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mu_);
    return seen_;
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(std::size_t retry_index, double unit_random) const {
    const double base = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, retry_index);
    const double scale = 1.0 - jitter * unit_random;
    return std::chrono::milliseconds(static_cast<long long>(std::llround(base * scale)));
}

HttpBackend::HttpBackend(Options opts) : opts_(std::move(opts)) {
    const auto scheme_end = opts_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must include a scheme: " + opts_.endpoint);
    const auto path_start = opts_.endpoint.find('/', scheme_end + 3);
    host_ = opts_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/v1/chat/completions" : opts_.endpoint.substr(path_start);
}

nlohmann::json HttpBackend::request_body(const GenerationRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    if (req.system_text) messages.push_back({{"role", "system"}, {"content", *req.system_text}});
    messages.push_back({{"role", "user"}, {"content", req.user_text}});
    return {{"model", req.model_id},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_output_tokens},
            {"chat_template_kwargs", {{"enable_thinking", req.thinking_mode}}}};
}

GenerationResult HttpBackend::parse_response(const std::string& body) {
    GenerationResult r;
    try {
        const auto j = nlohmann::json::parse(body);
        const auto& choice = j.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        if (!content.is_string()) throw BackendError(BackendErrorKind::Malformed, "message content is not a string");
        r.text = content.get<std::string>();
        const auto reason = choice.value("finish_reason", std::string("stop"));
        r.finish_reason = reason == "length" ? FinishReason::Length : FinishReason::Stop;
        if (r.text.empty()) r.finish_reason = FinishReason::Length;
        if (j.contains("usage") && j["usage"].is_object()) {
            r.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
            r.usage.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendErrorKind::Malformed, std::string("malformed response: ") + e.what());
    }
    return r;
}

GenerationResult HttpBackend::attempt(const GenerationRequest& req) const {
    httplib::Client client(host_);
    client.set_connection_timeout(opts_.timeout);
    client.set_read_timeout(opts_.timeout);
    client.set_write_timeout(opts_.timeout);
    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);
    auto res = client.Post(path_, headers, jsonl::dump(request_body(req)), "application/json");
    if (!res) {
        throw BackendError(BackendErrorKind::Transport, "request failed: " + httplib::to_string(res.error()), true);
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
        throw BackendError(BackendErrorKind::Authentication, "HTTP " + std::to_string(status));
    }
    if (status == 429) throw BackendError(BackendErrorKind::RateLimit, "HTTP 429", true);
    if (status == 408 || status >= 500) {
        throw BackendError(BackendErrorKind::Transport, "HTTP " + std::to_string(status), true);
    }
    if (status < 200 || status >= 300) {
        throw BackendError(BackendErrorKind::Transport, "HTTP " + std::to_string(status));
    }
    return parse_response(res->body);
}

GenerationResult HttpBackend::complete(const GenerationRequest& req) {
    validate_request(req);
    thread_local Rng jitter_rng(derive_seed(std::hash<std::thread::id>{}(std::this_thread::get_id()), "jitter", 0));
    const std::size_t max_attempts = std::max<std::size_t>(1, opts_.retry.max_attempts);
    for (std::size_t attempt_no = 1;; ++attempt_no) {
        try {
            auto result = attempt(req);
            result.attempts = attempt_no;
            if (attempt_no > 1) log::info("request succeeded after ", attempt_no - 1, " retries");
            return result;
        } catch (const BackendError& e) {
            if (!e.retryable() || attempt_no >= max_attempts) {
                log::warn("request failed after ", attempt_no, " attempt(s): ", e.what());
                throw;
            }
            const auto delay = opts_.retry.delay_before_retry(attempt_no - 1, jitter_rng.uniform01());
            log::info("attempt ", attempt_no, " failed (", e.what(), "), retrying in ", delay.count(), " ms");
            std::this_thread::sleep_for(delay);
        }
    }
}

GenerationRequest BackendConfig::request(std::string user_text) const {
    GenerationRequest req;
    req.user_text = std::move(user_text);
    req.max_output_tokens = max_output_tokens;
    req.temperature = temperature;
    req.model_id = model_id;
    req.thinking_mode = thinking_mode;
    return req;
}

std::vector<std::string> BackendConfig::validate() const {
    std::vector<std::string> errors;
    if (!(temperature >= 0.0 && temperature <= 2.0)) errors.push_back("backend.temperature must lie in [0, 2]");
    if (parallelism < 1) errors.push_back("backend.parallelism must be >= 1");
    if (max_output_tokens < 1) errors.push_back("backend.max_output_tokens must be >= 1");
    if (mode == BackendMode::Mock) {
        if (fixtures.empty()) errors.push_back("backend.fixtures is required in mock mode");
    } else {
        if (endpoint.empty()) errors.push_back("backend.endpoint is required in live mode");
        if (max_retries < 1) errors.push_back("backend.max_retries must be >= 1");
        if (timeout_seconds < 1) errors.push_back("backend.timeout_seconds must be >= 1");
        const char* key = api_key_env.empty() ? nullptr : std::getenv(api_key_env.c_str());
        if (api_key_env.empty() || key == nullptr || *key == '\0') {
            errors.push_back("backend credential missing: environment variable " +
                             (api_key_env.empty() ? std::string("<unset api_key_env>") : api_key_env) + " is not set");
        }
    }
    return errors;
}

void to_json(nlohmann::json& j, const BackendConfig& c) {
    j = {{"mode", c.mode == BackendMode::Mock ? "mock" : "live"},
         {"fixtures", c.fixtures.string()},
         {"endpoint", c.endpoint},
         {"model_id", c.model_id},
         {"api_key_env", c.api_key_env},
         {"timeout_seconds", c.timeout_seconds},
         {"max_retries", c.max_retries},
         {"parallelism", c.parallelism},
         {"backoff_initial_ms", c.backoff_initial_ms},
         {"temperature", c.temperature},
         {"max_output_tokens", c.max_output_tokens},
         {"thinking_mode", c.thinking_mode}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
    c = BackendConfig{};
    const auto mode = j.value("mode", std::string("mock"));
    if (mode == "mock") {
        c.mode = BackendMode::Mock;
    } else if (mode == "live") {
        c.mode = BackendMode::Live;
    } else {
        throw std::invalid_argument("backend.mode must be \"mock\" or \"live\", got \"" + mode + "\"");
    }
    c.fixtures = j.value("fixtures", std::string());
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model_id = j.value("model_id", c.model_id);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    c.temperature = j.value("temperature", c.temperature);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.thinking_mode = j.value("thinking_mode", c.thinking_mode);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
    if (auto errors = cfg.validate(); !errors.empty()) {
        std::string msg = "invalid backend config:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::invalid_argument(msg);
    }
    if (cfg.mode == BackendMode::Mock) return std::make_unique<MockBackend>(cfg.fixtures);
    HttpBackend::Options opts;
    opts.endpoint = cfg.endpoint;
    opts.api_key = std::getenv(cfg.api_key_env.c_str());
    opts.timeout = std::chrono::seconds(cfg.timeout_seconds);
    opts.retry.max_attempts = cfg.max_retries;
    opts.retry.initial_backoff = std::chrono::milliseconds(cfg.backoff_initial_ms);
    return std::make_unique<HttpBackend>(std::move(opts));
}

}  // namespace scogen
