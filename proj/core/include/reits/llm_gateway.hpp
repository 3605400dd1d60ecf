#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reits/error.hpp"

namespace reits::llm {

enum class Mode { live, replay, record, stub };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

struct ChatRequest {
    std::string system;
    std::string user;
    double temperature = 0.2;
    int max_tokens = 4096;
    std::string tag;  // "<kind>|<fund>|<date>", e.g. "predict|508000.SH|2024-10-08"

    /// Leading component of the tag; selects the stub generator.
    [[nodiscard]] std::string_view kind() const;
};

struct GatewayConfig {
    std::string base_url = "https://api.deepseek.com";
    std::string endpoint_path = "/v1/chat/completions";
    std::string model_name = "deepseek-reasoner";
    std::string api_key_env = "LLM_API_KEY";
    double timeout_s = 120.0;
    int max_retries = 3;
    double backoff_base_s = 1.0;
    Mode mode = Mode::stub;
    std::filesystem::path cassette_path;
    int max_in_flight = 4;

    void validate() const;
};

enum class GatewayErrorCode { replay_miss, missing_credential, retries_exhausted, http_error, bad_response, stub_unsupported };
std::string_view to_string(GatewayErrorCode c);

class GatewayError : public Error {
public:
    GatewayError(GatewayErrorCode code, const std::string& what)
        : Error(ErrorCategory::gateway, std::string(to_string(code)) + ": " + what), code_(code) {}
    [[nodiscard]] GatewayErrorCode code() const noexcept { return code_; }

private:
    GatewayErrorCode code_;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    bool timed_out = false;  // no response at all (timeout or connection failure)
};

/// Seam between retry policy and the network.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& base_url, const std::string& path,
                              const std::vector<std::pair<std::string, std::string>>& headers,
                              const std::string& body, double timeout_s) = 0;
};

/// HTTPS transport backed by cpp-httplib.
std::shared_ptr<Transport> make_http_transport();

using Sleeper = std::function<void(std::chrono::duration<double>)>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
using StubFn = std::function<std::string(const ChatRequest&)>;

/// JSON re-serialization with sorted keys when `user` parses as JSON; otherwise unchanged.
std::string canonical_user(std::string_view user);
/// SHA-256 (hex) over model, system and canonical user text.
std::string request_digest(const ChatRequest& req, std::string_view model);

struct CassetteRecord {
    std::string digest;
    std::string tag;
    std::string model;
    std::string response;
};

/// Digest-keyed response store persisted as JSONL, one record per digest, sorted by digest.
class Cassette {
public:
    Cassette() = default;
    explicit Cassette(std::filesystem::path path);

    [[nodiscard]] std::optional<CassetteRecord> find(const std::string& digest) const;
    /// Inserts or replaces, then rewrites the backing file when one is set.
    void put(CassetteRecord rec);
    [[nodiscard]] std::size_t size() const;

private:
    void save_locked() const;

    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::map<std::string, CassetteRecord> records_;
};

/// Extracts the completion text from an OpenAI-compatible response body. A separate
/// `reasoning_content` channel is folded into a leading <think> block.
std::string extract_completion(const std::string& body);

class Gateway {
public:
    explicit Gateway(GatewayConfig config, std::shared_ptr<Transport> transport = nullptr, Sleeper sleeper = {},
                     EnvLookup env = {});

    /// See Mode: live posts with retry; record posts then stores; replay reads the cassette only;
    /// stub dispatches on the request tag's kind.
    std::string complete(const ChatRequest& req);

    void set_stub(std::string kind, StubFn fn);
    [[nodiscard]] const GatewayConfig& config() const { return config_; }
    /// True when the mode can produce free-text narratives (not stub).
    [[nodiscard]] bool narratives_enabled() const { return config_.mode != Mode::stub; }

private:
    std::string post_with_retry(const ChatRequest& req);

    GatewayConfig config_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    EnvLookup env_;
    std::shared_ptr<Cassette> cassette_;
    std::map<std::string, StubFn, std::less<>> stubs_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

/// Deterministic stand-in for the prediction model. Reads `price_context.chg_5d` and
/// `price_context.thresholds.eps5` from the prediction input; the dominant direction for
/// every horizon is up above eps5, down below -eps5, side otherwise, with probabilities
/// 0.6 / 0.25 / 0.15 and confidence 0.5.
std::string stub_predict(std::string_view prediction_input);

}  // namespace reits::llm
