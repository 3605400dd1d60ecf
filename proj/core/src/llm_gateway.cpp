#include "reits/llm_gateway.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

namespace reits::llm {

using nlohmann::json;

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::live: return "live";
        case Mode::replay: return "replay";
        case Mode::record: return "record";
        case Mode::stub: return "stub";
    }
    return "stub";
}

Mode parse_mode(std::string_view s) {
    if (s == "live") return Mode::live;
    if (s == "replay") return Mode::replay;
    if (s == "record") return Mode::record;
    if (s == "stub") return Mode::stub;
    throw ConfigError("unknown gateway mode '" + std::string(s) + "' (live, replay, record, stub)");
}

std::string_view to_string(GatewayErrorCode c) {
    switch (c) {
        case GatewayErrorCode::replay_miss: return "replay_miss";
        case GatewayErrorCode::missing_credential: return "missing_credential";
        case GatewayErrorCode::retries_exhausted: return "retries_exhausted";
        case GatewayErrorCode::http_error: return "http_error";
        case GatewayErrorCode::bad_response: return "bad_response";
        case GatewayErrorCode::stub_unsupported: return "stub_unsupported";
    }
    return "http_error";
}

std::string_view ChatRequest::kind() const {
    const std::string_view t(tag);
    return t.substr(0, t.find('|'));
}

void GatewayConfig::validate() const {
    if (max_retries < 0) throw ConfigError("gateway.max_retries must be >= 0");
    if (max_in_flight < 1) throw ConfigError("gateway.max_in_flight must be >= 1");
    if (timeout_s <= 0) throw ConfigError("gateway.timeout_s must be > 0");
    if (backoff_base_s < 0) throw ConfigError("gateway.backoff_base_s must be >= 0");
    if ((mode == Mode::replay || mode == Mode::record) && cassette_path.empty()) {
        throw ConfigError("gateway.cassette_path is required in replay and record modes");
    }
}

std::string canonical_user(std::string_view user) {
    auto parsed = json::parse(user, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) return std::string(user);
    return parsed.dump();
}

std::string request_digest(const ChatRequest& req, std::string_view model) {
    const json keyed = {{"model", model}, {"system", req.system}, {"user", canonical_user(req.user)}};
    const std::string material = keyed.dump();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(material.data(), material.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw InvariantError("sha256 digest failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

Cassette::Cassette(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // a missing cassette is empty
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            CassetteRecord r{j.at("digest").get<std::string>(), j.value("tag", std::string{}),
                             j.value("model", std::string{}), j.at("response").get<std::string>()};
            records_[r.digest] = std::move(r);
        } catch (const json::exception& e) {
            throw DataError(path_.string() + ":" + std::to_string(lineno) + ": bad cassette record: " + e.what());
        }
    }
}

std::optional<CassetteRecord> Cassette::find(const std::string& digest) const {
    std::lock_guard lock(mu_);
    const auto it = records_.find(digest);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void Cassette::put(CassetteRecord rec) {
    std::lock_guard lock(mu_);
    records_[rec.digest] = std::move(rec);
    if (!path_.empty()) save_locked();
}

std::size_t Cassette::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

void Cassette::save_locked() const {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw DataError("cannot write cassette " + path_.string());
    for (const auto& [digest, r] : records_) {
        out << json{{"digest", r.digest}, {"tag", r.tag}, {"model", r.model}, {"response", r.response}}.dump()
            << '\n';
    }
}

std::string extract_completion(const std::string& body) {
    try {
        const auto j = json::parse(body);
        const auto& msg = j.at("choices").at(0).at("message");
        std::string content = msg.value("content", std::string{});
        if (msg.contains("reasoning_content") && msg["reasoning_content"].is_string() &&
            content.find("<think>") == std::string::npos) {
            content = "<think>" + msg["reasoning_content"].get<std::string>() + "</think>\n" + content;
        }
        return content;
    } catch (const json::exception& e) {
        throw GatewayError(GatewayErrorCode::bad_response, std::string("unparseable completion body: ") + e.what());
    }
}

namespace {

void real_sleep(std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }

std::optional<std::string> real_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') return std::string(v);
    return std::nullopt;
}

bool retryable(const HttpResponse& r) { return r.timed_out || r.status == 429 || (r.status >= 500 && r.status < 600); }

}  // namespace

Gateway::Gateway(GatewayConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper, EnvLookup env)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper(real_sleep)),
      env_(env ? std::move(env) : EnvLookup(real_env)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(config_.max_in_flight)) {
    config_.validate();
    if (config_.mode == Mode::replay || config_.mode == Mode::record) {
        cassette_ = std::make_shared<Cassette>(config_.cassette_path);
    }
    stubs_.emplace("predict", [](const ChatRequest& r) { return stub_predict(r.user); });
}

void Gateway::set_stub(std::string kind, StubFn fn) { stubs_[std::move(kind)] = std::move(fn); }

std::string Gateway::complete(const ChatRequest& req) {
    if (req.user.empty()) throw InvariantError("chat request with empty user message (" + req.tag + ")");
    switch (config_.mode) {
        case Mode::stub: {
            const auto it = stubs_.find(req.kind());
            if (it == stubs_.end()) {
                throw GatewayError(GatewayErrorCode::stub_unsupported, "no stub for tag " + req.tag);
            }
            return it->second(req);
        }
        case Mode::replay: {
            const auto digest = request_digest(req, config_.model_name);
            if (auto rec = cassette_->find(digest)) return rec->response;
            throw GatewayError(GatewayErrorCode::replay_miss, "no cassette entry for tag " + req.tag + " (digest " +
                                                                  digest + ")");
        }
        case Mode::record: {
            auto text = post_with_retry(req);
            cassette_->put({request_digest(req, config_.model_name), req.tag, config_.model_name, text});
            return text;
        }
        case Mode::live: return post_with_retry(req);
    }
    throw InvariantError("unhandled gateway mode");
}

std::string Gateway::post_with_retry(const ChatRequest& req) {
    const auto key = env_(config_.api_key_env);
    if (!key) {
        throw GatewayError(GatewayErrorCode::missing_credential,
                           "environment variable " + config_.api_key_env + " is not set");
    }
    if (!transport_) transport_ = make_http_transport();

    const json body = {{"model", config_.model_name},
                       {"messages", json::array({{{"role", "system"}, {"content", req.system}},
                                                 {{"role", "user"}, {"content", req.user}}})},
                       {"temperature", req.temperature},
                       {"max_tokens", req.max_tokens}};
    const std::vector<std::pair<std::string, std::string>> headers = {{"Authorization", "Bearer " + *key}};
    const std::string payload = body.dump();

    struct Permit {
        std::counting_semaphore<>& s;
        explicit Permit(std::counting_semaphore<>& sem) : s(sem) { s.acquire(); }
        ~Permit() { s.release(); }
    } permit(*in_flight_);

    for (int attempt = 0;; ++attempt) {
        const auto resp = transport_->post(config_.base_url, config_.endpoint_path, headers, payload, config_.timeout_s);
        if (resp.status >= 200 && resp.status < 300 && !resp.timed_out) return extract_completion(resp.body);
        if (!retryable(resp)) {
            throw GatewayError(GatewayErrorCode::http_error,
                               "HTTP " + std::to_string(resp.status) + " for tag " + req.tag);
        }
        if (attempt >= config_.max_retries) {
            throw GatewayError(GatewayErrorCode::retries_exhausted,
                               std::to_string(attempt + 1) + " attempts failed for tag " + req.tag + " (last " +
                                   (resp.timed_out ? std::string("timeout") : "HTTP " + std::to_string(resp.status)) +
                                   ")");
        }
        const double wait = config_.backoff_base_s * std::pow(2.0, attempt);
        spdlog::warn("gateway: {} for {}, retry {} in {:.2f}s", resp.timed_out ? "timeout" : std::to_string(resp.status),
                     req.tag, attempt + 1, wait);
        sleeper_(std::chrono::duration<double>(wait));
    }
}

std::string stub_predict(std::string_view prediction_input) {
    double chg5 = 0.0, eps5 = 0.0;
    try {
        const auto j = json::parse(prediction_input);
        const auto& pc = j.at("price_context");
        chg5 = pc.at("chg_5d").get<double>();
        eps5 = pc.at("thresholds").at("eps5").get<double>();
    } catch (const json::exception& e) {
        throw GatewayError(GatewayErrorCode::stub_unsupported, std::string("stub cannot parse prediction input: ") +
                                                                   e.what());
    }
    std::string dominant = "side";
    if (chg5 > eps5) dominant = "up";
    else if (chg5 < -eps5) dominant = "down";

    json h;
    if (dominant == "up") h = {{"up", 0.6}, {"down", 0.15}, {"side", 0.25}, {"confidence", 0.5}};
    else if (dominant == "down") h = {{"up", 0.15}, {"down", 0.6}, {"side", 0.25}, {"confidence", 0.5}};
    else if (chg5 >= 0) h = {{"up", 0.25}, {"down", 0.15}, {"side", 0.6}, {"confidence", 0.5}};
    else h = {{"up", 0.15}, {"down", 0.25}, {"side", 0.6}, {"confidence", 0.5}};
    const json out = {{"t1", h}, {"t5", h}, {"t20", h}};
    return "<think>\nRule-based stub: 5-day change " + json(chg5).dump() + " against eps5 " + json(eps5).dump() +
           " gives " + dominant + " for every horizon.\n</think>\n" + out.dump();
}

}  // namespace reits::llm
