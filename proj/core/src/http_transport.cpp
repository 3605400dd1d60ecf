#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "reits/llm_gateway.hpp"

namespace reits::llm {

namespace {

class HttplibTransport final : public Transport {
public:
    HttpResponse post(const std::string& base_url, const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& headers, const std::string& body,
                      double timeout_s) override {
        httplib::Client client(base_url);
        const auto secs = static_cast<time_t>(timeout_s);
        const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(path, h, body, "application/json");
        if (!res) return {0, {}, true};
        return {res->status, res->body, false};
    }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace reits::llm
