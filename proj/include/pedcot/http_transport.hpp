#pragma once

// Pulls in cpp-httplib with TLS; include only where a live client is built.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <memory>
#include <string>

#include "pedcot/llm.hpp"

namespace pedcot {

class HttplibTransport : public HttpTransport {
public:
    HttpResponse post(const std::string& base_url, const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      const std::string& body, double timeout_seconds) override {
        httplib::Client client(base_url);
        client.set_connection_timeout(static_cast<time_t>(timeout_seconds), 0);
        client.set_read_timeout(static_cast<time_t>(timeout_seconds), 0);
        client.set_write_timeout(static_cast<time_t>(timeout_seconds), 0);
        httplib::Headers h;
        std::string content_type = "application/json";
        for (const auto& [k, v] : headers) {
            if (k == "Content-Type") {
                content_type = v;
            } else {
                h.emplace(k, v);
            }
        }
        const httplib::Result res = client.Post(path, h, body, content_type);
        if (!res) {
            return {0, "", httplib::to_string(res.error())};
        }
        return {res->status, res->body, ""};
    }
};

inline Client make_live_client(const ModelConfig& cfg, std::shared_ptr<ResponseCache> cache) {
    return Client::live(cfg, std::make_shared<HttplibTransport>(), std::move(cache));
}

} // namespace pedcot
