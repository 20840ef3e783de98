#pragma once

#include "ttlforge/backend/backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <map>

namespace ttlforge::backend {

/// OpenAI-style chat-completion endpoint.
struct RemoteBackendSpec {
    std::string base_url;  // full endpoint URL, e.g. https://host/v1/chat/completions
    std::map<std::string, std::string> headers;
    std::string api_key_env;  // read at request time, sent as a bearer token
    std::chrono::seconds timeout{120};
    std::size_t max_in_flight = 4;

    static RemoteBackendSpec from_json(const Json& j) {
        RemoteBackendSpec s;
        s.base_url = j.at("base_url").get<std::string>();
        s.headers = j.value("headers", std::map<std::string, std::string>{});
        s.api_key_env = j.value("api_key_env", std::string{});
        s.timeout = std::chrono::seconds(j.value("timeout_s", 120L));
        s.max_in_flight = j.value("max_in_flight", std::size_t{4});
        return s;
    }

    [[nodiscard]] Json to_json() const {
        return Json{{"kind", "remote"},
                    {"base_url", base_url},
                    {"headers", headers},
                    {"api_key_env", api_key_env},
                    {"timeout_s", timeout.count()},
                    {"max_in_flight", max_in_flight}};
    }
};

inline Json request_to_json(const GenerationRequest& r) {
    Json messages = Json::array();
    for (const auto& m : r.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    Json body{{"model", r.model_id},
              {"messages", messages},
              {"temperature", r.temperature},
              {"max_tokens", r.max_output_tokens}};
    if (r.seed) body["seed"] = *r.seed;
    return body;
}

/// Extracts choices[0].message.content; finish_reason "length" flags truncation.
inline Completion completion_from_json(const Json& body) {
    try {
        const auto& choice = body.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        Completion c;
        c.text = content.is_null() ? std::string{} : content.get<std::string>();
        c.truncated = choice.value("finish_reason", std::string{}) == "length";
        return c;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::provider, std::string("malformed completion payload: ") + e.what() + ": " +
                                             body.dump().substr(0, 500));
    }
}

class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(RemoteBackendSpec spec) : spec_(std::move(spec)) {
        auto scheme_end = spec_.base_url.find("://");
        if (scheme_end == std::string::npos)
            throw Error(ErrorKind::config, "base_url must include a scheme: " + spec_.base_url);
        auto path_start = spec_.base_url.find('/', scheme_end + 3);
        origin_ = spec_.base_url.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : spec_.base_url.substr(path_start);
        set_max_in_flight(spec_.max_in_flight);
    }

    [[nodiscard]] std::string describe() const override { return "remote(" + origin_ + path_ + ")"; }

private:
    Completion do_complete(const GenerationRequest& request) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(spec_.timeout);
        client.set_read_timeout(spec_.timeout);
        client.set_write_timeout(spec_.timeout);

        httplib::Headers headers;
        for (const auto& [k, v] : spec_.headers) headers.emplace(k, v);
        if (!spec_.api_key_env.empty()) {
            const char* key = std::getenv(spec_.api_key_env.c_str());
            if (!key || !*key)
                throw Error(ErrorKind::config, "environment variable " + spec_.api_key_env + " is not set");
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        auto res = client.Post(path_, headers, request_to_json(request).dump(), "application/json");
        if (!res) throw Error(ErrorKind::transport, "request failed: " + httplib::to_string(res.error()), origin_, true);
        if (res->status != 200) {
            const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
            throw Error(ErrorKind::provider, "HTTP " + std::to_string(res->status) + ": " + res->body, origin_,
                        retryable);
        }
        Json body;
        try {
            body = Json::parse(res->body);
        } catch (const Json::exception&) {
            throw Error(ErrorKind::provider, "non-JSON response: " + res->body.substr(0, 500), origin_);
        }
        if (body.contains("error")) throw Error(ErrorKind::provider, body.at("error").dump(), origin_);
        return completion_from_json(body);
    }

    RemoteBackendSpec spec_;
    std::string origin_;
    std::string path_;
};

}  // namespace ttlforge::backend
