#pragma once

#include "ttlforge/env/environment.hpp"
#include "ttlforge/env/subprocess.hpp"

#include <memory>

namespace ttlforge::env {

struct ExternalConfig {
    std::string command;
    std::chrono::milliseconds timeout{30000};

    static ExternalConfig from_json(const Json& j) {
        ExternalConfig c;
        if (!j.contains("command") || !j.at("command").is_string() || j.at("command").get<std::string>().empty())
            throw Error(ErrorKind::malformed_config, "external env needs a non-empty \"command\"");
        c.command = j.at("command").get<std::string>();
        if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
        return c;
    }
};

/// Environment hosted by a child process speaking newline-delimited JSON:
///   request  {"op":"reset"} | {"op":"step","action":"..."}
///   response {"text":"...","reward":0.0,"done":false}
/// The process is started lazily on the first reset and kept for the
/// lifetime of the handle.
class ExternalEnv final : public Environment {
public:
    ExternalEnv(ExternalConfig config, double max_return, int horizon)
        : Environment(max_return, horizon), config_(std::move(config)) {}

private:
    Observation do_reset() override {
        if (!process_) process_ = std::make_unique<LineProcess>(config_.command);
        auto obs = exchange(Json{{"op", "reset"}});
        if (obs.done) throw Error(ErrorKind::protocol_violation, "adapter reported done on reset");
        if (obs.reward != 0.0) throw Error(ErrorKind::protocol_violation, "adapter reported non-zero reward on reset");
        return obs;
    }

    Observation do_step(const std::string& action) override {
        if (!process_) throw Error(ErrorKind::adapter_unreachable, "adapter not started");
        return exchange(Json{{"op", "step"}, {"action", action}});
    }

    Observation exchange(const Json& request) {
        try {
            process_->write_line(request.dump());
            const std::string line = process_->read_line(config_.timeout);
            Json resp;
            try {
                resp = Json::parse(line);
            } catch (const Json::exception&) {
                throw Error(ErrorKind::protocol_violation, "adapter sent invalid JSON: " + line.substr(0, 200));
            }
            if (!resp.is_object() || !resp.contains("text") || !resp["text"].is_string() || !resp.contains("reward") ||
                !resp["reward"].is_number() || !resp.contains("done") || !resp["done"].is_boolean())
                throw Error(ErrorKind::protocol_violation,
                            "adapter response needs text (string), reward (number), done (bool): " + line.substr(0, 200));
            return Observation{resp["text"].get<std::string>(), resp["done"].get<bool>(), resp["reward"].get<double>()};
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::adapter_unreachable) process_.reset();
            throw;
        }
    }

    ExternalConfig config_;
    std::unique_ptr<LineProcess> process_;
};

}  // namespace ttlforge::env
