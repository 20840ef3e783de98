#pragma once

#include "ttlforge/backend/backend.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <thread>

namespace ttlforge::backend {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{30000};

    static RetryPolicy from_json(const Json& j) {
        RetryPolicy p;
        p.max_attempts = j.value("max_attempts", p.max_attempts);
        p.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 500L));
        p.multiplier = j.value("multiplier", p.multiplier);
        p.max_backoff = std::chrono::milliseconds(j.value("max_backoff_ms", 30000L));
        if (p.max_attempts < 1) throw Error(ErrorKind::config, "retry.max_attempts must be >= 1");
        return p;
    }

    [[nodiscard]] Json to_json() const {
        return Json{{"max_attempts", max_attempts},
                    {"initial_backoff_ms", initial_backoff.count()},
                    {"multiplier", multiplier},
                    {"max_backoff_ms", max_backoff.count()}};
    }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Retries retryable errors with exponential backoff; anything else
/// propagates on the first attempt.
class RetryingBackend final : public Backend {
public:
    RetryingBackend(BackendPtr inner, RetryPolicy policy, Sleeper sleeper = {})
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleeper)) {
        if (policy_.max_attempts < 1) throw Error(ErrorKind::invalid_input, "max_attempts must be >= 1");
        if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }

    [[nodiscard]] std::string describe() const override { return "retry(" + inner_->describe() + ")"; }
    [[nodiscard]] const Backend& inner() const noexcept { return *inner_; }

private:
    Completion do_complete(const GenerationRequest& request) override {
        auto backoff = policy_.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            try {
                return inner_->complete(request);
            } catch (const Error& e) {
                if (!e.retryable()) throw;
                if (attempt >= policy_.max_attempts)
                    throw Error(e.kind(),
                                std::string(e.what()) + " (after " + std::to_string(attempt) + " attempt" +
                                    (attempt == 1 ? "" : "s") + ")",
                                e.subject(), false);
                sleep_(backoff);
                backoff = std::min(policy_.max_backoff, std::chrono::milliseconds(static_cast<long>(
                                                            static_cast<double>(backoff.count()) * policy_.multiplier)));
            }
        }
    }

    BackendPtr inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

inline BackendPtr with_retries(BackendPtr backend, RetryPolicy policy, Sleeper sleeper = {}) {
    return std::make_shared<RetryingBackend>(std::move(backend), policy, std::move(sleeper));
}

}  // namespace ttlforge::backend
