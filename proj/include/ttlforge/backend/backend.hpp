#pragma once

#include "ttlforge/core/types.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ttlforge::backend {

enum class Role { system, user, assistant };

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {{Role::system, "system"}, {Role::user, "user"}, {Role::assistant, "assistant"}})

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct GenerationRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    double temperature = 0.7;
    int max_output_tokens = 1024;
    std::optional<std::int64_t> seed;

    void validate() const {
        if (messages.empty()) throw Error(ErrorKind::invalid_input, "generation request has no messages");
        for (std::size_t i = 0; i < messages.size(); ++i) {
            const auto& m = messages[i];
            if (m.role != Role::assistant && m.content.empty())
                throw Error(ErrorKind::invalid_input, "system and user messages must be non-empty");
            if (m.role == Role::system && i != 0)
                throw Error(ErrorKind::invalid_input, "a system message may only appear first");
        }
        if (temperature < 0) throw Error(ErrorKind::invalid_input, "temperature must be >= 0");
        if (max_output_tokens < 1) throw Error(ErrorKind::invalid_input, "max_output_tokens must be positive");
    }

    [[nodiscard]] std::string_view system_prompt() const {
        return !messages.empty() && messages.front().role == Role::system ? std::string_view(messages.front().content)
                                                                          : std::string_view{};
    }

    [[nodiscard]] std::string_view latest_user_message() const {
        for (auto it = messages.rbegin(); it != messages.rend(); ++it)
            if (it->role == Role::user) return it->content;
        return {};
    }
};

struct Completion {
    std::string text;
    bool truncated = false;
};

struct Usage {
    std::uint64_t calls = 0;
    std::uint64_t approx_tokens = 0;
};

/// Chat-completion endpoint. `complete` is safe to call concurrently; the
/// number of requests in flight at once is capped by `set_max_in_flight`.
class Backend {
public:
    virtual ~Backend() = default;

    Completion complete(const GenerationRequest& request) {
        request.validate();
        InFlightSlot slot(*this);
        std::uint64_t chars = 0;
        for (const auto& m : request.messages) chars += m.content.size();
        calls_.fetch_add(1, std::memory_order_relaxed);
        Completion c = do_complete(request);
        chars += c.text.size();
        tokens_.fetch_add((chars + 3) / 4, std::memory_order_relaxed);
        return c;
    }

    std::string generate(const GenerationRequest& request) { return complete(request).text; }

    [[nodiscard]] Usage usage() const noexcept {
        return {calls_.load(std::memory_order_relaxed), tokens_.load(std::memory_order_relaxed)};
    }

    void set_max_in_flight(std::size_t n) {
        std::lock_guard lock(mutex_);
        max_in_flight_ = n == 0 ? 1 : n;
    }

    [[nodiscard]] virtual std::string describe() const = 0;

private:
    virtual Completion do_complete(const GenerationRequest& request) = 0;

    class InFlightSlot {
    public:
        explicit InFlightSlot(Backend& b) : b_(b) {
            std::unique_lock lock(b_.mutex_);
            b_.cv_.wait(lock, [&] { return b_.in_flight_ < b_.max_in_flight_; });
            ++b_.in_flight_;
        }
        ~InFlightSlot() {
            {
                std::lock_guard lock(b_.mutex_);
                --b_.in_flight_;
            }
            b_.cv_.notify_one();
        }
        InFlightSlot(const InFlightSlot&) = delete;
        InFlightSlot& operator=(const InFlightSlot&) = delete;

    private:
        Backend& b_;
    };

    std::atomic<std::uint64_t> calls_{0};
    std::atomic<std::uint64_t> tokens_{0};
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t in_flight_ = 0;
    std::size_t max_in_flight_ = 64;
};

using BackendPtr = std::shared_ptr<Backend>;

/// How one agent role calls its backend.
struct RoleBinding {
    BackendPtr backend;
    std::string model_id;
    double temperature = 0.7;
    int max_output_tokens = 1024;

    [[nodiscard]] GenerationRequest request(std::vector<ChatMessage> messages,
                                            std::optional<std::int64_t> seed = std::nullopt) const {
        return GenerationRequest{std::move(messages), model_id, temperature, max_output_tokens, seed};
    }
};

}  // namespace ttlforge::backend
