#pragma once

#include "ttlforge/core/types.hpp"

#include <atomic>
#include <string>

namespace ttlforge::agents {

/// The generic one-sentence seed meta-prompt evolution starts from.
inline constexpr const char* kDefaultSeedMetaPrompt = "analyze the game trajectory and provide feedback";

namespace detail {
inline std::atomic<std::uint64_t>& naive_policy_counter() {
    static std::atomic<std::uint64_t> counter{0};
    return counter;
}
}  // namespace detail

/// Seed policy with an explicit id (used inside runs, where ids must be
/// reproducible).
inline AdaptationPolicy make_naive_policy(const std::string& seed_text, std::string policy_id) {
    if (seed_text.empty()) throw Error(ErrorKind::invalid_input, "seed meta-prompt must be non-empty");
    AdaptationPolicy p{std::move(policy_id), seed_text, std::nullopt, 0, Provenance::seed};
    p.validate();
    return p;
}

/// Seed policy with a fresh process-unique id.
inline AdaptationPolicy make_naive_policy(const std::string& seed_text = kDefaultSeedMetaPrompt) {
    const auto n = detail::naive_policy_counter().fetch_add(1) + 1;
    return make_naive_policy(seed_text, "seed-" + std::to_string(n));
}

}  // namespace ttlforge::agents
