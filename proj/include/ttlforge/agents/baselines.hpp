#pragma once

#include "ttlforge/ttl/session.hpp"

namespace ttlforge::agents {

inline const char* const kStaticPolicyId = "static";

/// Runs K episodes with the initial guidance and no adaptation.
inline Session run_baseline_static(const TaskSpec& task, const ActorConfig& actor, std::uint64_t run_seed = 0,
                                   const ttl::SessionOptions& options = {}) {
    ttl::SessionRequest request{task, AdaptationPolicy{kStaticPolicyId, "", std::nullopt, 0, Provenance::manual}, actor,
                                run_seed, {"static"}};
    return ttl::run_ttl(request, nullptr, options);
}

}  // namespace ttlforge::agents
