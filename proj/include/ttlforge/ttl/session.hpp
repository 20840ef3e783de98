#pragma once

#include "ttlforge/agents/meta_agent.hpp"
#include "ttlforge/core/wauc.hpp"
#include "ttlforge/env/registry.hpp"
#include "ttlforge/ttl/episode.hpp"

#include <chrono>

namespace ttlforge::ttl {

struct SessionRequest {
    TaskSpec task;
    AdaptationPolicy policy;
    agents::ActorConfig actor;
    std::uint64_t run_seed = 0;
    std::vector<std::string> tags;
};

/// Receives every event of a session as it happens (the run store's
/// session log implements this).
class SessionObserver {
public:
    virtual ~SessionObserver() = default;
    virtual void episode_start(int /*episode*/, const std::string& /*actor_prompt*/, const std::string& /*guidance*/) {}
    virtual void step(int /*episode*/, const Step&, const agents::ActResult&) {}
    virtual void episode_end(const Trajectory&, const std::string& /*error*/) {}
    virtual void adapted(int /*after_episode*/, const agents::AdaptResult&) {}
    virtual void warning(const std::string&) {}
    virtual void session_end(const Session&) {}
};

struct SessionOptions {
    SessionObserver* observer = nullptr;
    /// Wall-clock budget for the whole session; zero disables the guard.
    std::chrono::milliseconds timeout{0};
    env::EnvFactory env_factory = env::make_env;
    std::function<std::chrono::steady_clock::time_point()> now = [] { return std::chrono::steady_clock::now(); };
};

/// Runs K episodes on one task. Between episodes (never after the last) the
/// meta-agent rewrites the actor's guidance from the full history. With
/// `meta == nullptr` the guidance stays fixed (the Static baseline).
inline Session run_ttl(const SessionRequest& request, const agents::MetaAgentConfig* meta,
                       const SessionOptions& options = {}) {
    const auto& task = request.task;
    task.validate();
    if (meta) {
        request.policy.validate();
        if (request.policy.meta_prompt.empty())
            throw Error(ErrorKind::invalid_input, "policy '" + request.policy.policy_id + "' has an empty meta-prompt");
    }
    auto env = options.env_factory(task);

    Session session;
    session.task_id = task.task_id;
    session.policy_id = request.policy.policy_id;

    std::optional<std::chrono::steady_clock::time_point> deadline;
    if (options.timeout.count() > 0) deadline = options.now() + options.timeout;
    auto expired = [&] { return deadline && options.now() >= *deadline; };

    std::string guidance = request.actor.initial_guidance_for(task);
    for (int k = 1; k <= task.episode_budget; ++k) {
        const std::string actor_prompt = request.actor.render_system_prompt(guidance);
        session.actor_prompts.push_back(actor_prompt);
        if (options.observer) options.observer->episode_start(k, actor_prompt, guidance);

        EpisodeOutcome outcome;
        if (expired()) {
            outcome.trajectory.episode_index = k;
            outcome.trajectory.terminated = Termination::aborted;
            outcome.error = "session timeout";
        } else {
            EpisodeHooks hooks;
            hooks.seed = request.run_seed;
            hooks.expired = expired;
            if (options.observer)
                hooks.on_step = [&](const Step& s, const agents::ActResult& a) { options.observer->step(k, s, a); };
            outcome = run_episode_detailed(*env, request.actor, guidance, task.horizon, k, hooks);
        }
        session.trajectories.push_back(outcome.trajectory);
        if (options.observer) options.observer->episode_end(outcome.trajectory, outcome.error);

        if (meta && k < task.episode_budget && !expired()) {
            agents::AdaptationInput input{request.policy.meta_prompt,
                                          actor_prompt,
                                          guidance,
                                          session.trajectories,
                                          task.max_return,
                                          task.horizon,
                                          task.episode_budget};
            auto result = agents::adapt(*meta, input,
                                        static_cast<std::int64_t>(derive_seed(request.run_seed, {0xADA7u, static_cast<std::uint64_t>(k)}) >> 1));
            if (options.observer) options.observer->adapted(k, result);
            guidance = result.guidance;
        }
    }

    std::vector<std::string> warnings;
    session.wauc = score_wauc(session.trajectories, task.max_return, &warnings);
    if (options.observer) {
        for (const auto& w : warnings) options.observer->warning(w);
        options.observer->session_end(session);
    }
    return session;
}

}  // namespace ttlforge::ttl
