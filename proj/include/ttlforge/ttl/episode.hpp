#pragma once

#include "ttlforge/agents/actor.hpp"
#include "ttlforge/env/environment.hpp"
#include "ttlforge/util/rng.hpp"

#include <functional>

namespace ttlforge::ttl {

struct EpisodeHooks {
    std::function<void(const Step&, const agents::ActResult&)> on_step;
    /// Polled before every action; returning true aborts the episode.
    std::function<bool()> expired;
    std::uint64_t seed = 0;
};

struct EpisodeOutcome {
    Trajectory trajectory;
    std::string error;  // set when the episode aborted
};

/// Resets the environment and alternates act/step until the environment
/// reports done or `horizon` steps have been taken. Backend and environment
/// errors abort the episode; the return accrued so far is kept.
inline EpisodeOutcome run_episode_detailed(env::Environment& env, const agents::ActorConfig& actor,
                                           const std::string& guidance, int horizon, int episode_index,
                                           const EpisodeHooks& hooks = {}) {
    EpisodeOutcome out;
    auto& traj = out.trajectory;
    traj.episode_index = episode_index;
    traj.terminated = Termination::horizon_exhausted;

    auto abort = [&](std::string why) {
        traj.terminated = Termination::aborted;
        out.error = std::move(why);
        return out;
    };

    env::Observation obs;
    try {
        obs = env.reset();
    } catch (const Error& e) {
        return abort(std::string("reset failed: ") + e.what());
    }

    double cumulative = 0.0;
    const int limit = std::min(horizon, env.horizon());
    for (int i = 0; i < limit; ++i) {
        if (hooks.expired && hooks.expired()) return abort("session timeout");
        agents::ActResult chosen;
        try {
            chosen = agents::act(actor, guidance, traj.steps, obs.text,
                                 static_cast<std::int64_t>(derive_seed(hooks.seed, {static_cast<std::uint64_t>(episode_index),
                                                                                    static_cast<std::uint64_t>(i)}) >>
                                                           1));
        } catch (const Error& e) {
            return abort(std::string("actor failed: ") + e.what());
        }
        env::Observation next;
        try {
            next = env.step(chosen.action);
        } catch (const Error& e) {
            return abort(std::string("environment failed: ") + e.what());
        }
        cumulative += next.reward;
        Step step{i, obs.text, chosen.action, next.reward, cumulative};
        traj.steps.push_back(step);
        traj.episode_return = cumulative;
        if (hooks.on_step) hooks.on_step(step, chosen);
        obs = std::move(next);
        if (obs.done) {
            traj.terminated = obs.truncated ? Termination::horizon_exhausted : Termination::env_done;
            break;
        }
    }
    return out;
}

inline Trajectory run_episode(env::Environment& env, const agents::ActorConfig& actor, const std::string& guidance,
                              int horizon, int episode_index = 1) {
    return run_episode_detailed(env, actor, guidance, horizon, episode_index).trajectory;
}

}  // namespace ttlforge::ttl
