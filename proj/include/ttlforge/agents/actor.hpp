#pragma once

#include "ttlforge/agents/prompts.hpp"
#include "ttlforge/backend/backend.hpp"
#include "ttlforge/core/types.hpp"

#include <map>
#include <span>

namespace ttlforge::agents {

/// The in-episode policy: a frozen model conditioned on a two-part system
/// prompt (fixed base instructions + mutable guidance).
struct ActorConfig {
    backend::RoleBinding binding;
    std::string base_instructions =
        "You are an agent acting in a text environment. Read the observation and reply with exactly one command.";
    std::string initial_guidance = "Play carefully and maximize score.";
    /// Per env_kind override of the first episode's guidance.
    std::map<std::string, std::string> initial_guidance_by_env;
    std::size_t max_prior_steps = 5;
    std::string noop_action = "look";
    PromptSetPtr prompts = default_prompts();

    [[nodiscard]] std::string render_system_prompt(std::string_view guidance) const {
        return prompts->render("actor_system",
                               {{"base_instructions", base_instructions}, {"guidance", std::string(guidance)}});
    }

    [[nodiscard]] const std::string& initial_guidance_for(const TaskSpec& task) const {
        auto it = initial_guidance_by_env.find(task.env_kind);
        return it == initial_guidance_by_env.end() ? initial_guidance : it->second;
    }
};

struct ActResult {
    std::string action;
    std::string raw;
    bool used_noop = false;
    bool truncated = false;
    int calls = 0;
};

inline std::string render_actor_user_message(const ActorConfig& actor, std::span<const Step> episode_so_far,
                                             std::string_view observation) {
    std::string recent;
    const std::size_t n = std::min(actor.max_prior_steps, episode_so_far.size());
    if (n > 0) {
        recent = "Recent steps:\n";
        for (std::size_t i = episode_so_far.size() - n; i < episode_so_far.size(); ++i) {
            const auto& s = episode_so_far[i];
            recent += "> " + s.action + "\n" + s.observation + "\n";
        }
        recent += "\n";
    }
    return actor.prompts->render("actor_user", {{"recent_steps", recent}, {"observation", std::string(observation)}});
}

/// First non-empty line of a completion, trimmed.
inline std::string extract_action(std::string_view completion) {
    for (const auto& line : text::split_lines(completion)) {
        auto t = text::trim(line);
        if (!t.empty()) return t;
    }
    return {};
}

/// Chooses the next action. Backend errors propagate; the episode runner
/// turns them into an aborted episode.
inline ActResult act(const ActorConfig& actor, std::string_view guidance, std::span<const Step> episode_so_far,
                     std::string_view observation, std::optional<std::int64_t> seed = std::nullopt) {
    if (observation.empty()) throw Error(ErrorKind::invalid_input, "act: empty observation");
    if (!actor.binding.backend) throw Error(ErrorKind::config, "actor has no backend");
    auto request = actor.binding.request({{backend::Role::system, actor.render_system_prompt(guidance)},
                                          {backend::Role::user, render_actor_user_message(actor, episode_so_far, observation)}},
                                         seed);
    ActResult result;
    result.calls = 1;
    auto completion = actor.binding.backend->complete(request);
    result.raw = completion.text;
    result.truncated = completion.truncated;
    result.action = extract_action(completion.text);
    if (result.action.empty()) {
        result.action = actor.noop_action;
        result.used_noop = true;
    }
    return result;
}

}  // namespace ttlforge::agents
