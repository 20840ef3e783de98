#pragma once

#include "ttlforge/agents/history.hpp"
#include "ttlforge/agents/prompts.hpp"
#include "ttlforge/backend/backend.hpp"

namespace ttlforge::agents {

struct MetaOutput {
    std::string think;
    std::string learn;
};

/// Extracts the first <think> span (optional) and the first <learn> span
/// (required, non-empty after trimming).
inline MetaOutput parse_meta_output(std::string_view raw) {
    MetaOutput out;
    if (auto think = text::between_tags(raw, "think")) out.think = text::trim(*think);
    auto learn = text::between_tags(raw, "learn");
    if (!learn) throw Error(ErrorKind::parse, "meta output has no <learn>...</learn> block");
    out.learn = text::trim(*learn);
    if (out.learn.empty()) throw Error(ErrorKind::parse, "meta output has an empty <learn> block");
    return out;
}

/// The adaptation policy's runtime: a model whose system prompt is the
/// meta-prompt.
struct MetaAgentConfig {
    backend::RoleBinding binding;
    std::size_t history_char_budget = 60000;
    PromptSetPtr prompts = default_prompts();
};

/// What the meta-agent conditions on after episode k.
struct AdaptationInput {
    std::string meta_prompt;
    std::string current_actor_prompt;
    std::string current_guidance;
    std::span<const Trajectory> history;
    double max_return = 1.0;
    int horizon = 1;
    int episode_budget = 1;

    [[nodiscard]] int episodes_remaining() const { return episode_budget - static_cast<int>(history.size()); }

    void validate() const {
        if (meta_prompt.empty()) throw Error(ErrorKind::invalid_input, "adapt: empty meta-prompt");
        if (history.empty()) throw Error(ErrorKind::invalid_input, "adapt: empty history");
        if (static_cast<int>(history.size()) >= episode_budget)
            throw Error(ErrorKind::invalid_input, "adapt: called after the final episode");
    }
};

struct AdaptResult {
    std::string guidance;
    std::optional<MetaOutput> output;
    std::vector<std::string> raw_outputs;
    bool fell_back = false;
    std::string note;
    int calls = 0;
};

inline std::string render_meta_user_message(const MetaAgentConfig& meta, const AdaptationInput& in) {
    return meta.prompts->render(
        "meta_user", {{"max_return", text::shortest(in.max_return)},
                      {"horizon", std::to_string(in.horizon)},
                      {"episode_budget", std::to_string(in.episode_budget)},
                      {"episodes_remaining", std::to_string(in.episodes_remaining())},
                      {"current_actor_prompt", in.current_actor_prompt},
                      {"history", serialize_history(in.history, in.max_return, meta.history_char_budget)}});
}

/// Produces the next episode's guidance. Never throws for backend or parse
/// failures: those keep the current guidance and set `fell_back`.
inline AdaptResult adapt(const MetaAgentConfig& meta, const AdaptationInput& in,
                         std::optional<std::int64_t> seed = std::nullopt) {
    in.validate();
    if (!meta.binding.backend) throw Error(ErrorKind::config, "meta-agent has no backend");
    AdaptResult result;
    std::vector<backend::ChatMessage> messages{{backend::Role::system, in.meta_prompt},
                                               {backend::Role::user, render_meta_user_message(meta, in)}};
    auto fallback = [&](std::string note) {
        result.guidance = in.current_guidance;
        result.fell_back = true;
        result.note = std::move(note);
        return result;
    };
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string raw;
        try {
            ++result.calls;
            raw = meta.binding.backend->complete(meta.binding.request(messages, seed)).text;
        } catch (const Error& e) {
            return fallback(std::string("backend failure: ") + e.what());
        }
        result.raw_outputs.push_back(raw);
        try {
            result.output = parse_meta_output(raw);
            result.guidance = result.output->learn;
            return result;
        } catch (const Error& e) {
            if (attempt == 1) return fallback(std::string("unparseable after reprompt: ") + e.what());
            messages.push_back({backend::Role::assistant, raw});
            messages.push_back({backend::Role::user, meta.prompts->get("meta_reprompt")});
        }
    }
    return fallback("unreachable");
}

}  // namespace ttlforge::agents
