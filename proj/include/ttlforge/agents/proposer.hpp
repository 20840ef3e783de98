#pragma once

#include "ttlforge/agents/history.hpp"
#include "ttlforge/agents/prompts.hpp"
#include "ttlforge/backend/backend.hpp"
#include "ttlforge/core/wauc.hpp"

namespace ttlforge::agents {

inline constexpr const char* kCandidateBegin = "BEGIN_CANDIDATE_PROMPT";
inline constexpr const char* kCandidateEnd = "END_CANDIDATE_PROMPT";

/// Text strictly between the first BEGIN_CANDIDATE_PROMPT line and the next
/// END_CANDIDATE_PROMPT line (sentinels match after trimming the line).
/// Empty or whitespace-only candidates count as missing.
inline std::optional<std::string> extract_candidate(std::string_view raw) {
    auto lines = text::split_lines(raw);
    auto begin = std::find_if(lines.begin(), lines.end(), [](const std::string& l) { return text::trim(l) == kCandidateBegin; });
    if (begin == lines.end()) return std::nullopt;
    auto end = std::find_if(begin + 1, lines.end(), [](const std::string& l) { return text::trim(l) == kCandidateEnd; });
    if (end == lines.end()) return std::nullopt;
    std::vector<std::string> inner(begin + 1, end);
    std::string candidate = text::join(inner, "\n");
    if (text::trim_view(candidate).empty()) return std::nullopt;
    return candidate;
}

struct ProposerConfig {
    backend::RoleBinding binding;
    std::size_t session_char_budget = 60000;
    PromptSetPtr prompts = default_prompts();
};

struct ProposalOutcome {
    std::optional<AdaptationPolicy> policy;
    std::vector<std::string> raw_outputs;
    std::string error;
    int calls = 0;
};

inline std::string render_proposer_user_message(const ProposerConfig& cfg, const AdaptationPolicy& parent,
                                                const Session& session, double max_return, int iteration) {
    std::vector<std::string> scores;
    for (const auto& t : session.trajectories) scores.push_back(text::shortest(t.episode_return));
    std::vector<std::string> preludes;
    for (const auto& p : session.actor_prompts) preludes.push_back("Actor prompt:\n" + p + "\n");
    return cfg.prompts->render(
        "proposer_user",
        {{"iteration", std::to_string(iteration)},
         {"parent_meta_prompt", parent.meta_prompt},
         {"task_id", session.task_id},
         {"episode_scores", text::join(scores, ", ")},
         {"max_return", text::shortest(max_return)},
         {"wauc", text::fixed(session.wauc, 4)},
         {"session_record", serialize_history(session.trajectories, max_return, cfg.session_char_budget, preludes)}});
}

/// Asks the proposer for a revised meta-prompt; one reprompt on a missing
/// candidate. Failure is reported in the outcome, never thrown.
inline ProposalOutcome try_propose(const ProposerConfig& cfg, const AdaptationPolicy& parent, const Session& session,
                                   double max_return, const std::string& candidate_id, int iteration,
                                   std::optional<std::int64_t> seed = std::nullopt) {
    if (!cfg.binding.backend) throw Error(ErrorKind::config, "proposer has no backend");
    if (session.policy_id != parent.policy_id)
        throw Error(ErrorKind::invalid_input,
                    "session was run under '" + session.policy_id + "', not parent '" + parent.policy_id + "'");
    ProposalOutcome outcome;
    std::vector<backend::ChatMessage> messages{
        {backend::Role::system, cfg.prompts->get("proposer_system")},
        {backend::Role::user, render_proposer_user_message(cfg, parent, session, max_return, iteration)}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string raw;
        try {
            ++outcome.calls;
            raw = cfg.binding.backend->complete(cfg.binding.request(messages, seed)).text;
        } catch (const Error& e) {
            outcome.error = std::string("backend failure: ") + e.what();
            return outcome;
        }
        outcome.raw_outputs.push_back(raw);
        if (auto candidate = extract_candidate(raw)) {
            AdaptationPolicy child{candidate_id, *candidate, parent.policy_id, iteration, Provenance::proposed};
            child.validate();
            outcome.policy = std::move(child);
            return outcome;
        }
        messages.push_back({backend::Role::assistant, raw});
        messages.push_back({backend::Role::user, cfg.prompts->get("proposer_reprompt")});
    }
    outcome.error = "no candidate between sentinel lines after one reprompt";
    return outcome;
}

inline AdaptationPolicy propose(const ProposerConfig& cfg, const AdaptationPolicy& parent, const Session& session,
                                double max_return, const std::string& candidate_id, int iteration) {
    auto outcome = try_propose(cfg, parent, session, max_return, candidate_id, iteration);
    if (!outcome.policy) throw Error(ErrorKind::proposal_failed, outcome.error, parent.policy_id);
    return std::move(*outcome.policy);
}

}  // namespace ttlforge::agents
