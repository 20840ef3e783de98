#pragma once

#include "ttlforge/error.hpp"
#include "ttlforge/util/sha256.hpp"
#include "ttlforge/util/text.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

namespace ttlforge::agents {

/// Named prompt templates with `{{placeholder}}` slots. The built-in set
/// mirrors the files under templates/; a directory can override any subset.
class PromptSet {
public:
    static const std::map<std::string, std::string>& builtin() {
        static const std::map<std::string, std::string> set{
            {"actor_system", R"tpl({{base_instructions}}

## Guidance
{{guidance}}
)tpl"},
            {"actor_user", R"tpl({{recent_steps}}Current observation:
{{observation}}

Reply with the single next command on one line.
)tpl"},
            {"meta_user", R"tpl(<task>
Maximum score per episode: {{max_return}}
Steps per episode: {{horizon}}
Episodes per session: {{episode_budget}}
Episodes remaining: {{episodes_remaining}}
</task>

<current_actor_prompt>
{{current_actor_prompt}}
</current_actor_prompt>

<history>
{{history}}
</history>

Write the guidance the actor should follow in its next episode. Answer in this format:
<think>your reasoning</think>
<learn>guidance for the next episode</learn>
)tpl"},
            {"meta_reprompt", R"tpl(Your reply did not contain a non-empty <learn>...</learn> block. Answer again using exactly this format:
<think>your reasoning</think>
<learn>guidance for the next episode</learn>
)tpl"},
            {"proposer_system", R"tpl(You improve meta-prompts. A meta-prompt instructs a meta-agent that reads an actor's past episodes on a task and rewrites the actor's guidance before its next attempt. A good meta-prompt makes the actor's score rise from episode to episode.

You will see a parent meta-prompt and one complete session that was run under it. Diagnose what limited the actor's improvement across episodes and write a revised meta-prompt.

Output the complete revised meta-prompt between two lines that contain exactly
BEGIN_CANDIDATE_PROMPT
and
END_CANDIDATE_PROMPT
)tpl"},
            {"proposer_user", R"tpl(Iteration: {{iteration}}

<parent_meta_prompt>
{{parent_meta_prompt}}
</parent_meta_prompt>

<session>
Task: {{task_id}}
Episode scores: {{episode_scores}}
Maximum score per episode: {{max_return}}
W-AUC: {{wauc}}

{{session_record}}
</session>
)tpl"},
            {"proposer_reprompt", R"tpl(Your reply did not contain a non-empty candidate. Reply again with the complete revised meta-prompt between a line containing exactly BEGIN_CANDIDATE_PROMPT and a line containing exactly END_CANDIDATE_PROMPT.
)tpl"},
        };
        return set;
    }

    PromptSet() : templates_(builtin()) {}

    /// Overrides built-ins with `<name>.txt` files found in `dir`.
    static PromptSet from_directory(const std::filesystem::path& dir) {
        PromptSet set;
        if (!std::filesystem::is_directory(dir))
            throw Error(ErrorKind::config, "templates directory not found: " + dir.string());
        for (auto& [name, body] : set.templates_) {
            auto path = dir / (name + ".txt");
            if (!std::filesystem::exists(path)) continue;
            std::ifstream in(path, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            body = ss.str();
        }
        return set;
    }

    [[nodiscard]] const std::string& get(const std::string& name) const {
        auto it = templates_.find(name);
        if (it == templates_.end()) throw Error(ErrorKind::not_found, "no prompt template '" + name + "'");
        return it->second;
    }

    [[nodiscard]] std::string render(const std::string& name, const std::map<std::string, std::string>& values) const {
        return text::substitute(get(name), values);
    }

    /// Content hash per template, recorded in run logs.
    [[nodiscard]] std::map<std::string, std::string> hashes() const {
        std::map<std::string, std::string> out;
        for (const auto& [name, body] : templates_) out[name] = sha256_hex(body);
        return out;
    }

    [[nodiscard]] const std::map<std::string, std::string>& all() const noexcept { return templates_; }

private:
    std::map<std::string, std::string> templates_;
};

using PromptSetPtr = std::shared_ptr<const PromptSet>;

inline PromptSetPtr default_prompts() {
    static const PromptSetPtr set = std::make_shared<const PromptSet>();
    return set;
}

}  // namespace ttlforge::agents
