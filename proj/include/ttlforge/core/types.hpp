#pragma once

#include "ttlforge/error.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ttlforge {

using Json = nlohmann::json;

enum class Split { train, val, test };
enum class Termination { env_done, horizon_exhausted, aborted };
enum class Provenance { seed, proposed, manual };

NLOHMANN_JSON_SERIALIZE_ENUM(Split, {{Split::train, "train"}, {Split::val, "val"}, {Split::test, "test"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Termination, {{Termination::env_done, "env_done"},
                                           {Termination::horizon_exhausted, "horizon_exhausted"},
                                           {Termination::aborted, "aborted"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Provenance, {{Provenance::seed, "seed"},
                                          {Provenance::proposed, "proposed"},
                                          {Provenance::manual, "manual"}})

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw Error(ErrorKind::invalid_input, "unknown split '" + std::string(s) + "'", std::string(s));
}

inline std::string_view to_string(Split s) noexcept {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

inline std::string_view to_string(Termination t) noexcept {
    switch (t) {
    case Termination::env_done: return "env_done";
    case Termination::horizon_exhausted: return "horizon_exhausted";
    case Termination::aborted: return "aborted";
    }
    return "?";
}

/// One episodic task instance: which environment, how long, how many episodes.
struct TaskSpec {
    std::string task_id;
    std::string env_kind;
    Json env_config = Json::object();
    int horizon = 1;
    int episode_budget = 1;
    double max_return = 1.0;
    Split split = Split::train;

    void validate() const {
        if (task_id.empty()) throw Error(ErrorKind::invalid_input, "task_id must be non-empty");
        if (horizon < 1)
            throw Error(ErrorKind::invalid_input, "task '" + task_id + "': horizon must be >= 1", task_id);
        if (episode_budget < 1)
            throw Error(ErrorKind::invalid_input, "task '" + task_id + "': episode_budget must be >= 1",
                        task_id);
        if (!(max_return > 0))
            throw Error(ErrorKind::invalid_input, "task '" + task_id + "': max_return must be > 0", task_id);
    }

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct Step {
    int index = 0;
    std::string observation;  // what the actor saw before acting
    std::string action;
    double reward = 0.0;
    double cumulative_return = 0.0;

    friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
    int episode_index = 1;
    std::vector<Step> steps;
    double episode_return = 0.0;
    Termination terminated = Termination::env_done;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Session {
    std::string task_id;
    std::string policy_id;
    std::vector<Trajectory> trajectories;
    std::vector<std::string> actor_prompts;
    double wauc = 0.0;

    [[nodiscard]] std::vector<double> returns() const {
        std::vector<double> out;
        out.reserve(trajectories.size());
        for (const auto& t : trajectories) out.push_back(t.episode_return);
        return out;
    }

    friend bool operator==(const Session&, const Session&) = default;
};

/// A meta-prompt plus lineage. The text fully determines adaptation behavior.
struct AdaptationPolicy {
    std::string policy_id;
    std::string meta_prompt;
    std::optional<std::string> parent_id;
    int created_at_iteration = 0;
    Provenance provenance = Provenance::seed;

    void validate() const {
        if (policy_id.empty()) throw Error(ErrorKind::invalid_input, "policy_id must be non-empty");
        if ((provenance == Provenance::seed) == parent_id.has_value())
            throw Error(ErrorKind::invalid_input,
                        "policy '" + policy_id + "': seed provenance requires no parent and vice versa",
                        policy_id);
    }

    friend bool operator==(const AdaptationPolicy&, const AdaptationPolicy&) = default;
};

/// Steps per episode when a task leaves `horizon` out.
inline int default_horizon(std::string_view env_kind) { return env_kind == "formfill" ? 15 : 50; }

// JSON mapping. Field names are part of the on-disk format (docs/schema.md).

inline void to_json(Json& j, const TaskSpec& t) {
    j = Json{{"task_id", t.task_id},     {"env_kind", t.env_kind},
             {"env_config", t.env_config}, {"horizon", t.horizon},
             {"episode_budget", t.episode_budget}, {"max_return", t.max_return},
             {"split", t.split}};
}

inline void from_json(const Json& j, TaskSpec& t) {
    j.at("task_id").get_to(t.task_id);
    j.at("env_kind").get_to(t.env_kind);
    t.env_config = j.value("env_config", Json::object());
    t.horizon = j.value("horizon", default_horizon(t.env_kind));
    j.at("episode_budget").get_to(t.episode_budget);
    j.at("max_return").get_to(t.max_return);
    t.split = parse_split(j.value("split", std::string("train")));
}

inline void to_json(Json& j, const Step& s) {
    j = Json{{"index", s.index},   {"observation", s.observation}, {"action", s.action},
             {"reward", s.reward}, {"cumulative_return", s.cumulative_return}};
}

inline void from_json(const Json& j, Step& s) {
    j.at("index").get_to(s.index);
    j.at("observation").get_to(s.observation);
    j.at("action").get_to(s.action);
    j.at("reward").get_to(s.reward);
    j.at("cumulative_return").get_to(s.cumulative_return);
}

inline void to_json(Json& j, const Trajectory& t) {
    j = Json{{"episode_index", t.episode_index},
             {"steps", t.steps},
             {"episode_return", t.episode_return},
             {"terminated", t.terminated}};
}

inline void from_json(const Json& j, Trajectory& t) {
    j.at("episode_index").get_to(t.episode_index);
    j.at("steps").get_to(t.steps);
    j.at("episode_return").get_to(t.episode_return);
    j.at("terminated").get_to(t.terminated);
}

inline void to_json(Json& j, const Session& s) {
    j = Json{{"task_id", s.task_id},
             {"policy_id", s.policy_id},
             {"trajectories", s.trajectories},
             {"actor_prompts", s.actor_prompts},
             {"wauc", s.wauc}};
}

inline void from_json(const Json& j, Session& s) {
    j.at("task_id").get_to(s.task_id);
    j.at("policy_id").get_to(s.policy_id);
    j.at("trajectories").get_to(s.trajectories);
    j.at("actor_prompts").get_to(s.actor_prompts);
    j.at("wauc").get_to(s.wauc);
}

inline void to_json(Json& j, const AdaptationPolicy& p) {
    j = Json{{"policy_id", p.policy_id},
             {"meta_prompt", p.meta_prompt},
             {"parent_id", p.parent_id ? Json(*p.parent_id) : Json(nullptr)},
             {"created_at_iteration", p.created_at_iteration},
             {"provenance", p.provenance}};
}

inline void from_json(const Json& j, AdaptationPolicy& p) {
    j.at("policy_id").get_to(p.policy_id);
    j.at("meta_prompt").get_to(p.meta_prompt);
    if (j.contains("parent_id") && !j.at("parent_id").is_null())
        p.parent_id = j.at("parent_id").get<std::string>();
    else
        p.parent_id.reset();
    p.created_at_iteration = j.value("created_at_iteration", 0);
    j.at("provenance").get_to(p.provenance);
}

}  // namespace ttlforge
