#pragma once

#include "ttlforge/core/selection.hpp"
#include "ttlforge/metatrain/pool.hpp"

#include <algorithm>
#include <chrono>
#include <span>

namespace ttlforge::metatrain {

enum class GateOutcome { proposal_failed, rejected_local, validated };

NLOHMANN_JSON_SERIALIZE_ENUM(GateOutcome, {{GateOutcome::proposal_failed, "proposal_failed"},
                                           {GateOutcome::rejected_local, "rejected_local"},
                                           {GateOutcome::validated, "validated"}})

struct ValidationScore {
    std::string task_id;
    double score = 0.0;
    std::string error;  // set when the session failed and was scored 0
    bool replaced = false;
    std::optional<PoolEntry> previous;

    friend bool operator==(const ValidationScore&, const ValidationScore&) = default;
};

struct IterationRecord {
    int iteration = 0;
    std::string parent_id;
    std::string task_id;
    double parent_score = 0.0;
    std::optional<std::string> candidate_id;
    std::optional<double> candidate_score;
    GateOutcome outcome = GateOutcome::proposal_failed;
    std::string proposal_error;
    std::vector<ValidationScore> validation;
    ParentDraw parent_draw;
    int sessions = 0;

    [[nodiscard]] bool improved_pool() const {
        return std::any_of(validation.begin(), validation.end(), [](const ValidationScore& v) { return v.replaced; });
    }

    friend bool operator==(const IterationRecord& a, const IterationRecord& b) {
        return Json(a) == Json(b);
    }

    friend void to_json(Json& j, const IterationRecord& r);
    friend void from_json(const Json& j, IterationRecord& r);
};

inline void to_json(Json& j, const ValidationScore& v) {
    j = Json{{"task_id", v.task_id}, {"score", v.score}, {"replaced", v.replaced}};
    if (!v.error.empty()) j["error"] = v.error;
    if (v.previous) j["previous"] = Json{{"policy_id", v.previous->policy_id}, {"score", v.previous->score}};
}

inline void from_json(const Json& j, ValidationScore& v) {
    j.at("task_id").get_to(v.task_id);
    j.at("score").get_to(v.score);
    j.at("replaced").get_to(v.replaced);
    v.error = j.value("error", std::string{});
    if (j.contains("previous"))
        v.previous = PoolEntry{j["previous"].at("policy_id").get<std::string>(), j["previous"].at("score").get<double>()};
    else
        v.previous.reset();
}

inline void to_json(Json& j, const IterationRecord& r) {
    j = Json{{"iteration", r.iteration},   {"parent_id", r.parent_id},     {"task_id", r.task_id},
             {"parent_score", r.parent_score}, {"outcome", r.outcome},     {"validation", r.validation},
             {"parent_draw", r.parent_draw}, {"sessions", r.sessions}};
    j["candidate_id"] = r.candidate_id ? Json(*r.candidate_id) : Json(nullptr);
    j["candidate_score"] = r.candidate_score ? Json(*r.candidate_score) : Json(nullptr);
    if (!r.proposal_error.empty()) j["proposal_error"] = r.proposal_error;
}

inline void from_json(const Json& j, IterationRecord& r) {
    j.at("iteration").get_to(r.iteration);
    j.at("parent_id").get_to(r.parent_id);
    j.at("task_id").get_to(r.task_id);
    j.at("parent_score").get_to(r.parent_score);
    j.at("outcome").get_to(r.outcome);
    j.at("validation").get_to(r.validation);
    j.at("parent_draw").get_to(r.parent_draw);
    j.at("sessions").get_to(r.sessions);
    r.candidate_id = j.at("candidate_id").is_null() ? std::nullopt : std::optional(j["candidate_id"].get<std::string>());
    r.candidate_score = j.at("candidate_score").is_null() ? std::nullopt : std::optional(j["candidate_score"].get<double>());
    r.proposal_error = j.value("proposal_error", std::string{});
}

struct TrainConfig {
    std::vector<std::string> train_tasks;
    std::vector<std::string> val_tasks;
    int iterations = 1;
    AdaptationPolicy seed_policy;
    SelectionMode selection_mode = SelectionMode::raw;
    SamplingRule sampling = SamplingRule::uniform_distinct;
    std::uint64_t seed = 0;
    /// Local validation reruns the parent's task with the parent's run seed.
    bool reuse_task_seed = true;
    int validation_workers = 1;
    std::chrono::milliseconds session_timeout{0};

    void validate() const {
        if (train_tasks.empty()) throw Error(ErrorKind::config, "train task list is empty");
        if (val_tasks.empty()) throw Error(ErrorKind::config, "validation task list is empty");
        if (iterations < 1) throw Error(ErrorKind::config, "iteration budget must be at least 1");
        if (validation_workers < 1) throw Error(ErrorKind::config, "validation_workers must be at least 1");
        for (std::size_t i = 0; i < val_tasks.size(); ++i)
            for (std::size_t k = 0; k < i; ++k)
                if (val_tasks[i] == val_tasks[k])
                    throw Error(ErrorKind::config, "duplicate validation task '" + val_tasks[i] + "'", val_tasks[i]);
        if (seed_policy.provenance != Provenance::seed)
            throw Error(ErrorKind::config, "seed policy must have provenance 'seed'");
        seed_policy.validate();
        if (seed_policy.meta_prompt.empty()) throw Error(ErrorKind::config, "seed policy text is empty");
    }
};

/// Counts reported in the summary: proposals, how many passed the local
/// gate, and how many of those raised at least one pool entry.
struct GateFunnel {
    int proposals = 0;
    int proposal_failures = 0;
    int rejected_local = 0;
    int locally_validated = 0;
    int pool_improvements = 0;

    friend bool operator==(const GateFunnel&, const GateFunnel&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GateFunnel, proposals, proposal_failures, rejected_local, locally_validated,
                                   pool_improvements)

inline GateFunnel gate_funnel(std::span<const IterationRecord> records) {
    GateFunnel f;
    for (const auto& r : records) {
        ++f.proposals;
        switch (r.outcome) {
        case GateOutcome::proposal_failed: ++f.proposal_failures; break;
        case GateOutcome::rejected_local: ++f.rejected_local; break;
        case GateOutcome::validated:
            ++f.locally_validated;
            if (r.improved_pool()) ++f.pool_improvements;
            break;
        }
    }
    return f;
}

/// Sessions an iteration runs: the parent, the candidate when one was
/// proposed, and one per validation task once it passes the gate.
inline int expected_sessions(GateOutcome outcome, std::size_t val_tasks) {
    switch (outcome) {
    case GateOutcome::proposal_failed: return 1;
    case GateOutcome::rejected_local: return 2;
    case GateOutcome::validated: return 2 + static_cast<int>(val_tasks);
    }
    return 0;
}

}  // namespace ttlforge::metatrain
