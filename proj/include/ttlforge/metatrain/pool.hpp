#pragma once

#include "ttlforge/core/types.hpp"
#include "ttlforge/util/rng.hpp"

#include <map>
#include <set>

namespace ttlforge::metatrain {

struct PoolEntry {
    std::string policy_id;
    double score = 0.0;

    friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

struct Replacement {
    std::string task_id;
    std::string previous_policy;
    double previous_score = 0.0;
    std::string policy_id;
    double score = 0.0;
};

/// Best (policy, score) per validation task plus every policy that ever
/// passed validation.
class ExpertPool {
public:
    [[nodiscard]] const std::map<std::string, PoolEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const std::map<std::string, AdaptationPolicy>& registry() const noexcept { return registry_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    void register_policy(const AdaptationPolicy& p) {
        p.validate();
        auto [it, inserted] = registry_.emplace(p.policy_id, p);
        if (!inserted && it->second != p)
            throw Error(ErrorKind::invalid_input, "policy id '" + p.policy_id + "' already names a different policy",
                        p.policy_id);
    }

    [[nodiscard]] const AdaptationPolicy& policy(const std::string& id) const {
        auto it = registry_.find(id);
        if (it == registry_.end()) throw Error(ErrorKind::not_found, "no policy '" + id + "' in pool", id);
        return it->second;
    }

    [[nodiscard]] bool has_policy(const std::string& id) const { return registry_.count(id) != 0; }

    /// Initial entry for a task; only allowed once.
    void seed_entry(const std::string& task_id, const std::string& policy_id, double score) {
        (void)policy(policy_id);
        if (!entries_.emplace(task_id, PoolEntry{policy_id, score}).second)
            throw Error(ErrorKind::invalid_input, "pool already has task '" + task_id + "'", task_id);
    }

    /// Replaces the task's entry only when `score` is strictly higher.
    std::optional<Replacement> offer(const std::string& task_id, const std::string& policy_id, double score) {
        (void)policy(policy_id);
        auto it = entries_.find(task_id);
        if (it == entries_.end()) throw Error(ErrorKind::not_found, "pool has no task '" + task_id + "'", task_id);
        if (!(score > it->second.score)) return std::nullopt;
        Replacement r{task_id, it->second.policy_id, it->second.score, policy_id, score};
        it->second = {policy_id, score};
        return r;
    }

    /// Distinct policy ids currently holding at least one entry, sorted.
    [[nodiscard]] std::vector<std::string> distinct_policies() const {
        std::set<std::string> ids;
        for (const auto& [task, e] : entries_) ids.insert(e.policy_id);
        return {ids.begin(), ids.end()};
    }

    /// Every entry points into the registry and every lineage ends at a seed.
    void check_invariants() const {
        for (const auto& [task, e] : entries_)
            if (!registry_.count(e.policy_id))
                throw Error(ErrorKind::invalid_input, "pool entry '" + task + "' names unknown policy", task);
        for (const auto& [id, p] : registry_) {
            const AdaptationPolicy* cur = &p;
            std::size_t hops = 0;
            while (cur->parent_id) {
                auto it = registry_.find(*cur->parent_id);
                if (it == registry_.end() || ++hops > registry_.size())
                    throw Error(ErrorKind::invalid_input, "policy '" + id + "' has a broken lineage", id);
                cur = &it->second;
            }
            if (cur->provenance != Provenance::seed)
                throw Error(ErrorKind::invalid_input, "policy '" + id + "' does not descend from a seed", id);
        }
    }

    friend bool operator==(const ExpertPool&, const ExpertPool&) = default;

    friend void to_json(Json& j, const ExpertPool& p) {
        Json entries = Json::object();
        for (const auto& [task, e] : p.entries_) entries[task] = Json{{"policy_id", e.policy_id}, {"score", e.score}};
        Json registry = Json::array();
        for (const auto& [id, pol] : p.registry_) registry.push_back(pol);
        j = Json{{"entries", entries}, {"policies", registry}};
    }

    friend void from_json(const Json& j, ExpertPool& p) {
        p = {};
        for (const auto& pol : j.at("policies")) p.register_policy(pol.get<AdaptationPolicy>());
        for (const auto& [task, e] : j.at("entries").items())
            p.seed_entry(task, e.at("policy_id").get<std::string>(), e.at("score").get<double>());
        p.check_invariants();
    }

private:
    std::map<std::string, PoolEntry> entries_;
    std::map<std::string, AdaptationPolicy> registry_;
};

enum class SamplingRule { uniform_distinct, uniform_entry };

NLOHMANN_JSON_SERIALIZE_ENUM(SamplingRule, {{SamplingRule::uniform_distinct, "uniform_distinct"},
                                            {SamplingRule::uniform_entry, "uniform_entry"}})

struct ParentDraw {
    SamplingRule rule = SamplingRule::uniform_distinct;
    std::vector<std::string> candidates;  // the list the index points into
    std::size_t index = 0;

    [[nodiscard]] const std::string& policy_id() const { return candidates.at(index); }
};

inline void to_json(Json& j, const ParentDraw& d) {
    j = Json{{"rule", d.rule}, {"candidates", d.candidates}, {"index", d.index}};
}
inline void from_json(const Json& j, ParentDraw& d) {
    j.at("rule").get_to(d.rule);
    j.at("candidates").get_to(d.candidates);
    j.at("index").get_to(d.index);
}

/// Draws a parent. The default rule is uniform over distinct policies so a
/// policy that leads many tasks is not drawn more often.
inline ParentDraw draw_parent(const ExpertPool& pool, Rng& rng, SamplingRule rule = SamplingRule::uniform_distinct) {
    if (pool.empty()) throw Error(ErrorKind::invalid_input, "cannot sample from an empty pool");
    ParentDraw d;
    d.rule = rule;
    if (rule == SamplingRule::uniform_distinct) {
        d.candidates = pool.distinct_policies();
    } else {
        for (const auto& [task, e] : pool.entries()) d.candidates.push_back(e.policy_id);
    }
    d.index = static_cast<std::size_t>(uniform_index(rng, d.candidates.size()));
    return d;
}

inline const AdaptationPolicy& sample_parent(const ExpertPool& pool, Rng& rng,
                                             SamplingRule rule = SamplingRule::uniform_distinct) {
    return pool.policy(draw_parent(pool, rng, rule).policy_id());
}

}  // namespace ttlforge::metatrain
