#pragma once

#include "ttlforge/store/run_log.hpp"
#include "ttlforge/ttl/session.hpp"

namespace ttlforge::store {

struct SessionHeader {
    std::string session_id;
    std::string role;    // init, parent, local, global, run-ttl, eval
    std::string method;  // report grouping label; empty for training sessions
    std::uint64_t run_seed = 0;
    std::vector<std::string> tags;
};

/// Writes one session's events to its own hash-chained sub-log. The file is
/// recreated, so a replayed session overwrites a half-written one.
class SessionLogWriter final : public ttl::SessionObserver {
public:
    SessionLogWriter(const std::filesystem::path& path, ClockMode clock, SessionHeader header, const TaskSpec& task,
                     const AdaptationPolicy& policy, bool sync_each_record = false)
        : header_(std::move(header)), log_(fresh(path), clock, sync_each_record) {
        log_.append("run_config", Json{{"session_id", header_.session_id},
                                       {"role", header_.role},
                                       {"method", header_.method},
                                       {"run_seed", header_.run_seed},
                                       {"tags", header_.tags},
                                       {"task", task},
                                       {"policy", policy}});
    }

    void episode_start(int episode, const std::string& actor_prompt, const std::string& guidance) override {
        log_.append("episode_start", Json{{"episode", episode}, {"actor_prompt", actor_prompt}, {"guidance", guidance}});
    }

    void step(int episode, const Step& s, const agents::ActResult& a) override {
        log_.append("step", Json{{"episode", episode},
                                 {"step", s},
                                 {"raw_output", a.raw},
                                 {"used_noop", a.used_noop},
                                 {"truncated", a.truncated}});
    }

    void episode_end(const Trajectory& t, const std::string& error) override {
        Json p{{"episode", t.episode_index},
               {"episode_return", t.episode_return},
               {"terminated", t.terminated},
               {"steps", t.steps.size()}};
        if (!error.empty()) p["error"] = error;
        log_.append("episode_end", std::move(p));
    }

    void adapted(int after_episode, const agents::AdaptResult& r) override {
        Json p{{"after_episode", after_episode},
               {"guidance", r.guidance},
               {"raw_outputs", r.raw_outputs},
               {"fell_back", r.fell_back},
               {"calls", r.calls}};
        if (r.output) p["think"] = r.output->think;
        if (!r.note.empty()) p["note"] = r.note;
        log_.append("adapt", std::move(p));
    }

    void warning(const std::string& w) override { warnings_.push_back(w); }

    void session_end(const Session& s) override {
        log_.append("validation_result", session_summary(s, true));
    }

    /// Terminal payload. The run log repeats it without the full session so
    /// reports need only run.jsonl.
    [[nodiscard]] Json session_summary(const Session& s, bool include_session) const {
        Json p{{"session_id", header_.session_id},
               {"role", header_.role},
               {"task_id", s.task_id},
               {"policy_id", s.policy_id},
               {"wauc", s.wauc},
               {"returns", s.returns()}};
        if (include_session) p["session"] = s;
        if (!header_.method.empty()) p["method"] = header_.method;
        if (!warnings_.empty()) p["warnings"] = warnings_;
        return p;
    }

    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    [[nodiscard]] const RunLog& log() const noexcept { return log_; }

private:
    static const std::filesystem::path& fresh(const std::filesystem::path& path) {
        std::error_code ec;
        std::filesystem::remove(path, ec);
        return path;
    }

    SessionHeader header_;
    RunLog log_;
    std::vector<std::string> warnings_;
};

}  // namespace ttlforge::store
