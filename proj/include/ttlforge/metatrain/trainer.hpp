#pragma once

#include "ttlforge/agents/proposer.hpp"
#include "ttlforge/metatrain/report.hpp"
#include "ttlforge/store/resume.hpp"
#include "ttlforge/store/run_dir.hpp"
#include "ttlforge/store/session_log.hpp"
#include "ttlforge/ttl/session.hpp"

#include <future>

namespace ttlforge::metatrain {

struct TrainContext {
    std::map<std::string, TaskSpec> tasks;
    agents::ActorConfig actor;
    agents::MetaAgentConfig meta;
    agents::ProposerConfig proposer;
    env::EnvFactory env_factory = env::make_env;
};

/// Where a trainer persists its run; without one it keeps state in memory.
struct TrainerStore {
    store::RunPaths paths;
    store::RunLog* log = nullptr;
    store::ClockMode clock = store::ClockMode::wall;
    Json run_config = Json::object();
};

struct TrainingResult {
    ExpertPool pool;
    AdaptationPolicy selected;
    std::vector<IterationRecord> records;
    SelectionReport report;
    int sessions_run = 0;
    bool resumed = false;
};

inline std::string candidate_id_for(int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cand-%04d", iteration);
    return buf;
}

inline std::string iteration_tag(int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%04d", iteration);
    return buf;
}

class MetaTrainer {
public:
    MetaTrainer(TrainConfig config, TrainContext context, std::optional<TrainerStore> store = std::nullopt)
        : cfg_(std::move(config)), ctx_(std::move(context)), store_(std::move(store)) {
        cfg_.validate();
        for (const auto& id : cfg_.train_tasks) (void)task(id);
        for (const auto& id : cfg_.val_tasks) (void)task(id);
        if (store_ && !store_->log) throw Error(ErrorKind::config, "trainer store has no run log");
    }

    /// Called after each iteration boundary is durable.
    std::function<void(const IterationRecord&)> on_iteration;

    [[nodiscard]] const TrainConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const ExpertPool& pool() const noexcept { return pool_; }
    [[nodiscard]] const std::vector<IterationRecord>& records() const noexcept { return records_; }
    [[nodiscard]] int sessions_run() const noexcept { return sessions_run_; }
    [[nodiscard]] const std::map<std::string, double>& seed_scores() const noexcept { return seed_scores_; }

    const TaskSpec& task(const std::string& id) const {
        auto it = ctx_.tasks.find(id);
        if (it == ctx_.tasks.end()) throw Error(ErrorKind::config, "unknown task id '" + id + "'", id);
        return it->second;
    }

    /// Scores the seed policy on every validation task. Errors propagate.
    const ExpertPool& init_pool() {
        pool_ = {};
        seed_scores_.clear();
        records_.clear();
        sessions_run_ = 0;
        pool_.register_policy(cfg_.seed_policy);
        for (const auto& h : cfg_.val_tasks) {
            const auto& t = task(h);
            auto run = run_session(t, cfg_.seed_policy, validation_seed(h), "init-" + h, "init", false);
            log_validation(run.summary);
            pool_.seed_entry(h, cfg_.seed_policy.policy_id, run.session.wauc);
            seed_scores_[h] = run.session.wauc;
        }
        if (store_) {
            append("pool_update", Json{{"event", "init"},
                                       {"iteration", 0},
                                       {"snapshot", snapshots_},
                                       {"pool", pool_},
                                       {"seed_scores", seed_scores_},
                                       {"sessions_run", sessions_run_}});
            write_snapshot();
        }
        return pool_;
    }

    /// One outer-loop iteration: parent session, proposal, local gate, and
    /// global validation with pool updates.
    IterationRecord train_step(int t) {
        if (pool_.empty()) throw Error(ErrorKind::invalid_input, "pool is not initialised");
        if (t < 1 || t > cfg_.iterations)
            throw Error(ErrorKind::invalid_input, "iteration " + std::to_string(t) + " outside budget");
        const int sessions_before = sessions_run_;
        IterationRecord rec;
        rec.iteration = t;
        Rng rng(derive_seed(cfg_.seed, {0x17E5u, static_cast<std::uint64_t>(t)}));
        rec.parent_draw = draw_parent(pool_, rng, cfg_.sampling);
        rec.parent_id = rec.parent_draw.policy_id();
        rec.task_id = cfg_.train_tasks[uniform_index(rng, cfg_.train_tasks.size())];
        const AdaptationPolicy parent = pool_.policy(rec.parent_id);
        const TaskSpec& g = task(rec.task_id);
        const std::string tag = iteration_tag(t);

        const std::uint64_t parent_seed = derive_seed(cfg_.seed, {0xA11u, static_cast<std::uint64_t>(t)});
        auto parent_run = run_session(g, parent, parent_seed, tag + "-parent-" + g.task_id, "parent", false);
        log_validation(parent_run.summary);
        rec.parent_score = parent_run.session.wauc;

        const std::string cand_id = candidate_id_for(t);
        auto proposal = agents::try_propose(
            ctx_.proposer, parent, parent_run.session, g.max_return, cand_id, t,
            static_cast<std::int64_t>(derive_seed(cfg_.seed, {0xD44u, static_cast<std::uint64_t>(t)}) >> 1));
        Json ppayload{{"iteration", t},
                      {"parent_id", parent.policy_id},
                      {"raw_outputs", proposal.raw_outputs},
                      {"calls", proposal.calls}};
        ppayload["candidate"] = proposal.policy ? Json(*proposal.policy) : Json(nullptr);
        if (!proposal.error.empty()) ppayload["error"] = proposal.error;
        append("proposal", std::move(ppayload));

        if (!proposal.policy) {
            rec.outcome = GateOutcome::proposal_failed;
            rec.proposal_error = proposal.error;
            return finish(std::move(rec), sessions_before);
        }
        const AdaptationPolicy& cand = *proposal.policy;
        rec.candidate_id = cand.policy_id;

        const std::uint64_t local_seed =
            cfg_.reuse_task_seed ? parent_seed : derive_seed(cfg_.seed, {0xB22u, static_cast<std::uint64_t>(t)});
        auto local_run = run_session(g, cand, local_seed, tag + "-local-" + g.task_id, "local", false);
        log_validation(local_run.summary);
        rec.candidate_score = local_run.session.wauc;
        if (!(*rec.candidate_score > rec.parent_score)) {
            rec.outcome = GateOutcome::rejected_local;
            return finish(std::move(rec), sessions_before);
        }

        rec.outcome = GateOutcome::validated;
        pool_.register_policy(cand);
        auto runs = run_global_validation(cand, tag);
        Json replaced = Json::array();
        for (std::size_t i = 0; i < cfg_.val_tasks.size(); ++i) {
            const auto& h = cfg_.val_tasks[i];
            log_validation(runs[i].summary);
            ValidationScore v;
            v.task_id = h;
            v.score = runs[i].session.wauc;
            v.error = runs[i].error;
            if (auto r = pool_.offer(h, cand.policy_id, v.score)) {
                v.replaced = true;
                v.previous = PoolEntry{r->previous_policy, r->previous_score};
                replaced.push_back(Json{{"task_id", h},
                                        {"previous_policy", r->previous_policy},
                                        {"previous_score", r->previous_score},
                                        {"policy_id", r->policy_id},
                                        {"score", r->score}});
            }
            rec.validation.push_back(std::move(v));
        }
        if (store_ && !replaced.empty()) {
            append("pool_update", Json{{"event", "replace"},
                                       {"iteration", t},
                                       {"snapshot", snapshots_},
                                       {"replaced", replaced},
                                       {"pool", pool_}});
            write_snapshot();
        }
        return finish(std::move(rec), sessions_before);
    }

    /// Full run: initialise (or resume), iterate to the budget, select.
    TrainingResult run() {
        TrainingResult result;
        int next = 0;
        if (store_) {
            auto& log = *store_->log;
            const auto& recs = log.records();
            if (recs.empty()) {
                append("run_config", store_->run_config);
            } else if (recs.front().kind != "run_config" || recs.front().payload != store_->run_config) {
                throw Error(ErrorKind::config,
                            "run directory holds a different configuration; choose another run id",
                            log.path().string());
            }
            auto rp = store::load_resume_point(log.records());
            log.truncate_after(rp.boundary_sequence);
            if (!rp.fresh) {
                result.resumed = true;
                pool_ = std::move(rp.pool);
                seed_scores_ = std::move(rp.seed_scores);
                records_ = std::move(rp.records);
                sessions_run_ = rp.sessions_run;
                snapshots_ = rp.snapshots;
                next = rp.next_iteration;
            }
        }
        if (next == 0) {
            init_pool();
            next = 1;
        }
        for (int t = next; t <= cfg_.iterations; ++t) train_step(t);

        result.report = select();
        result.pool = pool_;
        result.selected = pool_.policy(result.report.selected_id);
        result.records = records_;
        result.sessions_run = sessions_run_;
        return result;
    }

    /// Final expert selection over the seed plus every validated candidate.
    SelectionReport select(std::optional<SelectionMode> mode = std::nullopt) {
        auto table = selection_table(cfg_.val_tasks, cfg_.seed_policy.policy_id, seed_scores_, records_);
        auto report = build_selection_report(std::move(table), mode.value_or(cfg_.selection_mode), records_);
        if (store_) {
            Json payload = report.to_json();
            payload["selected_policy"] = pool_.policy(report.selected_id);
            append("selection", std::move(payload));
            store::write_text_file(store_->paths.report_dir() / "selection.txt", report.to_text());
            store::write_text_file(store_->paths.report_dir() / "scores.csv", score_table_to_csv(report.table));
            store::write_text_file(store_->paths.report_dir() / "selection.json", report.to_json().dump(2) + "\n");
        }
        return report;
    }

private:
    struct SessionRun {
        Session session;
        Json summary;
        std::string error;
    };

    std::uint64_t validation_seed(const std::string& task_id) const {
        return derive_seed(cfg_.seed, {0xC33u, fnv1a(task_id)});
    }

    SessionRun run_session(const TaskSpec& t, const AdaptationPolicy& policy, std::uint64_t seed,
                           const std::string& session_id, const std::string& role, bool score_failures) const {
        ttl::SessionRequest req{t, policy, ctx_.actor, seed, {role}};
        ttl::SessionOptions opts;
        opts.timeout = cfg_.session_timeout;
        opts.env_factory = ctx_.env_factory;
        std::optional<store::SessionLogWriter> writer;
        store::SessionHeader header{session_id, role, "", seed, {role}};
        SessionRun out;
        try {
            if (store_) {
                writer.emplace(store_->paths.session_log(session_id), store_->clock, header, t, policy);
                opts.observer = &*writer;
            }
            out.session = ttl::run_ttl(req, &ctx_.meta, opts);
        } catch (const std::exception& e) {
            if (!score_failures) throw;
            out.session = Session{t.task_id, policy.policy_id, {}, {}, 0.0};
            out.error = e.what();
        }
        out.summary = Json{{"session_id", session_id},
                           {"role", role},
                           {"task_id", t.task_id},
                           {"policy_id", policy.policy_id},
                           {"run_seed", seed},
                           {"wauc", out.session.wauc},
                           {"returns", out.session.returns()}};
        if (writer && !writer->warnings().empty()) out.summary["warnings"] = writer->warnings();
        if (!out.error.empty()) out.summary["error"] = out.error;
        return out;
    }

    std::vector<SessionRun> run_global_validation(const AdaptationPolicy& cand, const std::string& tag) {
        const auto n = cfg_.val_tasks.size();
        std::vector<SessionRun> runs(n);
        auto one = [&](std::size_t i) {
            const auto& h = cfg_.val_tasks[i];
            return run_session(task(h), cand, validation_seed(h), tag + "-global-" + h, "global", true);
        };
        if (cfg_.validation_workers <= 1) {
            for (std::size_t i = 0; i < n; ++i) runs[i] = one(i);
            return runs;
        }
        const auto workers = static_cast<std::size_t>(cfg_.validation_workers);
        for (std::size_t start = 0; start < n; start += workers) {
            std::vector<std::future<SessionRun>> batch;
            for (std::size_t i = start; i < std::min(n, start + workers); ++i)
                batch.push_back(std::async(std::launch::async, one, i));
            for (std::size_t i = 0; i < batch.size(); ++i) runs[start + i] = batch[i].get();
        }
        return runs;
    }

    void log_validation(const Json& summary) {
        ++sessions_run_;
        append("validation_result", summary);
    }

    IterationRecord finish(IterationRecord rec, int sessions_before) {
        rec.sessions = sessions_run_ - sessions_before;
        records_.push_back(rec);
        if (store_)
            append("iteration", Json{{"record", rec}, {"pool", pool_}, {"sessions_run", sessions_run_}});
        if (on_iteration) on_iteration(rec);
        return rec;
    }

    void append(const std::string& kind, Json payload) {
        if (store_) store_->log->append(kind, std::move(payload));
    }

    void write_snapshot() {
        store::write_text_file(store_->paths.pool_snapshot(snapshots_), Json(pool_).dump(2) + "\n");
        ++snapshots_;
    }

    TrainConfig cfg_;
    TrainContext ctx_;
    std::optional<TrainerStore> store_;
    ExpertPool pool_;
    std::map<std::string, double> seed_scores_;
    std::vector<IterationRecord> records_;
    int sessions_run_ = 0;
    std::uint64_t snapshots_ = 0;
};

}  // namespace ttlforge::metatrain
