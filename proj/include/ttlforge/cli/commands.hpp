#pragma once

#include "ttlforge/agents/baselines.hpp"
#include "ttlforge/cli/config.hpp"
#include "ttlforge/metatrain/trainer.hpp"

#include <iomanip>
#include <iostream>

namespace ttlforge::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitIntegrity = 3 };

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::config:
    case ErrorKind::malformed_config:
    case ErrorKind::unknown_environment:
    case ErrorKind::invalid_input:
    case ErrorKind::degenerate_column:
    case ErrorKind::not_found: return kExitUsage;
    case ErrorKind::corrupt_log:
    case ErrorKind::sequence_gap: return kExitIntegrity;
    default: return kExitFailure;
    }
}

/// Runs a command body and turns exceptions into a diagnostic plus exit code.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

struct ResolvedPolicy {
    AdaptationPolicy policy;
    bool is_static = false;
    std::string method;  // label used in reports
};

/// Newest pool snapshot of a training run, or nullopt when there is none.
inline std::optional<metatrain::ExpertPool> latest_pool(const store::RunPaths& paths) {
    if (!fs::is_directory(paths.pool_dir())) return std::nullopt;
    std::optional<std::uint64_t> best;
    for (const auto& e : fs::directory_iterator(paths.pool_dir())) {
        if (e.path().extension() != ".json") continue;
        const auto stem = e.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; }))
            continue;
        const auto n = std::stoull(stem);
        if (!best || n > *best) best = n;
    }
    if (!best) return std::nullopt;
    return Json::parse(store::read_text_file(paths.pool_snapshot(*best))).get<metatrain::ExpertPool>();
}

/// Accepts seed, static, pool:ID, or a path to a text file holding a meta-prompt.
inline ResolvedPolicy resolve_policy(const RunConfigFile& cfg, const std::string& source, const fs::path& runs_root) {
    ResolvedPolicy r;
    if (source == "seed") {
        r.policy = agents::make_naive_policy(cfg.seed_policy_text, cfg.seed_policy_id);
        r.method = "naive";
    } else if (source == "static") {
        r.policy = AdaptationPolicy{agents::kStaticPolicyId, "", std::nullopt, 0, Provenance::manual};
        r.is_static = true;
        r.method = "static";
    } else if (source.rfind("pool:", 0) == 0) {
        const auto id = source.substr(5);
        const store::RunPaths paths(runs_root, cfg.run_id);
        auto pool = latest_pool(paths);
        if (!pool) throw Error(ErrorKind::not_found, "no pool snapshot under " + paths.pool_dir().string(), id);
        r.policy = pool->policy(id);
        r.method = id;
    } else {
        if (!fs::is_regular_file(source))
            throw Error(ErrorKind::not_found, "policy file not found: " + source, source);
        const auto text = text::trim(store::read_text_file(source));
        if (text.empty()) throw Error(ErrorKind::invalid_input, "policy file is empty: " + source, source);
        r.policy = agents::make_naive_policy(text, "file:" + fs::path(source).stem().string());
        r.method = r.policy.policy_id;
    }
    return r;
}

inline fs::path unique_run_dir(const fs::path& root, const std::string& base) {
    auto candidate = root / store::sanitize_id(base);
    for (int n = 2; fs::exists(candidate); ++n) candidate = root / store::sanitize_id(base + "-" + std::to_string(n));
    return candidate;
}

inline fs::path runs_root(const RunConfigFile& cfg, const std::string& out) {
    return out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// One session with its sub-log; the summary goes to the run log.
inline Session run_logged_session(const Runtime& rt, store::RunLog& log, const store::RunPaths& paths,
                                  store::ClockMode clock, const TaskSpec& task, const ResolvedPolicy& pol,
                                  std::uint64_t seed, const std::string& role, const std::string& session_id) {
    store::SessionHeader header{session_id, role, pol.method, seed, {role}};
    store::SessionLogWriter writer(paths.session_log(session_id), clock, header, task, pol.policy);
    ttl::SessionOptions opts;
    opts.observer = &writer;
    opts.timeout = std::chrono::seconds(rt.config.train.session_timeout_s);
    ttl::SessionRequest req{task, pol.policy, rt.actor, seed, {role}};
    auto session = ttl::run_ttl(req, pol.is_static ? nullptr : &rt.meta, opts);
    log.append("validation_result", writer.session_summary(session, false));
    return session;
}

// ---------------------------------------------------------------- run-ttl

struct RunTtlOptions {
    std::string config;
    std::string task;
    std::string policy = "seed";
    std::uint64_t seed = 0;
    std::string out;
    std::string label;
};

inline int cmd_run_ttl(const RunTtlOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        Runtime rt(RunConfigFile::load(o.config));
        const auto& task = rt.config.task(o.task);
        const auto root = runs_root(rt.config, o.out);
        auto pol = resolve_policy(rt.config, o.policy, root);
        if (!o.label.empty()) pol.method = o.label;

        const auto dir = unique_run_dir(root, "run-ttl-" + task.task_id + "-" + pol.policy.policy_id + "-s" +
                                                  std::to_string(o.seed));
        store::RunPaths paths(dir.parent_path(), dir.filename().string());
        paths.create();
        store::RunLock lock(paths.lock_file());
        store::RunLog log(paths.run_log(), rt.config.clock, rt.config.fsync);
        auto cfg_payload = rt.logged_config("run-ttl");
        cfg_payload["task_id"] = task.task_id;
        cfg_payload["policy"] = pol.policy;
        cfg_payload["seed"] = o.seed;
        log.append("run_config", std::move(cfg_payload));

        const std::string session_id = "session-" + task.task_id;
        auto session = run_logged_session(rt, log, paths, rt.config.clock, task, pol, o.seed, "run-ttl", session_id);

        out << "Task: " << task.task_id << "  Policy: " << pol.policy.policy_id << "\n";
        for (const auto& t : session.trajectories) {
            out << "Episode " << t.episode_index << ": return " << text::shortest(t.episode_return);
            if (t.terminated == Termination::aborted) out << " (aborted)";
            out << "\n";
        }
        out << "Session log: " << paths.session_log(session_id).string() << "\n";
        out << "W-AUC: " << text::fixed(session.wauc, 4) << "\n";
        return int(kExitOk);
    });
}

// ------------------------------------------------------------------- eval

struct EvalOptions {
    std::string config;
    std::string policy = "seed";
    std::string split;  // empty: the config's eval_tasks
    std::uint64_t seed = 0;
    std::string out;
    std::string csv;  // empty: <run dir>/report/eval.csv
    std::string label;
};

inline const char* const kEvalCsvHeader = "task_id,episode,return,wauc,avg_score";

inline int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        Runtime rt(RunConfigFile::load(o.config));
        const auto task_ids = o.split.empty() ? rt.config.eval_tasks : rt.config.split_tasks(parse_split(o.split));
        if (task_ids.empty())
            throw Error(ErrorKind::config,
                        o.split.empty() ? std::string("no eval_tasks configured and no --split given")
                                        : "split '" + o.split + "' has no tasks");
        const auto root = runs_root(rt.config, o.out);
        auto pol = resolve_policy(rt.config, o.policy, root);
        if (!o.label.empty()) pol.method = o.label;

        const auto dir = unique_run_dir(root, "eval-" + pol.method + "-" + (o.split.empty() ? "eval" : o.split) + "-s" +
                                                  std::to_string(o.seed));
        store::RunPaths paths(dir.parent_path(), dir.filename().string());
        paths.create();
        store::RunLock lock(paths.lock_file());
        store::RunLog log(paths.run_log(), rt.config.clock, rt.config.fsync);
        auto cfg_payload = rt.logged_config("eval");
        cfg_payload["policy"] = pol.policy;
        cfg_payload["method"] = pol.method;
        cfg_payload["tasks"] = task_ids;
        cfg_payload["seed"] = o.seed;
        log.append("run_config", std::move(cfg_payload));

        std::ostringstream csv;
        csv << kEvalCsvHeader << "\n";
        out << "Policy: " << pol.policy.policy_id << "\n";
        for (const auto& id : task_ids) {
            const auto& task = rt.config.task(id);
            auto session = run_logged_session(rt, log, paths, rt.config.clock, task, pol, o.seed, "eval",
                                              "eval-" + task.task_id);
            const double avg = mean(session.returns());
            for (const auto& t : session.trajectories)
                csv << task.task_id << "," << t.episode_index << "," << text::shortest(t.episode_return) << ","
                    << text::shortest(session.wauc) << "," << text::shortest(avg) << "\n";
            out << task.task_id << ": W-AUC " << text::fixed(session.wauc, 4) << ", average score "
                << text::fixed(avg, 4) << "\n";
        }
        const fs::path csv_path = o.csv.empty() ? paths.report_dir() / "eval.csv" : fs::path(o.csv);
        store::write_text_file(csv_path, csv.str());
        out << "CSV: " << csv_path.string() << "\n";
        return int(kExitOk);
    });
}

// ------------------------------------------------------------- meta-train

struct MetaTrainOptions {
    std::string config;
    std::string out;
    std::string run_id;  // overrides the config's run_id
    std::function<void(const metatrain::IterationRecord&)> on_iteration;
};

inline int cmd_meta_train(const MetaTrainOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto cfg = RunConfigFile::load(o.config);
        if (!o.run_id.empty()) cfg.run_id = o.run_id;
        Runtime rt(std::move(cfg));
        if (rt.config.train.train_tasks.empty() || rt.config.train.val_tasks.empty())
            throw Error(ErrorKind::config, "meta-train needs train.train_tasks and train.val_tasks");
        const store::RunPaths paths(runs_root(rt.config, o.out), rt.config.run_id);
        paths.create();
        store::RunLock lock(paths.lock_file());
        store::RunLog log(paths.run_log(), rt.config.clock, rt.config.fsync);
        if (!log.recovery_note().empty()) err << "recovered run log: " << log.recovery_note() << "\n";

        metatrain::TrainContext ctx{rt.tasks, rt.actor, rt.meta, rt.proposer};
        metatrain::TrainerStore ts{paths, &log, rt.config.clock, rt.logged_config("meta-train")};
        metatrain::MetaTrainer trainer(rt.config.train_config(), std::move(ctx), ts);
        trainer.on_iteration = o.on_iteration;
        auto result = trainer.run();
        if (result.resumed) err << "resumed run " << rt.config.run_id << "\n";
        err << "run directory: " << paths.root.string() << "\n";
        out << result.report.to_text();
        return int(kExitOk);
    });
}

// ---------------------------------------------------------- select-expert

struct SelectExpertOptions {
    std::string config;
    std::string out;
    std::string run_id;
    std::string mode;  // empty: the config's selection mode
};

inline int cmd_select_expert(const SelectExpertOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto cfg = RunConfigFile::load(o.config);
        if (!o.run_id.empty()) cfg.run_id = o.run_id;
        const store::RunPaths paths(runs_root(cfg, o.out), cfg.run_id);
        if (!fs::exists(paths.run_log()))
            throw Error(ErrorKind::not_found, "no run log at " + paths.run_log().string(), paths.run_log().string());
        auto rp = store::load_resume_point(paths.run_log());
        if (rp.fresh) throw Error(ErrorKind::not_found, "run " + cfg.run_id + " has no initialised pool", cfg.run_id);
        const auto mode = o.mode.empty() ? cfg.train.selection_mode : parse_selection_mode(o.mode);
        auto table = metatrain::selection_table(cfg.train.val_tasks, cfg.seed_policy_id, rp.seed_scores, rp.records);
        auto report = metatrain::build_selection_report(std::move(table), mode, rp.records);
        const auto name = std::string("selection-") + (mode == SelectionMode::raw ? "raw" : "zscore") + ".txt";
        store::write_text_file(paths.report_dir() / name, report.to_text());
        out << report.to_text();
        return int(kExitOk);
    });
}

// ----------------------------------------------------------------- report

struct ReportOptions {
    std::string runs_dir;
    std::string csv;  // empty: <runs_dir>/report.csv
};

struct ReportCell {
    int sessions = 0;
    double avg_score_sum = 0.0;
    double wauc_sum = 0.0;

    [[nodiscard]] double avg_score() const { return sessions ? avg_score_sum / sessions : 0.0; }
    [[nodiscard]] double wauc() const { return sessions ? wauc_sum / sessions : 0.0; }
};

using ReportTable = std::map<std::string, std::map<std::string, ReportCell>>;  // method -> task -> cell

/// Verifies every log under `runs_dir` and aggregates labelled sessions.
inline ReportTable collect_report(const fs::path& runs_dir, std::ostream& err) {
    ReportTable table;
    std::vector<fs::path> runs;
    for (const auto& e : fs::directory_iterator(runs_dir))
        if (e.is_directory() && fs::exists(e.path() / "run.jsonl")) runs.push_back(e.path());
    std::sort(runs.begin(), runs.end());
    for (const auto& run : runs) {
        auto loaded = store::load_log(run / "run.jsonl");
        if (loaded.torn_tail) err << "warning: " << (run / "run.jsonl").string() << ": " << loaded.note << "\n";
        if (fs::is_directory(run / "sessions")) {
            std::vector<fs::path> logs;
            for (const auto& e : fs::directory_iterator(run / "sessions"))
                if (e.path().extension() == ".jsonl") logs.push_back(e.path());
            std::sort(logs.begin(), logs.end());
            for (const auto& l : logs) {
                auto s = store::load_log(l);
                if (s.torn_tail) err << "warning: " << l.string() << ": " << s.note << "\n";
            }
        }
        for (const auto& rec : loaded.records) {
            if (rec.kind != "validation_result" || !rec.payload.contains("method")) continue;
            auto& cell = table[rec.payload["method"].get<std::string>()][rec.payload.at("task_id").get<std::string>()];
            cell.sessions += 1;
            cell.avg_score_sum += mean(rec.payload.at("returns").get<std::vector<double>>());
            cell.wauc_sum += rec.payload.at("wauc").get<double>();
        }
    }
    return table;
}

inline std::string report_csv(const ReportTable& table) {
    std::ostringstream os;
    os << "method,task_id,sessions,avg_score,wauc\n";
    for (const auto& [method, tasks] : table)
        for (const auto& [task, c] : tasks)
            os << method << "," << task << "," << c.sessions << "," << text::shortest(c.avg_score()) << ","
               << text::shortest(c.wauc()) << "\n";
    return os.str();
}

/// Methods as rows, tasks as columns; one block per metric.
inline std::string report_text(const ReportTable& table) {
    std::set<std::string> task_set;
    for (const auto& [m, tasks] : table)
        for (const auto& [t, c] : tasks) task_set.insert(t);
    const std::vector<std::string> tasks(task_set.begin(), task_set.end());
    std::size_t w0 = 6;
    for (const auto& [m, _] : table) w0 = std::max(w0, m.size());
    std::ostringstream os;
    auto block = [&](const char* title, auto value) {
        os << title << "\n" << std::left << std::setw(static_cast<int>(w0)) << "method";
        for (const auto& t : tasks) os << "  " << std::right << std::setw(static_cast<int>(std::max<std::size_t>(t.size(), 8))) << t;
        os << "\n";
        for (const auto& [m, cells] : table) {
            os << std::left << std::setw(static_cast<int>(w0)) << m;
            for (const auto& t : tasks) {
                auto it = cells.find(t);
                os << "  " << std::right << std::setw(static_cast<int>(std::max<std::size_t>(t.size(), 8)))
                   << (it == cells.end() ? std::string("-") : text::fixed(value(it->second), 4));
            }
            os << "\n";
        }
    };
    block("Average score", [](const ReportCell& c) { return c.avg_score(); });
    os << "\n";
    block("W-AUC", [](const ReportCell& c) { return c.wauc(); });
    return os.str();
}

inline int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const fs::path dir(o.runs_dir);
        if (!fs::is_directory(dir)) throw Error(ErrorKind::not_found, "runs directory not found: " + o.runs_dir, o.runs_dir);
        auto table = collect_report(dir, err);
        if (table.empty()) {
            out << "no runs found in " << dir.string() << "\n";
            return int(kExitOk);
        }
        const fs::path csv_path = o.csv.empty() ? dir / "report.csv" : fs::path(o.csv);
        store::write_text_file(csv_path, report_csv(table));
        out << report_text(table) << "\nCSV: " << csv_path.string() << "\n";
        return int(kExitOk);
    });
}

}  // namespace ttlforge::cli
