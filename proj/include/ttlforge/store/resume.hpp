#pragma once

#include "ttlforge/metatrain/records.hpp"
#include "ttlforge/store/run_log.hpp"

namespace ttlforge::store {

/// Training state at the last complete boundary of a run log.
struct ResumePoint {
    bool fresh = true;                 // no init boundary yet
    std::uint64_t boundary_sequence = 0;  // last record to keep (0 keeps only run_config, if any)
    int next_iteration = 0;            // 0 means the pool still needs initialising
    metatrain::ExpertPool pool;
    std::map<std::string, double> seed_scores;
    std::vector<metatrain::IterationRecord> records;
    int sessions_run = 0;
    std::uint64_t snapshots = 0;
    bool has_selection = false;
};

/// Walks the records; an iteration without its terminal `iteration` record
/// is dropped and will be replayed.
inline ResumePoint load_resume_point(const std::vector<RunLogRecord>& log) {
    ResumePoint rp;
    if (!log.empty() && log.front().kind == "run_config") rp.boundary_sequence = 1;
    std::uint64_t snapshots = 0;
    for (const auto& rec : log) {
        if (rec.kind == "pool_update") {
            ++snapshots;
            if (rec.payload.value("event", std::string{}) == "init") {
                rp.fresh = false;
                rp.next_iteration = 1;
                rp.pool = rec.payload.at("pool").get<metatrain::ExpertPool>();
                rp.seed_scores = rec.payload.at("seed_scores").get<std::map<std::string, double>>();
                rp.sessions_run = rec.payload.at("sessions_run").get<int>();
                rp.boundary_sequence = rec.sequence;
                rp.snapshots = snapshots;
            }
        } else if (rec.kind == "iteration") {
            auto r = rec.payload.at("record").get<metatrain::IterationRecord>();
            if (rp.fresh || r.iteration != rp.next_iteration)
                throw Error(ErrorKind::corrupt_log,
                            "iteration record " + std::to_string(r.iteration) + " out of order at sequence " +
                                std::to_string(rec.sequence));
            rp.pool = rec.payload.at("pool").get<metatrain::ExpertPool>();
            rp.sessions_run = rec.payload.at("sessions_run").get<int>();
            rp.records.push_back(std::move(r));
            rp.next_iteration += 1;
            rp.boundary_sequence = rec.sequence;
            rp.snapshots = snapshots;
        } else if (rec.kind == "selection") {
            rp.has_selection = true;
        }
    }
    return rp;
}

inline ResumePoint load_resume_point(const std::filesystem::path& run_log) {
    auto loaded = load_log(run_log);
    return load_resume_point(loaded.records);
}

}  // namespace ttlforge::store
