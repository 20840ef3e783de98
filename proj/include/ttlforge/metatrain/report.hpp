#pragma once

#include "ttlforge/core/score_table_csv.hpp"
#include "ttlforge/metatrain/records.hpp"
#include "ttlforge/util/text.hpp"

#include <sstream>

namespace ttlforge::metatrain {

struct SelectionReport {
    SelectionMode mode = SelectionMode::raw;
    std::string selected_id;
    ScoreTable table;
    std::vector<RankedCandidate> raw_ranking;
    std::vector<RankedCandidate> zscore_ranking;
    std::string zscore_unavailable;  // reason, when z-scores are degenerate
    GateFunnel funnel;

    [[nodiscard]] Json to_json() const {
        auto ranking = [](const std::vector<RankedCandidate>& r) {
            Json a = Json::array();
            for (const auto& c : r) a.push_back(Json{{"candidate_id", c.candidate_id}, {"mean", c.mean}});
            return a;
        };
        Json j{{"mode", mode},
               {"selected_id", selected_id},
               {"score_table_csv", score_table_to_csv(table)},
               {"raw_ranking", ranking(raw_ranking)},
               {"zscore_ranking", ranking(zscore_ranking)},
               {"funnel", funnel}};
        if (!zscore_unavailable.empty()) j["zscore_unavailable"] = zscore_unavailable;
        return j;
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        os << "Selection mode: " << (mode == SelectionMode::raw ? "raw" : "zscore") << "\n";
        os << "Selected policy: " << selected_id << "\n\n";
        os << "Validation W-AUC\n";
        os << "candidate";
        for (const auto& t : table.tasks()) os << "  " << t;
        os << "  mean\n";
        for (const auto& [id, row] : table.rows()) {
            os << id;
            double sum = 0.0;
            for (double v : row) {
                os << "  " << text::fixed(v, 4);
                sum += v;
            }
            os << "  " << text::fixed(sum / static_cast<double>(row.size()), 4) << "\n";
        }
        auto print = [&](const char* title, const std::vector<RankedCandidate>& r) {
            os << "\n" << title << "\n";
            for (std::size_t i = 0; i < r.size(); ++i)
                os << (i + 1) << ". " << r[i].candidate_id << "  " << text::fixed(r[i].mean, 4) << "\n";
        };
        print("Raw ranking (mean W-AUC)", raw_ranking);
        if (zscore_unavailable.empty())
            print("Z-score ranking (mean z)", zscore_ranking);
        else
            os << "\nZ-score ranking unavailable: " << zscore_unavailable << "\n";
        os << "\nGate funnel\n";
        os << "proposals: " << funnel.proposals << "\n";
        os << "proposal failures: " << funnel.proposal_failures << "\n";
        os << "rejected by local gate: " << funnel.rejected_local << "\n";
        os << "locally validated: " << funnel.locally_validated << "\n";
        os << "pool improvements: " << funnel.pool_improvements << "\n";
        return os.str();
    }
};

/// Rows: the seed plus every candidate that reached global validation.
inline ScoreTable selection_table(const std::vector<std::string>& val_tasks, const std::string& seed_id,
                                  const std::map<std::string, double>& seed_scores,
                                  std::span<const IterationRecord> records) {
    ScoreTable table(val_tasks);
    table.set_row(seed_id, seed_scores);
    for (const auto& r : records) {
        if (r.outcome != GateOutcome::validated) continue;
        std::map<std::string, double> row;
        for (const auto& v : r.validation) row[v.task_id] = v.score;
        table.set_row(*r.candidate_id, row);
    }
    return table;
}

/// Ranks both ways. The configured mode must succeed; the other ranking is
/// reported as unavailable when its z-scores are degenerate.
inline SelectionReport build_selection_report(ScoreTable table, SelectionMode mode,
                                              std::span<const IterationRecord> records) {
    SelectionReport rep;
    rep.mode = mode;
    rep.funnel = gate_funnel(records);
    rep.raw_ranking = rank_by_mean(table);
    try {
        rep.zscore_ranking = rank_by_zscore(table);
    } catch (const Error& e) {
        if (mode == SelectionMode::zscore || e.kind() != ErrorKind::degenerate_column) {
            if (e.kind() == ErrorKind::degenerate_column)
                throw Error(ErrorKind::degenerate_column,
                            std::string(e.what()) +
                                "; z-score selection needs at least two candidates with differing scores on every "
                                "validation task (run more iterations or use --mode raw)",
                            e.subject());
            throw;
        }
        rep.zscore_unavailable = e.what();
    }
    rep.selected_id = mode == SelectionMode::raw ? rep.raw_ranking.front().candidate_id
                                                 : rep.zscore_ranking.front().candidate_id;
    rep.table = std::move(table);
    return rep;
}

}  // namespace ttlforge::metatrain
