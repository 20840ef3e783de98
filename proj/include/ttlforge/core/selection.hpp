#pragma once

#include "ttlforge/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace ttlforge {

/// Candidate x task score matrix. Columns keep insertion order; rows are
/// keyed (and iterated) by candidate id.
class ScoreTable {
public:
    ScoreTable() = default;
    explicit ScoreTable(std::vector<std::string> task_ids) : tasks_(std::move(task_ids)) {
        for (std::size_t i = 0; i < tasks_.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (tasks_[i] == tasks_[j])
                    throw Error(ErrorKind::invalid_input, "duplicate task column '" + tasks_[i] + "'",
                                tasks_[i]);
    }

    [[nodiscard]] const std::vector<std::string>& tasks() const noexcept { return tasks_; }
    [[nodiscard]] const std::map<std::string, std::vector<double>>& rows() const noexcept { return rows_; }
    [[nodiscard]] bool empty() const noexcept { return rows_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

    /// Scores must be given in column order.
    void set_row(const std::string& candidate_id, std::vector<double> scores) {
        if (scores.size() != tasks_.size())
            throw Error(ErrorKind::invalid_input,
                        "row '" + candidate_id + "' has " + std::to_string(scores.size()) +
                            " scores, table has " + std::to_string(tasks_.size()) + " tasks",
                        candidate_id);
        rows_[candidate_id] = std::move(scores);
    }

    void set_row(const std::string& candidate_id, const std::map<std::string, double>& by_task) {
        std::vector<double> scores;
        scores.reserve(tasks_.size());
        for (const auto& t : tasks_) {
            auto it = by_task.find(t);
            if (it == by_task.end())
                throw Error(ErrorKind::invalid_input, "row '" + candidate_id + "' lacks task '" + t + "'",
                            candidate_id);
            scores.push_back(it->second);
        }
        if (by_task.size() != tasks_.size())
            throw Error(ErrorKind::invalid_input, "row '" + candidate_id + "' has extra task columns",
                        candidate_id);
        rows_[candidate_id] = std::move(scores);
    }

    [[nodiscard]] double at(const std::string& candidate_id, const std::string& task_id) const {
        auto row = rows_.find(candidate_id);
        if (row == rows_.end()) throw Error(ErrorKind::not_found, "no candidate '" + candidate_id + "'");
        auto col = std::find(tasks_.begin(), tasks_.end(), task_id);
        if (col == tasks_.end()) throw Error(ErrorKind::not_found, "no task '" + task_id + "'");
        return row->second[static_cast<std::size_t>(col - tasks_.begin())];
    }

    friend bool operator==(const ScoreTable&, const ScoreTable&) = default;

private:
    std::vector<std::string> tasks_;
    std::map<std::string, std::vector<double>> rows_;
};

struct ColumnStats {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Per-task mean and population standard deviation.
inline std::map<std::string, ColumnStats> column_stats(const ScoreTable& table) {
    if (table.empty()) throw Error(ErrorKind::invalid_input, "column_stats: empty table");
    std::map<std::string, ColumnStats> out;
    const double n = static_cast<double>(table.size());
    for (std::size_t c = 0; c < table.tasks().size(); ++c) {
        double sum = 0.0;
        for (const auto& [_, row] : table.rows()) sum += row[c];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& [_, row] : table.rows()) ss += (row[c] - mean) * (row[c] - mean);
        out[table.tasks()[c]] = ColumnStats{mean, std::sqrt(ss / n)};
    }
    return out;
}

/// z = (s - mu) / sigma per cell, with externally supplied column statistics.
inline ScoreTable zscore_normalize(const ScoreTable& table, const std::map<std::string, ColumnStats>& stats) {
    ScoreTable out(table.tasks());
    for (const auto& task : table.tasks()) {
        auto it = stats.find(task);
        if (it == stats.end())
            throw Error(ErrorKind::invalid_input, "no statistics for task '" + task + "'", task);
        if (!(it->second.stddev > 0.0))
            throw Error(ErrorKind::degenerate_column,
                        "task '" + task + "' has zero score variance across candidates; "
                        "drop the column or use raw selection",
                        task);
    }
    for (const auto& [id, row] : table.rows()) {
        std::vector<double> z(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto& s = stats.at(table.tasks()[c]);
            z[c] = (row[c] - s.mean) / s.stddev;
        }
        out.set_row(id, std::move(z));
    }
    return out;
}

inline ScoreTable zscore_normalize(const ScoreTable& table) {
    if (table.size() < 2)
        throw Error(ErrorKind::degenerate_column,
                    "z-score normalization needs at least 2 candidates per task, got " +
                        std::to_string(table.size()),
                    table.tasks().empty() ? std::string{} : table.tasks().front());
    return zscore_normalize(table, column_stats(table));
}

struct RankedCandidate {
    std::string candidate_id;
    double mean = 0.0;
};

/// Candidates sorted by descending row mean, ties by ascending id.
inline std::vector<RankedCandidate> rank_by_mean(const ScoreTable& table) {
    if (table.empty() || table.tasks().empty())
        throw Error(ErrorKind::invalid_input, "cannot rank an empty score table");
    std::vector<RankedCandidate> ranked;
    for (const auto& [id, row] : table.rows()) {
        double sum = 0.0;
        for (double v : row) sum += v;
        ranked.push_back({id, sum / static_cast<double>(row.size())});
    }
    // rows() iterates in id order, so a stable sort keeps the lexicographic tie-break.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedCandidate& a, const RankedCandidate& b) { return a.mean > b.mean; });
    return ranked;
}

inline std::vector<RankedCandidate> rank_by_zscore(const ScoreTable& table) {
    return rank_by_mean(zscore_normalize(table));
}

inline std::string select_expert_raw(const ScoreTable& table) { return rank_by_mean(table).front().candidate_id; }

inline std::string select_expert_zscore(const ScoreTable& table) {
    return rank_by_zscore(table).front().candidate_id;
}

enum class SelectionMode { raw, zscore };

NLOHMANN_JSON_SERIALIZE_ENUM(SelectionMode, {{SelectionMode::raw, "raw"}, {SelectionMode::zscore, "zscore"}})

inline SelectionMode parse_selection_mode(std::string_view s) {
    if (s == "raw") return SelectionMode::raw;
    if (s == "zscore") return SelectionMode::zscore;
    throw Error(ErrorKind::config, "unknown selection mode '" + std::string(s) + "' (expected raw|zscore)");
}

inline std::string select_expert(const ScoreTable& table, SelectionMode mode) {
    return mode == SelectionMode::raw ? select_expert_raw(table) : select_expert_zscore(table);
}

}  // namespace ttlforge
