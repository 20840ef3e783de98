#pragma once

#include "ttlforge/core/selection.hpp"
#include "ttlforge/util/text.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ttlforge {

/// Header `candidate_id,<task_id>,...`, one row per candidate.
inline void write_score_table_csv(std::ostream& os, const ScoreTable& table) {
    os << "candidate_id";
    for (const auto& t : table.tasks()) os << ',' << t;
    os << '\n';
    for (const auto& [id, row] : table.rows()) {
        os << id;
        for (double v : row) os << ',' << text::shortest(v);
        os << '\n';
    }
}

inline ScoreTable read_score_table_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::parse, "score table CSV: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = text::split(line, ',');
    if (header.empty() || text::trim(header.front()) != "candidate_id")
        throw Error(ErrorKind::parse, "score table CSV: header must start with candidate_id");
    std::vector<std::string> tasks;
    for (std::size_t i = 1; i < header.size(); ++i) tasks.push_back(text::trim(header[i]));
    ScoreTable table(tasks);
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim_view(line).empty()) continue;
        auto cells = text::split(line, ',');
        if (cells.size() != header.size())
            throw Error(ErrorKind::parse, "score table CSV line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " cells");
        std::vector<double> scores;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            double v = 0;
            if (!text::parse_double(cells[i], v))
                throw Error(ErrorKind::parse, "score table CSV line " + std::to_string(line_no) +
                                                  ": bad number '" + cells[i] + "'");
            scores.push_back(v);
        }
        table.set_row(text::trim(cells.front()), std::move(scores));
    }
    return table;
}

inline std::string score_table_to_csv(const ScoreTable& table) {
    std::ostringstream os;
    write_score_table_csv(os, table);
    return os.str();
}

inline ScoreTable score_table_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    return read_score_table_csv(is);
}

}  // namespace ttlforge
