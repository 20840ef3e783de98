#pragma once

#include "ttlforge/core/types.hpp"
#include "ttlforge/util/text.hpp"

#include <span>
#include <string>
#include <vector>

namespace ttlforge {

/// Weighted area under the learning curve.
///
/// Episode k (1-based) carries weight k, so a session that improves late
/// scores higher than one that starts strong and stalls:
///
///     wauc = sum_k k * J_k / (sum_k k * J_max)
///
/// Returns outside [0, max_return] are passed through unclamped; when
/// `warnings` is given, one message per out-of-range episode is appended.
inline double score_wauc(std::span<const double> returns, double max_return,
                         std::vector<std::string>* warnings = nullptr) {
    if (returns.empty()) throw Error(ErrorKind::invalid_input, "score_wauc: empty trajectory list");
    if (!(max_return > 0)) throw Error(ErrorKind::invalid_input, "score_wauc: max_return must be > 0");

    double numerator = 0.0;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        const double w = static_cast<double>(i + 1);
        numerator += w * returns[i];
        weight_sum += w;
        if (warnings && (returns[i] < 0.0 || returns[i] > max_return)) {
            warnings->push_back("episode " + std::to_string(i + 1) + " return " +
                                text::shortest(returns[i]) + " outside [0, " +
                                text::shortest(max_return) + "]");
        }
    }
    return numerator / (weight_sum * max_return);
}

inline double score_wauc(std::span<const Trajectory> trajectories, double max_return,
                         std::vector<std::string>* warnings = nullptr) {
    std::vector<double> returns;
    returns.reserve(trajectories.size());
    for (const auto& t : trajectories) returns.push_back(t.episode_return);
    return score_wauc(std::span<const double>(returns), max_return, warnings);
}

/// Plain mean of raw episode returns ("average score" in reports).
inline double average_score(std::span<const Trajectory> trajectories) {
    if (trajectories.empty()) throw Error(ErrorKind::invalid_input, "average_score: empty trajectory list");
    double sum = 0.0;
    for (const auto& t : trajectories) sum += t.episode_return;
    return sum / static_cast<double>(trajectories.size());
}

}  // namespace ttlforge
