#pragma once

#include "ttlforge/core/types.hpp"
#include "ttlforge/util/text.hpp"

#include <span>
#include <string>
#include <vector>

namespace ttlforge::agents {

namespace detail {

inline std::string episode_header(int k) { return "=== Episode " + std::to_string(k) + " ===\n"; }

inline std::string score_line(const Trajectory& t, double max_return) {
    return "Final score: " + text::shortest(t.episode_return) + "/" + text::shortest(max_return) + " (" +
           std::string(to_string(t.terminated)) + ")\n=== End of episode " + std::to_string(t.episode_index) + " ===\n";
}

inline std::string step_block(const Step& s) {
    return "[step " + std::to_string(s.index + 1) + "]\nObservation: " + s.observation + "\nAction: " + s.action +
           "\nReward: " + text::shortest(s.reward) + "\n";
}

inline std::string omitted(std::size_t n) { return "[" + std::to_string(n) + " steps omitted]\n"; }

struct EpisodeText {
    std::string head;  // header plus optional prelude (e.g. the actor prompt)
    std::vector<std::string> steps;
    std::string tail;  // score line; always kept
    // Render state: steps [0, keep_front) and [size - keep_back, size) are shown.
    std::size_t keep_front = 0;
    std::size_t keep_back = 0;

    [[nodiscard]] std::string render() const {
        std::string out = head;
        if (keep_front + keep_back >= steps.size()) {
            for (const auto& s : steps) out += s;
        } else {
            for (std::size_t i = 0; i < keep_front; ++i) out += steps[i];
            out += omitted(steps.size() - keep_front - keep_back);
            for (std::size_t i = steps.size() - keep_back; i < steps.size(); ++i) out += steps[i];
        }
        return out + tail;
    }
};

}  // namespace detail

/// Serializes episodes oldest first, latest last. When the text exceeds
/// `char_budget` (0 = unlimited), whole earliest episodes are reduced to
/// their score line first, then the middle of the oldest episode still
/// shown in full is cut. Every episode's score line survives.
inline std::string serialize_history(std::span<const Trajectory> history, double max_return, std::size_t char_budget = 0,
                                     std::span<const std::string> preludes = {}) {
    std::vector<detail::EpisodeText> eps;
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& t = history[i];
        detail::EpisodeText e;
        e.head = detail::episode_header(t.episode_index);
        if (i < preludes.size()) e.head += preludes[i];
        for (const auto& s : t.steps) e.steps.push_back(detail::step_block(s));
        e.tail = detail::score_line(t, max_return);
        e.keep_front = e.steps.size();
        eps.push_back(std::move(e));
    }
    auto render_all = [&] {
        std::string out;
        for (const auto& e : eps) out += e.render();
        return out;
    };
    std::string out = render_all();
    if (char_budget == 0 || out.size() <= char_budget) return out;

    auto total = [&] {
        std::size_t n = 0;
        for (const auto& e : eps) n += e.render().size();
        return n;
    };
    // Drop whole earliest episodes (keep the latest).
    std::size_t oldest_full = 0;
    for (; oldest_full + 1 < eps.size() && total() > char_budget; ++oldest_full) {
        eps[oldest_full].keep_front = 0;
        eps[oldest_full].keep_back = 0;
    }
    if (total() <= char_budget) return render_all();

    // Cut the middle of the oldest fully-shown episode, keeping as many
    // steps from both ends as fit.
    auto& e = eps[oldest_full];
    e.keep_front = 0;
    e.keep_back = 0;
    bool front_turn = true;
    while (e.keep_front + e.keep_back < e.steps.size()) {
        auto& counter = front_turn ? e.keep_front : e.keep_back;
        ++counter;
        if (total() > char_budget) {
            --counter;
            break;
        }
        front_turn = !front_turn;
    }
    return render_all();
}

}  // namespace ttlforge::agents
