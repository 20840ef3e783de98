#pragma once

#include "ttlforge/core/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ttlforge::env {

struct Observation {
    std::string text;
    bool done = false;
    double reward = 0.0;
    /// True when `done` was forced by the step budget rather than the task.
    bool truncated = false;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Episodic environment. The public reset/step pair enforces the episode
/// protocol (no step after done, at most `horizon()` steps); subclasses only
/// implement the transition itself.
class Environment {
public:
    Environment(double max_return, int horizon) : max_return_(max_return), horizon_(horizon) {}
    virtual ~Environment() = default;

    Environment(const Environment&) = delete;
    Environment& operator=(const Environment&) = delete;

    Observation reset() {
        steps_ = 0;
        done_ = false;
        started_ = true;
        Observation obs = do_reset();
        obs.reward = 0.0;
        obs.done = false;
        obs.truncated = false;
        return obs;
    }

    Observation step(const std::string& action) {
        if (!started_) throw Error(ErrorKind::invalid_input, "step called before reset");
        if (done_) throw Error(ErrorKind::step_after_done, "episode already finished");
        if (steps_ >= horizon_)
            throw Error(ErrorKind::horizon_exceeded, "horizon of " + std::to_string(horizon_) + " steps reached");
        Observation obs = do_step(action);
        ++steps_;
        obs.truncated = false;
        if (!obs.done && steps_ >= horizon_) {
            obs.done = true;
            obs.truncated = true;
        }
        done_ = obs.done;
        return obs;
    }

    [[nodiscard]] double max_return() const noexcept { return max_return_; }
    [[nodiscard]] int horizon() const noexcept { return horizon_; }
    [[nodiscard]] int steps_taken() const noexcept { return steps_; }
    [[nodiscard]] bool done() const noexcept { return done_; }

    /// An action script reaching max_return, for environments that ship one.
    [[nodiscard]] virtual std::vector<std::string> reference_solution() const { return {}; }

private:
    virtual Observation do_reset() = 0;
    virtual Observation do_step(const std::string& action) = 0;

    double max_return_;
    int horizon_;
    int steps_ = 0;
    bool done_ = false;
    bool started_ = false;
};

using EnvHandle = std::unique_ptr<Environment>;

inline constexpr const char* kNotUnderstood = "I don't understand that.";

}  // namespace ttlforge::env
