#pragma once

#include "ttlforge/env/external.hpp"
#include "ttlforge/env/formfill.hpp"
#include "ttlforge/env/gridquest.hpp"

#include <functional>

namespace ttlforge::env {

/// Builds a fresh environment for a task. Construction performs no steps.
inline EnvHandle make_env(const TaskSpec& spec) {
    spec.validate();
    if (spec.env_kind == "gridquest") {
        auto config = GridQuestConfig::from_json(spec.env_config);
        if (config.total_score() != spec.max_return)
            throw Error(ErrorKind::malformed_config,
                        "task '" + spec.task_id + "': item scores sum to " + text::shortest(config.total_score()) +
                            " but max_return is " + text::shortest(spec.max_return),
                        spec.task_id);
        return std::make_unique<GridQuest>(std::move(config), spec.horizon);
    }
    if (spec.env_kind == "formfill") {
        if (spec.max_return != 1.0)
            throw Error(ErrorKind::malformed_config, "task '" + spec.task_id + "': formfill max_return must be 1",
                        spec.task_id);
        return std::make_unique<FormFill>(FormFillConfig::from_json(spec.env_config), spec.horizon);
    }
    if (spec.env_kind == "external")
        return std::make_unique<ExternalEnv>(ExternalConfig::from_json(spec.env_config), spec.max_return, spec.horizon);
    throw Error(ErrorKind::unknown_environment, "unknown env_kind '" + spec.env_kind + "'", spec.env_kind);
}

using EnvFactory = std::function<EnvHandle(const TaskSpec&)>;

}  // namespace ttlforge::env
