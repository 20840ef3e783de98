#pragma once

#include "ttlforge/agents/policy.hpp"
#include "ttlforge/agents/proposer.hpp"
#include "ttlforge/backend/remote.hpp"
#include "ttlforge/backend/retry.hpp"
#include "ttlforge/backend/scripted.hpp"
#include "ttlforge/env/registry.hpp"
#include "ttlforge/metatrain/records.hpp"
#include "ttlforge/store/run_log.hpp"

#include <filesystem>
#include <fstream>

namespace ttlforge::cli {

inline constexpr int kConfigSchemaVersion = 1;

struct BackendDef {
    std::string kind;  // scripted | remote
    backend::ScriptedBackendSpec scripted;
    backend::RemoteBackendSpec remote;
    std::optional<backend::RetryPolicy> retry;

    [[nodiscard]] Json to_json(bool redact) const {
        Json j = kind == "scripted" ? scripted.to_json() : remote.to_json();
        if (redact && j.contains("headers"))
            for (auto& [name, value] : j["headers"].items()) value = "<redacted>";
        if (retry) j["retry"] = retry->to_json();
        return j;
    }

    static BackendDef from_json(const Json& j) {
        BackendDef d;
        d.kind = j.at("kind").get<std::string>();
        if (d.kind == "scripted")
            d.scripted = backend::ScriptedBackendSpec::from_json(j);
        else if (d.kind == "remote")
            d.remote = backend::RemoteBackendSpec::from_json(j);
        else
            throw Error(ErrorKind::config, "unknown backend kind '" + d.kind + "' (expected scripted|remote)", d.kind);
        if (j.contains("retry")) d.retry = backend::RetryPolicy::from_json(j["retry"]);
        return d;
    }
};

struct RoleDef {
    std::string backend;
    std::string model;
    double temperature = 0.7;
    int max_output_tokens = 1024;

    [[nodiscard]] Json to_json() const {
        return Json{{"backend", backend}, {"model", model}, {"temperature", temperature},
                    {"max_output_tokens", max_output_tokens}};
    }

    static RoleDef from_json(const Json& j, double default_temperature) {
        RoleDef r;
        r.backend = j.at("backend").get<std::string>();
        r.model = j.value("model", std::string("scripted"));
        r.temperature = j.value("temperature", default_temperature);
        r.max_output_tokens = j.value("max_output_tokens", 1024);
        return r;
    }
};

inline std::map<std::string, std::string> default_initial_guidance() {
    return {{"gridquest", "Play carefully and maximize score."},
            {"formfill", "Fill every required field with its correct value, then submit."},
            {"external", "Play carefully and maximize score."}};
}

struct ActorSection {
    std::string base_instructions = agents::ActorConfig{}.base_instructions;
    std::map<std::string, std::string> initial_guidance = default_initial_guidance();
    std::size_t max_prior_steps = 5;
    std::string noop_action = "look";
};

struct TrainSection {
    std::vector<std::string> train_tasks;
    std::vector<std::string> val_tasks;
    int iterations = 1;
    SelectionMode selection_mode = SelectionMode::raw;
    metatrain::SamplingRule sampling = metatrain::SamplingRule::uniform_distinct;
    std::uint64_t seed = 0;
    bool reuse_task_seed = true;
    int validation_workers = 1;
    std::int64_t session_timeout_s = 0;
};

/// The single JSON document behind every command. Parsing fills defaults,
/// so serialising a parsed config and parsing it again is a fixed point.
struct RunConfigFile {
    std::string output_dir = "runs";
    std::string run_id = "metatrain";
    store::ClockMode clock = store::ClockMode::wall;
    bool fsync = true;
    std::vector<TaskSpec> tasks;
    std::map<std::string, BackendDef> backends;
    std::map<std::string, RoleDef> roles;  // actor, meta, proposer
    ActorSection actor;
    std::size_t history_char_budget = 60000;
    std::size_t session_char_budget = 60000;
    std::string seed_policy_id = "seed";
    std::string seed_policy_text = agents::kDefaultSeedMetaPrompt;
    TrainSection train;
    std::vector<std::string> eval_tasks;
    std::string templates_dir;  // empty: built-in templates
    std::filesystem::path base_dir;  // directory of the config file; not serialised

    [[nodiscard]] const TaskSpec& task(const std::string& id) const {
        for (const auto& t : tasks)
            if (t.task_id == id) return t;
        throw Error(ErrorKind::config, "unknown task id '" + id + "'", id);
    }

    [[nodiscard]] bool has_task(const std::string& id) const {
        return std::any_of(tasks.begin(), tasks.end(), [&](const TaskSpec& t) { return t.task_id == id; });
    }

    [[nodiscard]] std::vector<std::string> split_tasks(Split s) const {
        std::vector<std::string> out;
        for (const auto& t : tasks)
            if (t.split == s) out.push_back(t.task_id);
        return out;
    }

    [[nodiscard]] std::filesystem::path resolve(const std::string& p) const {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    }

    void validate() const {
        if (tasks.empty()) throw Error(ErrorKind::config, "config defines no tasks");
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            tasks[i].validate();
            for (std::size_t k = 0; k < i; ++k)
                if (tasks[k].task_id == tasks[i].task_id)
                    throw Error(ErrorKind::config, "duplicate task id '" + tasks[i].task_id + "'", tasks[i].task_id);
        }
        for (const char* role : {"actor", "meta", "proposer"}) {
            auto it = roles.find(role);
            if (it == roles.end()) throw Error(ErrorKind::config, std::string("no binding for role '") + role + "'", role);
            if (!backends.count(it->second.backend))
                throw Error(ErrorKind::config,
                            std::string("role '") + role + "' binds to undefined backend '" + it->second.backend + "'",
                            it->second.backend);
        }
        for (const auto& [name, r] : roles)
            if (name != "actor" && name != "meta" && name != "proposer")
                throw Error(ErrorKind::config, "unknown role '" + name + "'", name);
        auto check = [&](const std::vector<std::string>& ids, const char* where) {
            for (const auto& id : ids)
                if (!has_task(id))
                    throw Error(ErrorKind::config, std::string(where) + " references unknown task id '" + id + "'", id);
        };
        check(train.train_tasks, "train.train_tasks");
        check(train.val_tasks, "train.val_tasks");
        check(eval_tasks, "eval_tasks");
        if (seed_policy_text.empty()) throw Error(ErrorKind::config, "seed_policy.text is empty");
    }

    [[nodiscard]] Json to_json(bool redact = false) const {
        Json backends_json = Json::object();
        for (const auto& [name, b] : backends) backends_json[name] = b.to_json(redact);
        Json roles_json = Json::object();
        for (const auto& [name, r] : roles) roles_json[name] = r.to_json();
        Json j{{"schema_version", kConfigSchemaVersion},
               {"output_dir", output_dir},
               {"run_id", run_id},
               {"clock", clock == store::ClockMode::wall ? "wall" : "logical"},
               {"fsync", fsync},
               {"tasks", tasks},
               {"backends", backends_json},
               {"roles", roles_json},
               {"actor",
                {{"base_instructions", actor.base_instructions},
                 {"initial_guidance", actor.initial_guidance},
                 {"max_prior_steps", actor.max_prior_steps},
                 {"noop_action", actor.noop_action}}},
               {"meta", {{"history_char_budget", history_char_budget}}},
               {"proposer", {{"session_char_budget", session_char_budget}}},
               {"seed_policy", {{"policy_id", seed_policy_id}, {"text", seed_policy_text}}},
               {"train",
                {{"train_tasks", train.train_tasks},
                 {"val_tasks", train.val_tasks},
                 {"iterations", train.iterations},
                 {"selection_mode", train.selection_mode},
                 {"sampling", train.sampling},
                 {"seed", train.seed},
                 {"reuse_task_seed", train.reuse_task_seed},
                 {"validation_workers", train.validation_workers},
                 {"session_timeout_s", train.session_timeout_s}}},
               {"eval_tasks", eval_tasks}};
        j["templates_dir"] = templates_dir.empty() ? Json(nullptr) : Json(templates_dir);
        return j;
    }

    static RunConfigFile from_json(const Json& j) {
        try {
            RunConfigFile c;
            const int version = j.value("schema_version", kConfigSchemaVersion);
            if (version != kConfigSchemaVersion)
                throw Error(ErrorKind::config, "unsupported config schema_version " + std::to_string(version));
            c.output_dir = j.value("output_dir", c.output_dir);
            c.run_id = j.value("run_id", c.run_id);
            const auto clock = j.value("clock", std::string("wall"));
            if (clock != "wall" && clock != "logical")
                throw Error(ErrorKind::config, "clock must be 'wall' or 'logical'");
            c.clock = clock == "wall" ? store::ClockMode::wall : store::ClockMode::logical;
            c.fsync = j.value("fsync", true);
            c.tasks = j.at("tasks").get<std::vector<TaskSpec>>();
            for (const auto& [name, b] : j.at("backends").items()) c.backends[name] = BackendDef::from_json(b);
            const std::map<std::string, double> default_temp{{"actor", 0.7}, {"meta", 0.7}, {"proposer", 1.0}};
            for (const auto& [name, r] : j.at("roles").items()) {
                auto it = default_temp.find(name);
                c.roles[name] = RoleDef::from_json(r, it == default_temp.end() ? 0.7 : it->second);
            }
            if (auto a = j.value("actor", Json::object()); !a.empty()) {
                c.actor.base_instructions = a.value("base_instructions", c.actor.base_instructions);
                const Json guidance = a.value("initial_guidance", Json::object());
                for (const auto& [env, g] : guidance.items()) c.actor.initial_guidance[env] = g.get<std::string>();
                c.actor.max_prior_steps = a.value("max_prior_steps", c.actor.max_prior_steps);
                c.actor.noop_action = a.value("noop_action", c.actor.noop_action);
            }
            c.history_char_budget = j.value("meta", Json::object()).value("history_char_budget", c.history_char_budget);
            c.session_char_budget =
                j.value("proposer", Json::object()).value("session_char_budget", c.session_char_budget);
            if (auto s = j.value("seed_policy", Json::object()); !s.empty()) {
                c.seed_policy_id = s.value("policy_id", c.seed_policy_id);
                c.seed_policy_text = s.value("text", c.seed_policy_text);
            }
            if (auto t = j.value("train", Json::object()); !t.empty()) {
                c.train.train_tasks = t.value("train_tasks", std::vector<std::string>{});
                c.train.val_tasks = t.value("val_tasks", std::vector<std::string>{});
                c.train.iterations = t.value("iterations", 1);
                c.train.selection_mode = parse_selection_mode(t.value("selection_mode", std::string("raw")));
                const auto sampling = t.value("sampling", std::string("uniform_distinct"));
                if (sampling != "uniform_distinct" && sampling != "uniform_entry")
                    throw Error(ErrorKind::config, "unknown sampling rule '" + sampling + "'");
                c.train.sampling = Json(sampling).get<metatrain::SamplingRule>();
                c.train.seed = t.value("seed", std::uint64_t{0});
                c.train.reuse_task_seed = t.value("reuse_task_seed", true);
                c.train.validation_workers = t.value("validation_workers", 1);
                c.train.session_timeout_s = t.value("session_timeout_s", std::int64_t{0});
            }
            c.eval_tasks = j.value("eval_tasks", std::vector<std::string>{});
            if (j.contains("templates_dir") && !j["templates_dir"].is_null())
                c.templates_dir = j["templates_dir"].get<std::string>();
            c.validate();
            return c;
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::config, std::string("malformed config: ") + e.what());
        }
    }

    static RunConfigFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::config, "cannot read config file " + path.string(), path.string());
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::config, "config " + path.string() + " is not valid JSON: " + e.what(), path.string());
        }
        auto c = from_json(j);
        c.base_dir = path.parent_path();
        return c;
    }

    [[nodiscard]] metatrain::TrainConfig train_config() const {
        metatrain::TrainConfig t;
        t.train_tasks = train.train_tasks;
        t.val_tasks = train.val_tasks;
        t.iterations = train.iterations;
        t.seed_policy = agents::make_naive_policy(seed_policy_text, seed_policy_id);
        t.selection_mode = train.selection_mode;
        t.sampling = train.sampling;
        t.seed = train.seed;
        t.reuse_task_seed = train.reuse_task_seed;
        t.validation_workers = train.validation_workers;
        t.session_timeout = std::chrono::seconds(train.session_timeout_s);
        return t;
    }
};

/// Live objects built from a config: backends, role bindings, tasks.
struct Runtime {
    RunConfigFile config;
    std::map<std::string, backend::BackendPtr> backends;
    agents::PromptSetPtr prompts;
    agents::ActorConfig actor;
    agents::MetaAgentConfig meta;
    agents::ProposerConfig proposer;
    std::map<std::string, TaskSpec> tasks;

    explicit Runtime(RunConfigFile cfg) : config(std::move(cfg)) {
        prompts = config.templates_dir.empty()
                      ? agents::default_prompts()
                      : std::make_shared<const agents::PromptSet>(
                            agents::PromptSet::from_directory(config.resolve(config.templates_dir)));
        for (const auto& [name, def] : config.backends) {
            backend::BackendPtr b;
            if (def.kind == "scripted") {
                b = std::make_shared<backend::ScriptedBackend>(def.scripted);
            } else {
                auto remote = std::make_shared<backend::RemoteBackend>(def.remote);
                remote->set_max_in_flight(def.remote.max_in_flight);
                b = remote;
            }
            if (def.retry) b = backend::with_retries(b, *def.retry);
            else if (def.kind == "remote") b = backend::with_retries(b, backend::RetryPolicy{});
            backends[name] = b;
        }
        auto bind = [&](const std::string& role) {
            const auto& r = config.roles.at(role);
            return backend::RoleBinding{backends.at(r.backend), r.model, r.temperature, r.max_output_tokens};
        };
        actor.binding = bind("actor");
        actor.base_instructions = config.actor.base_instructions;
        actor.initial_guidance_by_env = config.actor.initial_guidance;
        actor.max_prior_steps = config.actor.max_prior_steps;
        actor.noop_action = config.actor.noop_action;
        actor.prompts = prompts;
        meta.binding = bind("meta");
        meta.history_char_budget = config.history_char_budget;
        meta.prompts = prompts;
        proposer.binding = bind("proposer");
        proposer.session_char_budget = config.session_char_budget;
        proposer.prompts = prompts;
        for (const auto& t : config.tasks) {
            (void)env::make_env(t);  // surfaces malformed environment configs up front
            tasks[t.task_id] = t;
        }
    }

    /// What a run log records about its configuration. Header values are
    /// redacted; API keys are only ever named, never stored.
    [[nodiscard]] Json logged_config(const std::string& command) const {
        return Json{{"command", command}, {"config", config.to_json(true)}, {"template_hashes", prompts->hashes()}};
    }
};

}  // namespace ttlforge::cli
