#pragma once

#include "ttlforge/ttlforge.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

namespace fx {

using namespace ttlforge;
namespace fs = std::filesystem;

inline constexpr double kItemScore = 10.0;

/// East-running corridor: the start cell is empty, then one item per cell.
inline TaskSpec corridor(const std::string& id, const std::vector<std::string>& items, int episodes, int horizon,
                         Split split = Split::train) {
    Json cfg{{"width", static_cast<int>(items.size()) + 1}, {"height", 1}, {"start", Json::array({0, 0})}};
    Json list = Json::array();
    for (std::size_t i = 0; i < items.size(); ++i)
        list.push_back(Json{{"name", items[i]},
                            {"kind", "treasure"},
                            {"at", Json::array({static_cast<int>(i) + 1, 0})},
                            {"score", kItemScore}});
    cfg["items"] = list;
    TaskSpec t;
    t.task_id = id;
    t.env_kind = "gridquest";
    t.env_config = cfg;
    t.horizon = horizon;
    t.episode_budget = episodes;
    t.max_return = kItemScore * static_cast<double>(items.size());
    t.split = split;
    return t;
}

/// Walks east; always takes the gem; takes any other item only when the
/// guidance carries HINT:<item>.
inline backend::ScriptedBackendSpec actor_spec(const std::vector<std::string>& universe) {
    backend::ScriptedBackendSpec s;
    s.rules.push_back({{}, {"There is a gem here."}, "take gem"});
    for (const auto& item : universe)
        if (item != "gem") s.rules.push_back({{"HINT:" + item}, {"There is a " + item + " here."}, "take " + item});
    s.default_response = "go east";
    return s;
}

/// Meta-agent that hands the meta-prompt text straight to the actor.
inline backend::ScriptedBackendSpec echo_meta_spec() {
    backend::ScriptedBackendSpec s;
    s.rules.push_back({{}, {}, "<think>echo</think><learn>{{system}}</learn>"});
    return s;
}

struct ProposalStep {
    enum Kind { noop, hint, fail, reset } kind = noop;
    std::string item;  // the hinted item
};

/// Proposer keyed on the iteration number: noop returns the parent text,
/// hint appends HINT:<x>, fail emits no sentinels, reset returns the seed.
inline backend::ScriptedBackendSpec proposer_spec(const std::vector<ProposalStep>& steps, const std::string& seed_text) {
    backend::ScriptedBackendSpec s;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::string key = "Iteration: " + std::to_string(i + 1) + "\n";
        std::string body;
        switch (steps[i].kind) {
        case ProposalStep::noop: body = "{{tag:parent_meta_prompt}}"; break;
        case ProposalStep::hint: body = "{{tag:parent_meta_prompt}} HINT:" + steps[i].item; break;
        case ProposalStep::reset: body = seed_text; break;
        case ProposalStep::fail: break;
        }
        const std::string response = steps[i].kind == ProposalStep::fail
                                         ? "I have no idea."
                                         : "Here is my revision.\nBEGIN_CANDIDATE_PROMPT\n" + body +
                                               "\nEND_CANDIDATE_PROMPT\n";
        s.rules.push_back({{}, {key}, response});
    }
    s.default_response = "nothing to add";
    return s;
}

inline backend::RoleBinding bind(const backend::ScriptedBackendSpec& spec, double temperature = 0.7) {
    return backend::RoleBinding{std::make_shared<backend::ScriptedBackend>(spec), "scripted", temperature, 256};
}

inline agents::ActorConfig actor(const std::vector<std::string>& universe) {
    agents::ActorConfig a;
    a.binding = bind(actor_spec(universe));
    a.max_prior_steps = 0;
    return a;
}

inline agents::MetaAgentConfig meta() {
    agents::MetaAgentConfig m;
    m.binding = bind(echo_meta_spec());
    return m;
}

inline agents::ProposerConfig proposer(const std::vector<ProposalStep>& steps,
                                       const std::string& seed_text = agents::kDefaultSeedMetaPrompt) {
    agents::ProposerConfig p;
    p.binding = bind(proposer_spec(steps, seed_text), 1.0);
    return p;
}

// ------------------------------------------------------------------ oracles

inline std::set<std::string> hints_in(const std::string& text) {
    std::set<std::string> out;
    std::size_t pos = 0;
    while ((pos = text.find("HINT:", pos)) != std::string::npos) {
        pos += 5;
        auto end = text.find_first_of(" \n\t", pos);
        out.insert(text.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
    }
    return out;
}

/// The fixture's action script for a hint set, written out directly: take
/// the gem and hinted items where they lie, otherwise step east.
inline std::vector<std::string> action_script(const std::vector<std::string>& items, const std::set<std::string>& hints,
                                              int horizon) {
    std::vector<std::string> script;
    std::size_t x = 0;
    std::set<std::size_t> taken;
    while (static_cast<int>(script.size()) < horizon) {
        if (x >= 1 && x <= items.size() && !taken.count(x) && (items[x - 1] == "gem" || hints.count(items[x - 1]))) {
            script.push_back("take " + items[x - 1]);
            taken.insert(x);
        } else {
            script.push_back("go east");
            if (x < items.size()) ++x;
        }
    }
    return script;
}

/// Replays a script in a fresh environment and sums rewards until done.
inline double replay(const TaskSpec& task, const std::vector<std::string>& script) {
    auto env = env::make_env(task);
    auto obs = env->reset();
    double total = 0.0;
    for (const auto& a : script) {
        if (obs.done) break;
        obs = env->step(a);
        total += obs.reward;
    }
    return total;
}

inline double oracle_return(const TaskSpec& task, const std::vector<std::string>& items,
                            const std::set<std::string>& hints) {
    return replay(task, action_script(items, hints, task.horizon));
}

/// Direct transcription of the weighted learning-curve area.
inline double oracle_wauc(const std::vector<double>& returns, double max_return) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        num += static_cast<double>(i + 1) * returns[i];
        den += static_cast<double>(i + 1) * max_return;
    }
    return num / den;
}

/// Episode 1 runs unhinted; later episodes use the meta-prompt's hints.
inline std::vector<double> oracle_session_returns(const TaskSpec& task, const std::vector<std::string>& items,
                                                  const std::string& meta_prompt) {
    std::vector<double> r;
    for (int k = 1; k <= task.episode_budget; ++k)
        r.push_back(oracle_return(task, items, k == 1 ? std::set<std::string>{} : hints_in(meta_prompt)));
    return r;
}

inline std::vector<std::string> items_of(const TaskSpec& task) {
    std::vector<std::string> out;
    for (const auto& it : task.env_config.at("items")) out.push_back(it.at("name").get<std::string>());
    return out;
}

// ---------------------------------------------------------------- temp dirs

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "ttlforge-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p) { return store::read_text_file(p); }

/// Relative path -> bytes for every regular file under `root`.
inline std::map<std::string, std::string> dir_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

// ------------------------------------------------------------- config files

/// A complete scripted config document for the CLI.
inline Json config_json(const std::vector<TaskSpec>& tasks, const std::vector<std::string>& universe,
                        const std::vector<ProposalStep>& steps, const std::vector<std::string>& train_tasks,
                        const std::vector<std::string>& val_tasks, int iterations, std::uint64_t seed = 7) {
    Json j;
    j["schema_version"] = 1;
    j["run_id"] = "train";
    j["clock"] = "logical";
    j["fsync"] = false;
    j["tasks"] = tasks;
    j["backends"] = Json{{"actor", actor_spec(universe).to_json()},
                         {"meta", echo_meta_spec().to_json()},
                         {"proposer", proposer_spec(steps, agents::kDefaultSeedMetaPrompt).to_json()}};
    j["roles"] = Json{{"actor", {{"backend", "actor"}}}, {"meta", {{"backend", "meta"}}}, {"proposer", {{"backend", "proposer"}}}};
    j["actor"] = Json{{"max_prior_steps", 0}};
    j["train"] = Json{{"train_tasks", train_tasks}, {"val_tasks", val_tasks}, {"iterations", iterations}, {"seed", seed}};
    return j;
}

inline fs::path write_config(const fs::path& dir, const Json& j, const std::string& name = "config.json") {
    auto p = dir / name;
    store::write_text_file(p, j.dump(2) + "\n");
    return p;
}

/// The CLI's K=3 example: returns 10, 20, 30 out of 40.
inline Json k3_config() {
    const std::vector<std::string> items{"gem", "ruby", "coin", "pearl"};
    auto task = corridor("k3", items, 3, 12, Split::val);
    backend::ScriptedBackendSpec meta;
    meta.rules.push_back({{}, {"=== Episode 2 ==="}, "<learn>HINT:ruby HINT:coin</learn>"});
    meta.rules.push_back({{}, {"=== Episode 1 ==="}, "<learn>HINT:ruby</learn>"});
    auto j = config_json({task}, items, {}, {"k3"}, {"k3"}, 1);
    j["backends"]["meta"] = meta.to_json();
    j["eval_tasks"] = Json::array({"k3"});
    return j;
}

}  // namespace fx
