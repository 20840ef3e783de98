#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace ttlforge;
using namespace ttlforge::agents;

namespace {

std::string data(const std::string& name) { return fx::slurp(std::string(TTLFORGE_TEST_DATA_DIR) + "/" + name); }

std::vector<Trajectory> two_episodes() {
    Trajectory a;
    a.episode_index = 1;
    a.steps = {{0, "You are in a hall.", "go east", 0, 0}, {1, "There is a key here.", "take key", 5, 5}};
    a.episode_return = 5;
    a.terminated = Termination::env_done;
    Trajectory b;
    b.episode_index = 2;
    b.steps = {{0, "You are in a hall.", "look", 0, 0}};
    b.episode_return = 0;
    b.terminated = Termination::horizon_exhausted;
    return {a, b};
}

MetaAgentConfig meta_with(backend::ScriptedBackendSpec spec) {
    MetaAgentConfig m;
    m.binding = fx::bind(spec);
    return m;
}

AdaptationInput input_for(const std::vector<Trajectory>& h) {
    return AdaptationInput{"be helpful", "actor prompt", "old guidance", h, 10, 20, 3};
}

class FailingBackend final : public backend::Backend {
public:
    [[nodiscard]] std::string describe() const override { return "failing"; }

private:
    backend::Completion do_complete(const backend::GenerationRequest&) override {
        throw Error(ErrorKind::transport, "down", "", true);
    }
};

}  // namespace

TEST(MetaOutput, Parse) {
    auto a = parse_meta_output("<think>a</think><learn>b</learn>");
    EXPECT_EQ(a.think, "a");
    EXPECT_EQ(a.learn, "b");
    auto b = parse_meta_output("<learn>only learn</learn>");
    EXPECT_EQ(b.think, "");
    EXPECT_EQ(b.learn, "only learn");
    EXPECT_THROW(parse_meta_output("<learn></learn>"), Error);
    EXPECT_THROW(parse_meta_output("<learn>  </learn>"), Error);
    EXPECT_THROW(parse_meta_output("no tags"), Error);
    EXPECT_EQ(parse_meta_output("<learn>x</learn><learn>y</learn>").learn, "x");
}

TEST(History, GoldenSerialization) {
    auto h = two_episodes();
    EXPECT_EQ(serialize_history(h, 10), data("history_two_episodes.golden"));
}

TEST(History, TruncationKeepsEveryScoreLine) {
    std::vector<Trajectory> h;
    for (int k = 1; k <= 4; ++k) {
        Trajectory t;
        t.episode_index = k;
        for (int i = 0; i < 30; ++i)
            t.steps.push_back({i, "observation " + std::to_string(i) + std::string(40, 'x'), "act", 0, 0});
        t.episode_return = k;
        h.push_back(t);
    }
    const auto full = serialize_history(h, 10);
    for (std::size_t budget : {full.size() / 2, full.size() / 4, std::size_t{600}}) {
        const auto cut = serialize_history(h, 10, budget);
        EXPECT_LT(cut.size(), full.size());
        for (int k = 1; k <= 4; ++k) {
            EXPECT_NE(cut.find("Final score: " + std::to_string(k) + "/10"), std::string::npos);
            EXPECT_NE(cut.find("=== End of episode " + std::to_string(k) + " ==="), std::string::npos);
        }
    }
    EXPECT_NE(serialize_history(h, 10, 600).find("steps omitted]"), std::string::npos);
    // Earliest episodes go first: with a budget that fits only the latest
    // episode in full, episode 4's last step survives.
    const auto tight = serialize_history(h, 10, full.size() / 4 + 200);
    EXPECT_NE(tight.find("=== Episode 4 ===\n[step 1]"), std::string::npos);
    EXPECT_EQ(tight.find("=== Episode 1 ===\n[step 1]"), std::string::npos);
}

TEST(Adapt, EmitsLearnBlock) {
    backend::ScriptedBackendSpec spec;
    spec.rules.push_back({{}, {}, "<think>t</think><learn>HINT:take key</learn>"});
    auto h = two_episodes();
    h.pop_back();
    auto r = adapt(meta_with(spec), input_for(h));
    EXPECT_EQ(r.guidance, "HINT:take key");
    EXPECT_FALSE(r.fell_back);
    EXPECT_EQ(r.calls, 1);
}

TEST(Adapt, RepromptsOnceThenFallsBack) {
    backend::ScriptedBackendSpec spec;
    spec.default_response = "I forgot the tags";
    auto h = two_episodes();
    h.pop_back();
    auto r = adapt(meta_with(spec), input_for(h));
    EXPECT_TRUE(r.fell_back);
    EXPECT_EQ(r.guidance, "old guidance");
    EXPECT_EQ(r.calls, 2);

    backend::ScriptedBackendSpec second;
    second.rules.push_back({{}, {"<history>"}, "no tags"});
    second.default_response = "<learn>fixed</learn>";
    auto ok = adapt(meta_with(second), input_for(h));
    EXPECT_EQ(ok.guidance, "fixed");
    EXPECT_EQ(ok.calls, 2);
}

TEST(Adapt, BackendFailureKeepsGuidance) {
    MetaAgentConfig m;
    m.binding = backend::RoleBinding{std::make_shared<FailingBackend>(), "x", 0.7, 10};
    auto h = two_episodes();
    h.pop_back();
    auto r = adapt(m, input_for(h));
    EXPECT_TRUE(r.fell_back);
    EXPECT_EQ(r.guidance, "old guidance");
}

TEST(Adapt, ContextContainsAllEpisodesInOrder) {
    backend::ScriptedBackendSpec spec;
    spec.rules.push_back({{}, {}, "<learn>{{tag:history}}</learn>"});
    auto h = two_episodes();
    auto in = input_for(h);
    in.episode_budget = 3;
    auto r = adapt(meta_with(spec), in);
    const auto p1 = r.guidance.find("=== Episode 1 ===");
    const auto p2 = r.guidance.find("=== Episode 2 ===");
    ASSERT_NE(p1, std::string::npos);
    ASSERT_NE(p2, std::string::npos);
    EXPECT_LT(p1, p2);
    EXPECT_NE(r.guidance.find("Action: take key"), std::string::npos);
}

TEST(Adapt, RejectsBadInput) {
    auto h = two_episodes();
    auto in = input_for(h);
    in.episode_budget = 2;  // no episode left to adapt for
    EXPECT_THROW(adapt(fx::meta(), in), Error);
    in.episode_budget = 3;
    in.meta_prompt.clear();
    EXPECT_THROW(adapt(fx::meta(), in), Error);
}

TEST(Actor, RendersTwoPartPromptAndExtractsAction) {
    auto a = fx::actor({"gem"});
    const auto sys = a.render_system_prompt("HINT:gem");
    EXPECT_EQ(sys.find(a.base_instructions), 0u);
    EXPECT_NE(sys.find("## Guidance\nHINT:gem"), std::string::npos);
    auto r = act(a, "g", {}, "There is a gem here.\nExits: east.");
    EXPECT_EQ(r.action, "take gem");
    EXPECT_THROW(act(a, "g", {}, ""), Error);
    EXPECT_EQ(extract_action("\n\n  go east  \nlook"), "go east");
}

TEST(Actor, EmptyCompletionFallsBackToNoop) {
    backend::ScriptedBackendSpec spec;
    spec.default_response = "   \n";
    ActorConfig a;
    a.binding = fx::bind(spec);
    auto r = act(a, "g", {}, "obs");
    EXPECT_TRUE(r.used_noop);
    EXPECT_EQ(r.action, "look");
}

TEST(Actor, RecentStepsWindow) {
    ActorConfig a;
    a.max_prior_steps = 2;
    std::vector<Step> steps{{0, "o0", "a0", 0, 0}, {1, "o1", "a1", 0, 0}, {2, "o2", "a2", 0, 0}};
    const auto msg = render_actor_user_message(a, steps, "now");
    EXPECT_EQ(msg.find("> a0"), std::string::npos);
    EXPECT_NE(msg.find("> a1"), std::string::npos);
    EXPECT_NE(msg.find("> a2"), std::string::npos);
    EXPECT_NE(msg.find("Current observation:\nnow"), std::string::npos);
}

TEST(Proposer, DelimiterGrammarGolden) {
    auto c = extract_candidate(data("proposer_output.txt"));
    ASSERT_TRUE(c);
    EXPECT_EQ(*c, data("proposer_candidate.golden"));
    EXPECT_FALSE(extract_candidate("BEGIN_CANDIDATE_PROMPT\n\n  \nEND_CANDIDATE_PROMPT"));
    EXPECT_FALSE(extract_candidate("BEGIN_CANDIDATE_PROMPT\nno end"));
    EXPECT_FALSE(extract_candidate("just prose"));
}

TEST(Proposer, LineageAndFailure) {
    auto parent = make_naive_policy("base text", "seed");
    Session s;
    s.task_id = "t";
    s.policy_id = "seed";
    s.trajectories = two_episodes();
    s.wauc = 0.1;

    backend::ScriptedBackendSpec spec;
    spec.rules.push_back({{}, {}, "BEGIN_CANDIDATE_PROMPT\n{{tag:parent_meta_prompt}} v2\nEND_CANDIDATE_PROMPT"});
    ProposerConfig cfg;
    cfg.binding = fx::bind(spec);
    auto child = propose(cfg, parent, s, 10, "cand-0001", 1);
    EXPECT_EQ(child.meta_prompt, "base text v2");
    EXPECT_EQ(child.parent_id, std::optional<std::string>("seed"));
    EXPECT_EQ(child.provenance, Provenance::proposed);
    EXPECT_EQ(child.created_at_iteration, 1);

    backend::ScriptedBackendSpec empty;
    empty.default_response = "BEGIN_CANDIDATE_PROMPT\n\nEND_CANDIDATE_PROMPT";
    cfg.binding = fx::bind(empty);
    try {
        propose(cfg, parent, s, 10, "cand-0002", 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::proposal_failed);
    }
    auto outcome = try_propose(cfg, parent, s, 10, "cand-0002", 2);
    EXPECT_FALSE(outcome.policy);
    EXPECT_EQ(outcome.calls, 2);

    s.policy_id = "other";
    EXPECT_THROW(try_propose(cfg, parent, s, 10, "c", 1), Error);
}

TEST(Proposer, ContextCarriesScoresAndSessionRecord) {
    auto parent = make_naive_policy("PARENT TEXT", "seed");
    Session s;
    s.task_id = "t";
    s.policy_id = "seed";
    s.trajectories = two_episodes();
    s.actor_prompts = {"PROMPT ONE", "PROMPT TWO"};
    s.wauc = 5.0 / 30.0;
    ProposerConfig cfg;
    const auto msg = render_proposer_user_message(cfg, parent, s, 10, 4);
    EXPECT_EQ(msg.rfind("Iteration: 4\n", 0), 0u);
    EXPECT_NE(msg.find("<parent_meta_prompt>\nPARENT TEXT\n</parent_meta_prompt>"), std::string::npos);
    EXPECT_NE(msg.find("PROMPT TWO"), std::string::npos);
    EXPECT_NE(msg.find("Action: take key"), std::string::npos);
    EXPECT_NE(msg.find("W-AUC: "), std::string::npos);
}

TEST(Policy, NaiveSeed) {
    auto a = make_naive_policy();
    auto b = make_naive_policy();
    EXPECT_EQ(a.meta_prompt, "analyze the game trajectory and provide feedback");
    EXPECT_EQ(a.provenance, Provenance::seed);
    EXPECT_FALSE(a.parent_id);
    EXPECT_NE(a.policy_id, b.policy_id);
    EXPECT_EQ(a.meta_prompt, b.meta_prompt);
    EXPECT_THROW(make_naive_policy(""), Error);
}

TEST(Prompts, ShippedTemplatesMatchBuiltins) {
    auto shipped = PromptSet::from_directory(TTLFORGE_TEMPLATES_DIR);
    EXPECT_EQ(shipped.all(), PromptSet::builtin());
    for (const auto& [name, body] : PromptSet::builtin()) {
        auto path = std::filesystem::path(TTLFORGE_TEMPLATES_DIR) / (name + ".txt");
        EXPECT_TRUE(std::filesystem::exists(path)) << name;
        EXPECT_EQ(shipped.hashes().at(name), sha256_hex(body));
    }
}

TEST(Baselines, StaticMakesNoMetaCalls) {
    const std::vector<std::string> items{"gem", "ruby"};
    auto task = fx::corridor("c", items, 4, 10);
    auto a = fx::actor(items);
    auto s = run_baseline_static(task, a);
    ASSERT_EQ(s.trajectories.size(), 4u);
    for (const auto& t : s.trajectories) EXPECT_EQ(t.episode_return, 10.0);
    EXPECT_DOUBLE_EQ(s.wauc, 10.0 / 20.0);
    EXPECT_EQ(s.policy_id, kStaticPolicyId);

    auto one = task;
    one.episode_budget = 1;
    auto single = run_baseline_static(one, a);
    auto env = env::make_env(one);
    auto plain = ttl::run_episode(*env, a, a.initial_guidance_for(one), one.horizon);
    EXPECT_EQ(single.trajectories.front(), plain);
}
