#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sys/wait.h>
#include <unistd.h>

using namespace ttlforge;
using namespace ttlforge::store;

namespace {

void cut_file(const fs::path& p, std::uintmax_t size) { fs::resize_file(p, size); }

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::io;
}

std::vector<std::string> lines_of(const fs::path& p) { return text::split_lines(fx::slurp(p)); }

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines)
        if (!l.empty()) s += l + "\n";
    write_text_file(p, s);
}

const std::vector<std::string> kUniverse{"gem", "ruby", "coin", "pearl"};

struct TrainFixture {
    std::vector<TaskSpec> tasks{fx::corridor("train", kUniverse, 2, 12),
                                fx::corridor("A", {"gem", "ruby"}, 2, 12, Split::val),
                                fx::corridor("B", {"gem", "coin"}, 2, 12, Split::val)};
    std::vector<fx::ProposalStep> steps{{fx::ProposalStep::hint, "ruby"}, {fx::ProposalStep::noop},
                                        {fx::ProposalStep::hint, "coin"}, {fx::ProposalStep::fail},
                                        {fx::ProposalStep::hint, "pearl"}, {fx::ProposalStep::hint, "coin"}};

    metatrain::TrainConfig config(int iterations) const {
        metatrain::TrainConfig c;
        c.train_tasks = {"train"};
        c.val_tasks = {"A", "B"};
        c.iterations = iterations;
        c.seed_policy = agents::make_naive_policy(agents::kDefaultSeedMetaPrompt, "seed");
        c.seed = 3;
        return c;
    }

    metatrain::TrainContext context() const {
        metatrain::TrainContext c;
        for (const auto& t : tasks) c.tasks[t.task_id] = t;
        c.actor = fx::actor(kUniverse);
        c.meta = fx::meta();
        c.proposer = fx::proposer(steps);
        return c;
    }

    /// Runs (or resumes) training in `root`; `stop_at` throws after that
    /// iteration's boundary.
    metatrain::TrainingResult run(const fs::path& root, int iterations, int stop_at = 0) const {
        RunPaths paths(root, "run");
        paths.create();
        RunLog log(paths.run_log(), ClockMode::logical, false);
        metatrain::MetaTrainer tr(config(iterations), context(),
                                  metatrain::TrainerStore{paths, &log, ClockMode::logical, Json{{"iterations", iterations}}});
        if (stop_at > 0)
            tr.on_iteration = [stop_at](const metatrain::IterationRecord& r) {
                if (r.iteration == stop_at) throw std::runtime_error("interrupted");
            };
        return tr.run();
    }
};

}  // namespace

TEST(RunLog, AppendReopenVerify) {
    fx::TempDir dir;
    const auto path = dir / "run.jsonl";
    {
        RunLog log(path, ClockMode::logical);
        log.append("run_config", Json{{"a", 1}});
        log.append("proposal", Json{{"b", "x"}});
        log.append("selection", Json::object());
    }
    RunLog again(path, ClockMode::logical);
    ASSERT_EQ(again.records().size(), 3u);
    EXPECT_TRUE(again.recovery_note().empty());
    std::string prev = kGenesisHash;
    for (const auto& r : again.records()) {
        EXPECT_EQ(r.prev_hash, prev);
        EXPECT_EQ(r.hash, record_hash(prev, r.sequence, r.kind, r.payload));
        EXPECT_EQ(r.timestamp_ms, static_cast<std::int64_t>(r.sequence));
        prev = r.hash;
    }
    auto first = Json::parse(lines_of(path).front());
    EXPECT_EQ(first["schema_version"], 1);
    EXPECT_EQ(first["kind"], "run_config");
}

TEST(RunLog, TornTailIsCutOnOpen) {
    fx::TempDir dir;
    const auto path = dir / "run.jsonl";
    std::uintmax_t two = 0;
    {
        RunLog log(path, ClockMode::logical);
        log.append("run_config", Json::object());
        log.append("proposal", Json{{"x", 1}});
        two = fs::file_size(path);
        log.append("proposal", Json{{"x", 2}});
    }
    cut_file(path, fs::file_size(path) - 10);
    RunLog log(path, ClockMode::logical);
    EXPECT_EQ(log.records().size(), 2u);
    EXPECT_FALSE(log.recovery_note().empty());
    EXPECT_EQ(fs::file_size(path), two);
    log.append("proposal", Json{{"x", 3}});
    EXPECT_EQ(load_log(path).records.size(), 3u);
}

TEST(RunLog, RandomTruncationRecoversAPrefix) {
    fx::TempDir dir;
    const auto path = dir / "run.jsonl";
    std::vector<std::uintmax_t> ends;
    {
        RunLog log(path, ClockMode::logical, false);
        for (int i = 0; i < 12; ++i) {
            log.append("proposal", Json{{"i", i}, {"pad", std::string(static_cast<std::size_t>(i * 7), 'p')}});
            ends.push_back(fs::file_size(path));
        }
    }
    const auto full = fx::slurp(path);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const auto size = rng() % (full.size() + 1);
        write_text_file(path, full.substr(0, size));
        RunLog log(path, ClockMode::logical, false);
        const auto n = static_cast<std::size_t>(std::upper_bound(ends.begin(), ends.end(), size) - ends.begin());
        ASSERT_EQ(log.records().size(), n) << "size " << size;
        EXPECT_EQ(fs::file_size(path), n == 0 ? 0 : ends[n - 1]);
        EXPECT_EQ(log.recovery_note().empty(), size == (n == 0 ? 0 : ends[n - 1]));
    }
}

TEST(RunLog, RejectsOutOfOrderAndUnknownKinds) {
    fx::TempDir dir;
    RunLog log(dir / "run.jsonl", ClockMode::logical);
    log.append("run_config", Json::object());
    RunLogRecord r;
    r.sequence = 5;
    r.kind = "proposal";
    EXPECT_EQ(kind_of([&] { log.append(r); }), ErrorKind::sequence_gap);
    r.sequence = 1;
    EXPECT_EQ(kind_of([&] { log.append(r); }), ErrorKind::sequence_gap);
    EXPECT_EQ(kind_of([&] { log.append("gossip", Json::object()); }), ErrorKind::invalid_input);
    EXPECT_EQ(log.records().size(), 1u);
}

TEST(RunLog, ChainBreakAndGapAreCorrupt) {
    fx::TempDir dir;
    const auto path = dir / "run.jsonl";
    {
        RunLog log(path, ClockMode::logical);
        for (int i = 0; i < 4; ++i) log.append("proposal", Json{{"i", i}});
    }
    const auto original = lines_of(path);

    auto edited = original;
    auto j = Json::parse(edited[1]);
    j["payload"]["i"] = 42;
    edited[1] = j.dump();
    write_lines(path, edited);
    try {
        load_log(path);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::corrupt_log);
        EXPECT_EQ(e.subject(), path.string());
        EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos);
    }
    EXPECT_EQ(kind_of([&] { RunLog open(path, ClockMode::logical); }), ErrorKind::corrupt_log);

    auto gap = original;
    gap.erase(gap.begin() + 1);
    write_lines(path, gap);
    EXPECT_EQ(kind_of([&] { load_log(path); }), ErrorKind::corrupt_log);

    auto garbage = original;
    garbage[1] = "{not json";
    write_lines(path, garbage);
    EXPECT_EQ(kind_of([&] { load_log(path); }), ErrorKind::corrupt_log);

    // A rehashed forgery of record 2 still breaks record 3's link.
    auto forged = original;
    auto f = Json::parse(forged[1]);
    f["payload"]["i"] = 42;
    f["hash"] = record_hash(f["prev"], 2, "proposal", f["payload"]);
    forged[1] = f.dump();
    write_lines(path, forged);
    EXPECT_EQ(kind_of([&] { load_log(path); }), ErrorKind::corrupt_log);
}

TEST(RunLog, MissingFileIsEmpty) {
    fx::TempDir dir;
    EXPECT_TRUE(load_log(dir / "none.jsonl").records.empty());
}

TEST(RunDir, SanitizeAndLayout) {
    EXPECT_EQ(sanitize_id("a/b c"), "a_b_c");
    EXPECT_EQ(sanitize_id(".."), "_..");
    EXPECT_EQ(sanitize_id(""), "_");
    RunPaths p("/r", "x");
    EXPECT_EQ(p.run_log(), fs::path("/r/x/run.jsonl"));
    EXPECT_EQ(p.session_log("t0001-parent-g"), fs::path("/r/x/sessions/t0001-parent-g.jsonl"));
    EXPECT_EQ(p.pool_snapshot(3), fs::path("/r/x/pool/3.json"));
    EXPECT_EQ(kind_of([] { read_text_file("/nonexistent/file"); }), ErrorKind::not_found);
}

TEST(RunDir, LockIsExclusiveAndStaleLocksAreTaken) {
    fx::TempDir dir;
    const auto lock = dir / "LOCK";
    {
        RunLock held(lock);
        EXPECT_EQ(kind_of([&] { RunLock second(lock); }), ErrorKind::lock_held);
    }
    EXPECT_FALSE(fs::exists(lock));

    pid_t child = fork();
    if (child == 0) _exit(0);
    int status = 0;
    waitpid(child, &status, 0);
    write_text_file(lock, std::to_string(child) + "\n");
    {
        RunLock taken(lock);
        EXPECT_EQ(std::stol(fx::slurp(lock)), static_cast<long>(getpid()));
    }
    write_text_file(lock, "garbage");
    { RunLock taken(lock); }
}

TEST(SessionLog, RecordsEveryEvent) {
    fx::TempDir dir;
    auto task = fx::corridor("c", kUniverse, 3, 12);
    ttl::SessionRequest req{task, agents::make_naive_policy("HINT:ruby", "p"), fx::actor(kUniverse), 4, {}};
    auto meta = fx::meta();
    Session s;
    {
        SessionLogWriter w(dir / "s.jsonl", ClockMode::logical, SessionHeader{"s1", "eval", "naive", 4, {"x"}}, task,
                           req.policy);
        ttl::SessionOptions opt;
        opt.observer = &w;
        s = ttl::run_ttl(req, &meta, opt);
    }
    auto log = load_log(dir / "s.jsonl");
    std::map<std::string, int> kinds;
    for (const auto& r : log.records) ++kinds[r.kind];
    EXPECT_EQ(log.records.front().kind, "run_config");
    EXPECT_EQ(log.records.front().payload["task"], Json(task));
    EXPECT_EQ(kinds["episode_start"], 3);
    EXPECT_EQ(kinds["episode_end"], 3);
    EXPECT_EQ(kinds["adapt"], 2);
    std::size_t steps = 0;
    for (const auto& t : s.trajectories) steps += t.steps.size();
    EXPECT_EQ(kinds["step"], static_cast<int>(steps));
    const auto& last = log.records.back();
    EXPECT_EQ(last.kind, "validation_result");
    EXPECT_EQ(last.payload["session"].get<Session>(), s);
    EXPECT_EQ(last.payload["method"], "naive");

    // Rewriting the same session id starts a fresh file with identical bytes.
    const auto before = fx::slurp(dir / "s.jsonl");
    {
        SessionLogWriter w(dir / "s.jsonl", ClockMode::logical, SessionHeader{"s1", "eval", "naive", 4, {"x"}}, task,
                           req.policy);
        ttl::SessionOptions opt;
        opt.observer = &w;
        ttl::run_ttl(req, &meta, opt);
    }
    EXPECT_EQ(fx::slurp(dir / "s.jsonl"), before);
}

TEST(Resume, FreshLogs) {
    fx::TempDir dir;
    EXPECT_TRUE(load_resume_point(dir / "none.jsonl").fresh);
    RunLog log(dir / "run.jsonl", ClockMode::logical);
    log.append("run_config", Json::object());
    auto rp = load_resume_point(log.records());
    EXPECT_TRUE(rp.fresh);
    EXPECT_EQ(rp.boundary_sequence, 1u);
    EXPECT_EQ(rp.next_iteration, 0);
}

TEST(Resume, CompletedRunEndsAtLastIteration) {
    fx::TempDir dir;
    TrainFixture fx5;
    auto result = fx5.run(dir.path(), 5);
    auto rp = load_resume_point(RunPaths(dir.path(), "run").run_log());
    EXPECT_FALSE(rp.fresh);
    EXPECT_TRUE(rp.has_selection);
    EXPECT_EQ(rp.next_iteration, 6);
    EXPECT_EQ(rp.records, result.records);
    EXPECT_EQ(rp.pool, result.pool);
    EXPECT_EQ(rp.sessions_run, result.sessions_run);
}

TEST(Resume, PartialIterationIsDropped) {
    fx::TempDir dir;
    TrainFixture f;
    f.run(dir.path(), 6);
    const auto path = RunPaths(dir.path(), "run").run_log();
    auto loaded = load_log(path);
    std::uint64_t iter5 = 0;
    for (const auto& r : loaded.records)
        if (r.kind == "iteration" && r.payload["record"]["iteration"] == 5) iter5 = r.sequence;
    ASSERT_GT(iter5, 0u);
    // Keep two records of iteration 6.
    cut_file(path, loaded.end_offsets[iter5 + 1]);
    auto rp = load_resume_point(path);
    EXPECT_EQ(rp.next_iteration, 6);
    EXPECT_EQ(rp.boundary_sequence, iter5);
    EXPECT_EQ(rp.records.size(), 5u);
    EXPECT_FALSE(rp.has_selection);
}

TEST(Resume, OutOfOrderIterationIsCorrupt) {
    std::vector<RunLogRecord> recs(1);
    recs[0].sequence = 1;
    recs[0].kind = "iteration";
    metatrain::IterationRecord ir;
    ir.iteration = 2;
    ir.parent_draw.candidates = {"seed"};
    recs[0].payload = Json{{"record", ir}, {"pool", metatrain::ExpertPool{}}, {"sessions_run", 0}};
    EXPECT_EQ(kind_of([&] { load_resume_point(recs); }), ErrorKind::corrupt_log);
}

TEST(Resume, InterruptedRunsFinishIdentically) {
    TrainFixture f;
    fx::TempDir whole;
    auto reference = f.run(whole.path(), 6);
    const auto expected = fx::dir_contents(whole.path());

    fx::TempDir stopped;
    EXPECT_THROW(f.run(stopped.path(), 6, 3), std::runtime_error);
    auto resumed = f.run(stopped.path(), 6);
    EXPECT_TRUE(resumed.resumed);
    EXPECT_EQ(resumed.records, reference.records);
    EXPECT_EQ(fx::dir_contents(stopped.path()), expected);

    // Torn mid-iteration: cut inside iteration 4's records.
    fx::TempDir torn;
    f.run(torn.path(), 6);
    const auto path = RunPaths(torn.path(), "run").run_log();
    auto loaded = load_log(path);
    std::uint64_t iter3 = 0;
    for (const auto& r : loaded.records)
        if (r.kind == "iteration" && r.payload["record"]["iteration"] == 3) iter3 = r.sequence;
    cut_file(path, loaded.end_offsets[iter3 + 1] + 7);
    f.run(torn.path(), 6);
    EXPECT_EQ(fx::dir_contents(torn.path()), expected);

    // Re-running a finished run leaves it byte-identical.
    f.run(whole.path(), 6);
    EXPECT_EQ(fx::dir_contents(whole.path()), expected);
}

TEST(Resume, DifferentConfigIsRefused) {
    TrainFixture f;
    fx::TempDir dir;
    f.run(dir.path(), 2);
    EXPECT_THROW(f.run(dir.path(), 3), Error);
}
