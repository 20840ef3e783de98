#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace ttlforge;
using namespace ttlforge::backend;

namespace {

GenerationRequest req(std::string system, std::string user) {
    return GenerationRequest{{{Role::system, std::move(system)}, {Role::user, std::move(user)}}, "m", 0.5, 64, 7};
}

class FlakyBackend final : public Backend {
public:
    FlakyBackend(int failures, ErrorKind kind, bool retryable) : failures_(failures), kind_(kind), retryable_(retryable) {}
    std::atomic<int> attempts{0};
    [[nodiscard]] std::string describe() const override { return "flaky"; }

private:
    Completion do_complete(const GenerationRequest&) override {
        if (attempts++ < failures_) throw Error(kind_, "boom", "flaky", retryable_);
        return {"ok", false};
    }
    int failures_;
    ErrorKind kind_;
    bool retryable_;
};

// Minimal chat-completions stand-in on a loopback port.
class StubServer {
public:
    std::function<void(const httplib::Request&, httplib::Response&)> handler;
    std::vector<std::string> seen_auth;
    std::vector<Json> seen_bodies;

    StubServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& rq, httplib::Response& rs) {
            {
                std::lock_guard lock(mu_);
                seen_auth.push_back(rq.get_header_value("Authorization"));
                seen_bodies.push_back(Json::parse(rq.body));
            }
            handler(rq, rs);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::mutex mu_;
};

std::string ok_body(const std::string& text, const std::string& finish = "stop") {
    return Json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", finish}}}}}.dump();
}

}  // namespace

TEST(Scripted, FirstMatchWinsAndDefault) {
    ScriptedBackendSpec spec;
    spec.rules.push_back({{"HINT:take key"}, {"key"}, "take key"});
    spec.rules.push_back({{}, {"key"}, "look"});
    spec.default_response = "go north";
    ScriptedBackend b(spec);
    EXPECT_EQ(b.complete(req("HINT:take key", "There is a key here.")).text, "take key");
    EXPECT_EQ(b.complete(req("nothing", "There is a key here.")).text, "look");
    EXPECT_EQ(b.complete(req("nothing", "empty room")).text, "go north");
    EXPECT_EQ(b.usage().calls, 3u);
    EXPECT_GT(b.usage().approx_tokens, 0u);
}

TEST(Scripted, Placeholders) {
    ScriptedBackendSpec spec;
    spec.rules.push_back({{}, {}, "[{{tag:inner}}] {{system}} / {{unknown}}"});
    ScriptedBackend b(spec);
    EXPECT_EQ(b.complete(req("SYS", "x <inner>\n  core \n</inner> y")).text, "[core] SYS / {{unknown}}");
}

TEST(Scripted, SpecJsonRoundTrip) {
    Json j{{"kind", "scripted"},
           {"rules", {{{"system_contains", "a"}, {"user_contains", {"b", "c"}}, {"response", "r"}}}},
           {"default", "d"}};
    auto spec = ScriptedBackendSpec::from_json(j);
    ASSERT_EQ(spec.rules.size(), 1u);
    EXPECT_EQ(spec.rules[0].system_contains, std::vector<std::string>{"a"});
    EXPECT_EQ(ScriptedBackendSpec::from_json(spec.to_json()).to_json(), spec.to_json());
}

TEST(Backend, RequestValidation) {
    ScriptedBackend b({});
    EXPECT_THROW(b.complete(GenerationRequest{}), Error);
    EXPECT_THROW(b.complete(req("", "u")), Error);
    auto r = req("s", "u");
    r.temperature = -1;
    EXPECT_THROW(b.complete(r), Error);
}

TEST(Retry, RetriesRetryableThenSucceeds) {
    auto flaky = std::make_shared<FlakyBackend>(2, ErrorKind::transport, true);
    std::vector<std::chrono::milliseconds> sleeps;
    RetryPolicy p;
    p.max_attempts = 3;
    auto b = with_retries(flaky, p, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    EXPECT_EQ(b->complete(req("s", "u")).text, "ok");
    EXPECT_EQ(flaky->attempts.load(), 3);
    ASSERT_EQ(sleeps.size(), 2u);
    EXPECT_EQ(sleeps[0].count(), 500);
    EXPECT_EQ(sleeps[1].count(), 1000);
}

TEST(Retry, ExhaustionAndNonRetryable) {
    auto flaky = std::make_shared<FlakyBackend>(10, ErrorKind::provider, true);
    auto b = with_retries(flaky, RetryPolicy{}, [](auto) {});
    try {
        b->complete(req("s", "u"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::provider);
        EXPECT_NE(std::string(e.what()).find("after 3 attempts"), std::string::npos);
    }
    auto fatal = std::make_shared<FlakyBackend>(10, ErrorKind::provider, false);
    auto c = with_retries(fatal, RetryPolicy{}, [](auto) {});
    EXPECT_THROW(c->complete(req("s", "u")), Error);
    EXPECT_EQ(fatal->attempts.load(), 1);
}

TEST(Remote, SendsChatRequestWithBearerFromEnvironment) {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& rs) {
        rs.set_content(ok_body("go east"), "application/json");
    };
    ::setenv("TTLFORGE_TEST_KEY", "sk-test-123", 1);
    RemoteBackendSpec spec;
    spec.base_url = server.url();
    spec.api_key_env = "TTLFORGE_TEST_KEY";
    spec.timeout = std::chrono::seconds(5);
    RemoteBackend b(spec);
    auto c = b.complete(req("sys", "user"));
    EXPECT_EQ(c.text, "go east");
    EXPECT_FALSE(c.truncated);
    ASSERT_EQ(server.seen_auth.size(), 1u);
    EXPECT_EQ(server.seen_auth[0], "Bearer sk-test-123");
    const auto& body = server.seen_bodies[0];
    EXPECT_EQ(body["model"], "m");
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "user");
    EXPECT_EQ(body["max_tokens"], 64);
    EXPECT_EQ(body["seed"], 7);
    ::unsetenv("TTLFORGE_TEST_KEY");
}

TEST(Remote, TruncationAndStatusHandling) {
    StubServer server;
    std::atomic<int> calls{0};
    server.handler = [&](const httplib::Request&, httplib::Response& rs) {
        const int n = calls++;
        if (n == 0) {
            rs.status = 429;
            rs.set_content("slow down", "text/plain");
        } else if (n == 1) {
            rs.set_content(ok_body("partial", "length"), "application/json");
        } else {
            rs.status = 400;
            rs.set_content("{\"error\":\"bad model\"}", "application/json");
        }
    };
    RemoteBackendSpec spec;
    spec.base_url = server.url();
    auto b = with_retries(std::make_shared<RemoteBackend>(spec), RetryPolicy{}, [](auto) {});
    auto c = b->complete(req("s", "u"));
    EXPECT_EQ(c.text, "partial");
    EXPECT_TRUE(c.truncated);
    try {
        b->complete(req("s", "u"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::provider);
        EXPECT_FALSE(e.retryable());
        EXPECT_NE(std::string(e.what()).find("{\"error\":\"bad model\"}"), std::string::npos);
    }
    EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, TransportFailureAndMissingKey) {
    RemoteBackendSpec spec;
    spec.base_url = "http://127.0.0.1:1/v1/chat/completions";
    spec.timeout = std::chrono::seconds(2);
    RemoteBackend b(spec);
    try {
        b.complete(req("s", "u"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::transport);
        EXPECT_TRUE(e.retryable());
    }
    spec.api_key_env = "TTLFORGE_DEFINITELY_UNSET";
    RemoteBackend nokey(spec);
    try {
        nokey.complete(req("s", "u"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
    spec.base_url = "no-scheme";
    EXPECT_THROW(RemoteBackend{spec}, Error);
}

TEST(Remote, MalformedPayloadIsProviderError) {
    EXPECT_THROW(completion_from_json(Json{{"choices", Json::array()}}), Error);
    EXPECT_EQ(completion_from_json(Json::parse(ok_body("x"))).text, "x");
}
