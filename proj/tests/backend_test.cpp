#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "stub_server.hpp"
#include "switchboard/backend.hpp"
#include "switchboard/registry.hpp"
#include "test_support.hpp"

using namespace switchboard;
using switchboard::testing::StubServer;

namespace {

CompletionRequest routing_request(const std::string& query) {
    CompletionRequest req;
    req.model_id = "base";
    req.max_tokens = 16;
    req.messages.push_back(
        {Role::User, render_routing_prompt(support::default_registry(), query)});
    return req;
}

CompletionRequest user_request(const std::string& model, const std::string& text) {
    CompletionRequest req;
    req.model_id = model;
    req.messages = {{Role::System, "sys"}, {Role::User, text}};
    return req;
}

} // namespace

TEST(Mock, OracleAnswersRoutingPromptWithLabel) {
    auto mock = support::oracle_backend();
    EXPECT_EQ(mock->complete(routing_request("What is aspirin made of?")).text, "Chemistry");
    EXPECT_EQ(mock->complete(routing_request("An unlabeled question")).text, "General");
}

TEST(Mock, OracleExpertReplyIsTagged) {
    auto mock = support::oracle_backend();
    const auto out = mock->complete(user_request("chemistry-lora", "What is aspirin made of?"));
    EXPECT_EQ(out.text, "[chemistry-lora] Answer to: What is aspirin made of?");
    EXPECT_EQ(out.token_estimate, 8);
}

TEST(Mock, OracleOnFixtureMatchesEveryLabel) {
    auto mock = support::oracle_backend();
    const auto fixture = support::fixture("routing_25.jsonl");
    ASSERT_EQ(fixture.size(), 25u);
    int matches = 0;
    for (const auto& r : fixture) {
        matches += mock->complete(routing_request(r.query)).text == r.expected_domain;
    }
    EXPECT_EQ(matches, 25);
}

TEST(Mock, ScriptedEcho) {
    MockBackend mock(MockBackend::Mode::Scripted, 0);
    mock.set_script({{"hello", "Hi there!"}});
    EXPECT_EQ(mock.complete(user_request("general-lora", "hello")).text, "Hi there!");
    EXPECT_EQ(mock.complete(user_request("general-lora", "other")).text, "");
}

TEST(Mock, DoesNotMutateRequest) {
    auto mock = support::oracle_backend();
    const auto req = user_request("ai-lora", "q");
    const auto copy = req;
    mock->complete(req);
    EXPECT_EQ(req.messages, copy.messages);
    EXPECT_EQ(req.model_id, copy.model_id);
}

TEST(Mock, SameSeedSameBehaviour) {
    const auto fixture = support::fixture("routing_25.jsonl");
    auto run = [&] {
        auto clock = std::make_shared<ManualClock>();
        MockBackend mock(MockBackend::Mode::LatencySim, 42);
        mock.set_labels(support::all_labels()).set_clock(clock).set_latency({{0.1, 0.3}, {2.0, 5.0}, 0.0});
        std::vector<std::pair<std::string, double>> out;
        for (int i = 0; i < 20; ++i) {
            const auto& q = fixture[i % fixture.size()].query;
            const auto r = mock.complete(routing_request(q));
            const auto e = mock.complete(user_request("general-lora", q));
            out.emplace_back(r.text + "|" + e.text, r.latency + e.latency);
        }
        return std::make_pair(out, clock->now());
    };
    EXPECT_EQ(run(), run());
}

TEST(Mock, LatencySimDrawsStayInBounds) {
    MockBackend mock(MockBackend::Mode::LatencySim, 9);
    for (int i = 0; i < 1000; ++i) {
        const double x = mock.draw({0.1, 0.3});
        ASSERT_GE(x, 0.1);
        ASSERT_LE(x, 0.3);
    }
}

TEST(Mock, LatencySimAdvancesVirtualClock) {
    auto clock = std::make_shared<ManualClock>();
    MockBackend mock(MockBackend::Mode::LatencySim, 1);
    mock.set_labels(support::all_labels()).set_clock(clock).set_latency({{0.1, 0.1}, {0.5, 0.5}, 0.0});
    const auto r = mock.complete(routing_request("What is aspirin made of?"));
    EXPECT_EQ(r.text, "Chemistry");
    EXPECT_NEAR(r.latency, 0.1, 1e-12);
    EXPECT_NEAR(clock->now(), 0.1, 1e-9);
    mock.complete(user_request("chemistry-lora", "x"));
    EXPECT_NEAR(clock->now(), 0.6, 1e-9);
}

TEST(Mock, ColdPenaltyOnlyWithoutHistory) {
    MockBackend mock(MockBackend::Mode::LatencySim, 1);
    mock.set_clock(std::make_shared<ManualClock>()).set_latency({{0, 0}, {1.0, 1.0}, 0.5});
    EXPECT_NEAR(mock.complete(user_request("m", "x")).latency, 1.5, 1e-12);
    auto warm = user_request("m", "x");
    warm.messages.insert(warm.messages.begin() + 1, {{Role::User, "a"}, {Role::Assistant, "b"}});
    EXPECT_NEAR(mock.complete(warm).latency, 1.0, 1e-12);
}

TEST(Mock, DelayBeyondDeadlineTimesOut) {
    auto clock = std::make_shared<ManualClock>();
    MockBackend mock(MockBackend::Mode::LatencySim, 1);
    mock.set_clock(clock).set_latency({{0, 0}, {5.0, 5.0}, 0.0}).set_deadline(2.0);
    try {
        mock.complete(user_request("medical-lora", "x"));
        FAIL() << "expected timeout";
    } catch (const BackendError& e) {
        EXPECT_EQ(e.kind(), BackendError::Kind::Timeout);
        EXPECT_EQ(e.model_id(), "medical-lora");
    }
    EXPECT_NEAR(clock->now(), 2.0, 1e-9); // never waits past the deadline
}

TEST(Mock, FaultInjection) {
    auto mock = support::oracle_backend();
    mock->fail_model("chemistry-lora");
    EXPECT_THROW(mock->complete(user_request("chemistry-lora", "x")), BackendError);
    EXPECT_NO_THROW(mock->complete(user_request("finance-lora", "x")));
    EXPECT_TRUE(mock->probe(1.0));
    mock->set_down(true);
    EXPECT_FALSE(mock->probe(1.0));
    EXPECT_THROW(mock->complete(user_request("finance-lora", "x")), BackendError);
}

TEST(Request, Validation) {
    CompletionRequest req;
    EXPECT_THROW(req.validate(), ValidationError);
    req.model_id = "m";
    EXPECT_THROW(req.validate(), ValidationError);
    req.messages = {{Role::User, "hi"}};
    EXPECT_NO_THROW(req.validate());
    req.messages = {{Role::User, ""}};
    EXPECT_THROW(req.validate(), ValidationError);
    req.messages = {{Role::User, "x"}, {Role::Assistant, ""}};
    EXPECT_NO_THROW(req.validate());
    req.temperature = -1;
    EXPECT_THROW(req.validate(), ValidationError);
}

TEST(Wire, RequestBodyLayout) {
    CompletionRequest req{"finance-lora", {{Role::System, "S"}, {Role::User, "Q"}}, 512, 0.5};
    EXPECT_EQ(wire_request_body(req),
              R"({"max_tokens":512,"messages":[{"content":"S","role":"system"},{"content":"Q","role":"user"}],"model":"finance-lora","temperature":0.5})");
}

TEST(Wire, ResponseParsing) {
    EXPECT_EQ(wire_response_text(StubServer::completion("Finance"), "m"), "Finance");
    EXPECT_THROW(wire_response_text("nope", "m"), BackendError);
    EXPECT_THROW(wire_response_text(R"({"choices": []})", "m"), BackendError);
    EXPECT_THROW(wire_response_text(R"({"choices": [{"message": {"content": 3}}]})", "m"),
                 BackendError);
}

TEST(Wire, EmbeddedQueryExtraction) {
    const auto prompt = render_routing_prompt(support::default_registry(), R"(say "hi" please)");
    EXPECT_EQ(embedded_routing_query(prompt), std::optional<std::string>(R"(say "hi" please)"));
    EXPECT_EQ(embedded_routing_query("plain text"), std::nullopt);
}

TEST(HttpBackend, RoundTripAgainstStub) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content(StubServer::completion("Chemistry"), "application/json");
    });
    HttpBackend backend({stub.url(), "secret", 5.0, 0});
    const auto req = routing_request("What is aspirin made of?");
    const auto out = backend.complete(req);
    EXPECT_EQ(out.text, "Chemistry");
    EXPECT_GE(out.latency, 0.0);
    ASSERT_EQ(stub.bodies().size(), 1u);
    EXPECT_EQ(stub.bodies()[0], wire_request_body(req));
    EXPECT_EQ(stub.auth_headers()[0], "Bearer secret");
    EXPECT_TRUE(backend.probe(2.0));
}

TEST(HttpBackend, BasePathPrefix) {
    httplib::Server server;
    server.Post("/proxy/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(StubServer::completion("ok"), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    HttpBackend backend({"http://127.0.0.1:" + std::to_string(port) + "/proxy/", "", 5.0, 0});
    EXPECT_EQ(backend.complete(user_request("m", "x")).text, "ok");
    server.stop();
    t.join();
}

TEST(HttpBackend, ServerErrorIsUnavailable) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    HttpBackend backend({stub.url(), "", 5.0, 0});
    try {
        backend.complete(user_request("chemistry-lora", "x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.kind(), BackendError::Kind::Unavailable);
        EXPECT_EQ(e.model_id(), "chemistry-lora");
    }
    EXPECT_EQ(stub.bodies().size(), 1u); // no hidden retries
}

TEST(HttpBackend, RetriesWhenConfigured) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    HttpBackend backend({stub.url(), "", 5.0, 2});
    EXPECT_THROW(backend.complete(user_request("m", "x")), BackendError);
    EXPECT_EQ(stub.bodies().size(), 3u);
}

TEST(HttpBackend, MalformedBodyIsProtocolError) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"unexpected": true})", "application/json");
    });
    HttpBackend backend({stub.url(), "", 5.0, 0});
    try {
        backend.complete(user_request("m", "x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.kind(), BackendError::Kind::Protocol);
    }
}

TEST(HttpBackend, SlowServerTimesOut) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(800));
        res.set_content(StubServer::completion("late"), "application/json");
    });
    HttpBackend backend({stub.url(), "", 0.2, 0});
    const auto t0 = std::chrono::steady_clock::now();
    try {
        backend.complete(user_request("m", "x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.kind(), BackendError::Kind::Timeout);
    }
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(700));
}

TEST(HttpBackend, ConnectionRefusedIsUnavailable) {
    // Nothing listens on port 1, so the connect is refused outright.
    HttpBackend backend({"http://127.0.0.1:1", "", 1.0, 0});
    try {
        backend.complete(user_request("m", "x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.kind(), BackendError::Kind::Unavailable);
    }
    EXPECT_FALSE(backend.probe(0.5));
}

TEST(HttpBackend, EnvOptions) {
    setenv("SWITCHBOARD_BACKEND_URL", "http://env-host:1234", 1);
    setenv("SWITCHBOARD_API_KEY", "k", 1);
    auto o = HttpBackend::options_from_env();
    EXPECT_EQ(o.base_url, "http://env-host:1234");
    EXPECT_EQ(o.api_key, "k");
    EXPECT_EQ(HttpBackend::options_from_env("http://explicit").base_url, "http://explicit");
    unsetenv("SWITCHBOARD_BACKEND_URL");
    unsetenv("SWITCHBOARD_API_KEY");
}
