#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "switchboard/errors.hpp"
#include "switchboard/service.hpp"
#include "test_support.hpp"

using namespace switchboard;
using nlohmann::json;

namespace {

ServiceConfig base_config() {
    ServiceConfig c;
    c.config_path = support::config_path();
    c.port = 0;
    c.deadline = 5.0;
    return c;
}

json body(const HttpResponse& r) { return json::parse(r.body); }

std::string chat_body(const std::string& message, const std::string& strategy = "",
                      const std::string& session = "s1") {
    json j{{"session_id", session}, {"message", message}};
    if (!strategy.empty()) j["strategy"] = strategy;
    return j.dump();
}

} // namespace

TEST(Service, ChatHelloWithScriptedMockLandsOnGeneral) {
    auto mock = std::make_shared<MockBackend>(MockBackend::Mode::Scripted, 1);
    mock->set_script({{"hello", "Hi there."}});
    Service svc(base_config(), mock);
    const auto r = svc.handle("POST", "/chat", chat_body("hello"));
    ASSERT_EQ(r.status, 200) << r.body;
    const auto j = body(r);
    EXPECT_EQ(j["domain"], "General");
    EXPECT_EQ(j["reply"], "Hi there.");
    EXPECT_EQ(j["strategy"], "semantic");
    EXPECT_EQ(j["trace_id"], "s1-000001");
    for (const char* k : {"router", "expert", "overhead", "total"}) {
        EXPECT_GE(j["latency"][k].get<double>(), 0.0) << k;
    }
    EXPECT_EQ(svc.sessions().session_length("s1"), 1u);
}

TEST(Service, ChatOracleRoutesAndRemembers) {
    Service svc(base_config(), support::oracle_backend());
    const auto r = svc.handle("POST", "/chat",
                              chat_body("How do stocks differ from bonds?"));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(body(r)["domain"], "Finance");
    EXPECT_EQ(body(r)["used_fallback"], false);
    EXPECT_EQ(svc.sessions().session_length("s1"), 1u);
}

TEST(Service, KeywordStrategyFalsePartialMatch) {
    Service svc(base_config(), support::oracle_backend());
    const auto r =
        svc.handle("POST", "/chat", chat_body("What are the risks of high blood pressure?", "keyword"));
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(body(r)["domain"], "General");
    EXPECT_EQ(body(r)["strategy"], "keyword");
}

TEST(Service, BadRequests) {
    Service svc(base_config(), support::oracle_backend());
    EXPECT_EQ(svc.handle("POST", "/chat", chat_body("hi", "teleport")).status, 422);
    EXPECT_EQ(svc.handle("POST", "/chat", chat_body("")).status, 400);
    EXPECT_EQ(svc.handle("POST", "/chat", chat_body("   ")).status, 400);
    EXPECT_EQ(svc.handle("POST", "/chat", "not json").status, 400);
    EXPECT_EQ(svc.handle("POST", "/chat", R"({"message":"hi"})").status, 400);
    EXPECT_EQ(svc.handle("GET", "/nowhere").status, 404);
    EXPECT_EQ(svc.sessions().session_length("s1"), 0u);
}

TEST(Service, AdaptersListPublicFieldsInOrder) {
    Service svc(base_config(), support::oracle_backend());
    const auto j = body(svc.handle("GET", "/adapters"));
    ASSERT_EQ(j.size(), 5u);
    const auto& cards = support::default_registry().cards();
    for (std::size_t i = 0; i < cards.size(); ++i) {
        EXPECT_EQ(j[i]["name"], cards[i].name);
        EXPECT_EQ(j[i]["description"], cards[i].description);
        EXPECT_EQ(j[i]["is_fallback"], cards[i].is_fallback);
        EXPECT_FALSE(j[i].contains("system_prompt"));
        EXPECT_FALSE(j[i].contains("model_id"));
    }
}

TEST(Service, ReloadPicksUpSixthCard) {
    const auto dir = std::filesystem::temp_directory_path() / "switchboard_service_reload";
    std::filesystem::create_directories(dir);
    const auto path = dir / "adapters.json";
    std::filesystem::copy_file(support::config_path(), path,
                               std::filesystem::copy_options::overwrite_existing);
    auto cfg = base_config();
    cfg.config_path = path;
    Service svc(cfg, support::oracle_backend());
    ASSERT_EQ(body(svc.handle("GET", "/adapters")).size(), 5u);

    auto cards = support::default_registry().cards();
    cards.push_back({"Legal", "Law, contracts, legal questions", "You are a legal expert.",
                     {"contract", "lawsuit"}, {}, "legal-lora", false});
    {
        std::ofstream out(path);
        out << serialize_registry(Registry(cards));
    }
    EXPECT_EQ(svc.handle("POST", "/reload").status, 200);
    const auto j = body(svc.handle("GET", "/adapters"));
    ASSERT_EQ(j.size(), 6u);
    EXPECT_EQ(j[5]["name"], "Legal");

    {
        std::ofstream out(path);
        out << "{ broken";
    }
    EXPECT_EQ(svc.handle("POST", "/reload").status, 422);
    EXPECT_EQ(body(svc.handle("GET", "/adapters")).size(), 6u);
    std::filesystem::remove_all(dir);
}

TEST(Service, RouteIsDryRun) {
    Service svc(base_config(), support::oracle_backend());
    const auto r = svc.handle("POST", "/route", json{{"message", "What is aspirin made of?"}}.dump());
    ASSERT_EQ(r.status, 200) << r.body;
    const auto j = body(r);
    EXPECT_EQ(j["domain"], "Chemistry");
    EXPECT_FALSE(j.contains("keyword_scores"));
    EXPECT_TRUE(svc.sessions().session_ids().empty());

    for (const char* s : {"keyword", "hybrid"}) {
        const auto k = body(svc.handle(
            "POST", "/route", json{{"message", "What is aspirin made of?"}, {"strategy", s}}.dump()));
        EXPECT_TRUE(k.contains("keyword_scores")) << s;
        EXPECT_EQ(k["keyword_scores"].size(), 5u);
    }
}

TEST(Service, HealthReflectsBackend) {
    auto mock = support::oracle_backend();
    Service svc(base_config(), mock);
    auto j = body(svc.handle("GET", "/health"));
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["backend_reachable"], true);
    EXPECT_EQ(j["adapters_loaded"], 5);
    mock->set_down(true);
    j = body(svc.handle("GET", "/health"));
    EXPECT_EQ(j["status"], "degraded");
    EXPECT_EQ(j["backend_reachable"], false);
}

TEST(Service, SingleModelFailureUsesFallback) {
    auto mock = support::oracle_backend();
    mock->fail_model("finance-lora");
    Service svc(base_config(), mock);
    const auto r = svc.handle("POST", "/chat",
                              chat_body("How do stocks differ from bonds?"));
    ASSERT_EQ(r.status, 200) << r.body;
    const auto j = body(r);
    EXPECT_EQ(j["domain"], "General");
    EXPECT_FALSE(j["reply"].get<std::string>().empty());
    ASSERT_EQ(j["trace"].size(), 3u);
    EXPECT_EQ(j["trace"][1]["event"], "failed");
    EXPECT_EQ(j["trace"][2]["node"], "expert-fallback");
    EXPECT_EQ(body(svc.handle("GET", "/metrics"))["fallbacks"], 1);
}

TEST(Service, TotalOutageIs502AndServiceSurvives) {
    auto mock = support::oracle_backend();
    Service svc(base_config(), mock);
    mock->set_down(true);
    const auto r = svc.handle("POST", "/chat", chat_body("Explain photosynthesis"));
    EXPECT_EQ(r.status, 502);
    EXPECT_EQ(body(r)["kind"], "BackendUnavailable");
    EXPECT_EQ(body(svc.handle("GET", "/health"))["status"], "degraded");
    EXPECT_EQ(svc.sessions().session_length("s1"), 0u);
    mock->set_down(false);
    EXPECT_EQ(svc.handle("POST", "/chat", chat_body("Explain photosynthesis")).status, 200);
}

TEST(Service, TraceSinkGetsOneLinePerNode) {
    std::ostringstream sink;
    Service svc(base_config(), support::oracle_backend());
    svc.set_trace_sink(&sink);
    ASSERT_EQ(svc.handle("POST", "/chat", chat_body("hello")).status, 200);
    std::istringstream lines(sink.str());
    int n = 0;
    for (std::string line; std::getline(lines, line); ++n) {
        EXPECT_EQ(json::parse(line)["session"], "s1");
    }
    EXPECT_EQ(n, 2);
}

TEST(Service, ConfigValidation) {
    auto c = base_config();
    c.deadline = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = base_config();
    c.memory_cap = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    EXPECT_TRUE(is_mock_target("mock"));
    EXPECT_TRUE(is_mock_target("mock:latency_sim"));
    EXPECT_FALSE(is_mock_target("http://localhost:8000"));
    EXPECT_THROW(make_backend({"mock:telepathy"}), ValidationError);
}

TEST(Service, LiveServerOverHttp) {
    Service svc(base_config(), support::oracle_backend());
    const int port = svc.bind();
    ASSERT_GT(port, 0);
    std::thread t([&] { svc.serve(); });

    httplib::Client cli("127.0.0.1", port);
    auto health = cli.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    auto chat = cli.Post("/chat", chat_body("What causes a common cold?"), "application/json");
    ASSERT_TRUE(chat);
    EXPECT_EQ(chat->status, 200);
    EXPECT_EQ(json::parse(chat->body)["domain"], "Medical");
    auto bad = cli.Post("/chat", chat_body("x", "teleport"), "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 422);

    svc.stop();
    t.join();
}
