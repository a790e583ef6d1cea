#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "switchboard/errors.hpp"
#include "switchboard/registry.hpp"
#include "test_support.hpp"

using namespace switchboard;
using nlohmann::json;

namespace {

json card(const std::string& name, bool fallback = false, json aliases = json::array(),
          json keywords = json::array({"k"})) {
    return {{"name", name},          {"description", name + " things"},
            {"system_prompt", "You are " + name}, {"keywords", keywords},
            {"aliases", aliases},    {"model_id", name + "-lora"},
            {"is_fallback", fallback}};
}

std::string config(std::initializer_list<json> cards) {
    return json{{"adapters", json(cards)}}.dump();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(Registry, LoadsDefaultConfigInFileOrder) {
    const auto& r = support::default_registry();
    ASSERT_EQ(r.size(), 5u);
    std::vector<std::string> names;
    for (const auto& c : r.cards()) names.push_back(c.name);
    EXPECT_EQ(names, (std::vector<std::string>{"General", "Chemistry", "Finance", "AI/Technology",
                                               "Medical"}));
    EXPECT_EQ(r.fallback().name, "General");
    EXPECT_EQ(r.find("medical")->system_prompt,
              "You are a medical expert. Provide medically accurate information and include "
              "disclaimers or referrals to professionals when relevant.");
}

TEST(Registry, AliasesResolveCaseInsensitively) {
    const auto& r = support::default_registry();
    ASSERT_NE(r.find("ai/gpt"), nullptr);
    EXPECT_EQ(r.find("AI/GPT")->name, "AI/Technology");
    EXPECT_EQ(r.find("  finance ")->name, "Finance");
    EXPECT_EQ(r.find("Legal"), nullptr);
}

TEST(Registry, RejectsTwoFallbacks) {
    EXPECT_THROW(parse_registry(config({card("A", true), card("B", true)})), ValidationError);
}

TEST(Registry, RejectsNoFallback) {
    EXPECT_THROW(parse_registry(config({card("A"), card("B")})), ValidationError);
}

TEST(Registry, RejectsAliasCollidingWithAnotherName) {
    EXPECT_THROW(parse_registry(config({card("General", true), card("Finance"),
                                        card("Money", false, json::array({"finance"}))})),
                 ValidationError);
}

TEST(Registry, CaseFoldCollisionMatchesPairwiseOracle) {
    // Brute force: every label pair across distinct cards, compared case-folded.
    const std::vector<std::vector<std::string>> label_sets[] = {
        {{"Finance"}, {"Money", "finance"}},
        {{"Finance"}, {"Money", "Cash"}},
        {{"AI", "ai/gpt"}, {"Tech", "AI/GPT"}},
        {{"Med", "Health"}, {"Chem", "HEALTHY"}},
    };
    for (const auto& sets : label_sets) {
        bool collide = false;
        for (const auto& a : sets[0]) {
            for (const auto& b : sets[1]) {
                std::string fa = a, fb = b;
                std::transform(fa.begin(), fa.end(), fa.begin(), ::tolower);
                std::transform(fb.begin(), fb.end(), fb.begin(), ::tolower);
                collide = collide || fa == fb;
            }
        }
        json a = card(sets[0][0], true,
                      json(std::vector<std::string>(sets[0].begin() + 1, sets[0].end())));
        json b = card(sets[1][0], false,
                      json(std::vector<std::string>(sets[1].begin() + 1, sets[1].end())));
        if (collide) {
            EXPECT_THROW(parse_registry(config({a, b})), ValidationError) << sets[0][0];
        } else {
            EXPECT_NO_THROW(parse_registry(config({a, b}))) << sets[0][0];
        }
    }
}

TEST(Registry, RejectsDuplicateNames) {
    EXPECT_THROW(parse_registry(config({card("A", true), card("a")})), ValidationError);
}

TEST(Registry, RejectsEmptyKeyword) {
    EXPECT_THROW(parse_registry(config({card("A", true), card("B", false, json::array(),
                                                              json::array({"ok", "  "}))})),
                 ValidationError);
}

TEST(Registry, NeedsTwoCards) {
    EXPECT_THROW(parse_registry(config({card("A", true)})), ValidationError);
}

TEST(Registry, KeywordsAreCaseFolded) {
    const auto r = parse_registry(
        config({card("A", true), card("B", false, json::array(), json::array({"Machine Learning"}))}));
    EXPECT_EQ(r.cards()[1].keywords, std::vector<std::string>{"machine learning"});
}

TEST(Registry, ParseErrors) {
    EXPECT_THROW(parse_registry("{not json"), ParseError);
    EXPECT_THROW(parse_registry(R"({"adapters": 3})"), ParseError);
    EXPECT_THROW(parse_registry(R"({"adapters": [], "extra": 1})"), ParseError);
    json bad = card("A", true);
    bad["color"] = "blue";
    EXPECT_THROW(parse_registry(config({bad, card("B")})), ParseError);
    json missing = card("B");
    missing.erase("model_id");
    EXPECT_THROW(parse_registry(config({card("A", true), missing})), ParseError);
    json wrong_type = card("B");
    wrong_type["keywords"] = "k";
    EXPECT_THROW(parse_registry(config({card("A", true), wrong_type})), ParseError);
    EXPECT_THROW(load_registry("/nonexistent/adapters.json"), ParseError);
}

TEST(Registry, SerializeRoundTrips) {
    const auto& r = support::default_registry();
    EXPECT_EQ(parse_registry(serialize_registry(r)), r);
}

TEST(RoutingPrompt, ListsEveryCardOnceWithQuery) {
    const auto& r = support::default_registry();
    const auto prompt = render_routing_prompt(r, "What is photosynthesis?");
    EXPECT_NE(prompt.find("Query: \"What is photosynthesis?\""), std::string::npos);
    EXPECT_NE(prompt.find("Available Domain Experts:\n"), std::string::npos);
    for (const auto& c : r.cards()) {
        const auto bullet = "- " + c.name + " - " + c.description + "\n";
        const auto first = prompt.find(bullet);
        ASSERT_NE(first, std::string::npos) << c.name;
        EXPECT_EQ(prompt.find(bullet, first + 1), std::string::npos) << c.name;
    }
    EXPECT_NE(prompt.find("- If unsure or the query is general/casual, choose General\n"),
              std::string::npos);
    const std::string tail = "- Respond with ONLY the domain name\n";
    EXPECT_EQ(prompt.substr(prompt.size() - tail.size()), tail);
}

TEST(RoutingPrompt, MatchesExpectedLayout) {
    const auto& r = support::default_registry();
    const std::string expected =
        "Analyze this user query and select the most appropriate domain expert to handle it.\n"
        "\n"
        "Query: \"What is photosynthesis?\"\n"
        "\n"
        "Available Domain Experts:\n"
        "- General - For casual conversation, greetings, general knowledge, everyday questions\n"
        "- Chemistry - For chemical compounds, reactions, molecules, laboratory procedures\n"
        "- Finance - For money, investments, stocks, banking, economics, trading\n"
        "- AI/Technology - For artificial intelligence, machine learning, programming, algorithms\n"
        "- Medical - For health, diseases, treatments, symptoms, anatomy, medicine\n"
        "\n"
        "Instructions:\n"
        "- Analyze the query carefully\n"
        "- Consider the main topic and intent\n"
        "- Choose the domain expert that best matches the query\n"
        "- If unsure or the query is general/casual, choose General\n"
        "- Respond with ONLY the domain name\n";
    EXPECT_EQ(render_routing_prompt(r, "What is photosynthesis?"), expected);
}

TEST(RoutingPrompt, EmptyQueryRejected) {
    EXPECT_THROW(render_routing_prompt(support::default_registry(), ""), EmptyQuery);
    EXPECT_THROW(render_routing_prompt(support::default_registry(), " \n\t"), EmptyQuery);
}

TEST(RoutingPrompt, IsPure) {
    const auto& r = support::default_registry();
    EXPECT_EQ(render_routing_prompt(r, "q?"), render_routing_prompt(r, "q?"));
}

TEST(RoutingPrompt, AddingCardAddsExactlyOneLine) {
    const auto& base = support::default_registry();
    auto cards = base.cards();
    cards.push_back({"Legal", "For contracts, law, regulations", "You are a legal expert.",
                     {"contract"}, {}, "legal-lora", false});
    const Registry extended(cards);

    const auto before = lines(render_routing_prompt(base, "Is this contract valid?"));
    const auto after = lines(render_routing_prompt(extended, "Is this contract valid?"));
    ASSERT_EQ(after.size(), before.size() + 1);

    // Line diff: removing the single new line must give back the old render.
    std::vector<std::string> added;
    std::size_t i = 0;
    for (const auto& line : after) {
        if (i < before.size() && line == before[i]) {
            ++i;
        } else {
            added.push_back(line);
        }
    }
    EXPECT_EQ(i, before.size());
    EXPECT_EQ(added, std::vector<std::string>{"- Legal - For contracts, law, regulations"});
}

TEST(RoutingPrompt, FallbackNameIsConfigDriven) {
    auto cards = support::default_registry().cards();
    for (auto& c : cards) c.is_fallback = c.name == "Finance";
    const Registry r(cards);
    EXPECT_NE(render_routing_prompt(r, "x").find("choose Finance\n"), std::string::npos);
}

TEST(RoutingPrompt, OptionalPreviousMessage) {
    const auto& r = support::default_registry();
    const auto with = render_routing_prompt(r, "and the side effects?", "Tell me about aspirin");
    EXPECT_NE(with.find("Previous user message: \"Tell me about aspirin\""), std::string::npos);
    EXPECT_EQ(render_routing_prompt(r, "q", std::nullopt), render_routing_prompt(r, "q"));
}
