#include "switchboard/routing.hpp"

#include <algorithm>

#include "switchboard/errors.hpp"
#include "switchboard/text.hpp"

namespace switchboard {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::Semantic: return "semantic";
    case Strategy::Keyword: return "keyword";
    case Strategy::Hybrid: return "hybrid";
    case Strategy::Random: return "random";
    }
    return "semantic";
}

std::string_view to_string(KeywordMode m) {
    return m == KeywordMode::Substring ? "substring" : "word";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "semantic") return Strategy::Semantic;
    if (s == "keyword") return Strategy::Keyword;
    if (s == "hybrid") return Strategy::Hybrid;
    if (s == "random") return Strategy::Random;
    throw ValidationError("unknown strategy '" + std::string(s) + "'");
}

KeywordMode parse_keyword_mode(std::string_view s) {
    if (s == "substring") return KeywordMode::Substring;
    if (s == "word") return KeywordMode::Word;
    throw ValidationError("unknown keyword mode '" + std::string(s) + "'");
}

std::size_t RandomRouter::next(std::size_t n) {
    std::lock_guard lk(mu_);
    return static_cast<std::size_t>(rng_() % n);
}

namespace {

std::string_view strip_decoration(std::string_view s) {
    constexpr std::string_view junk = " \t\r\n\"'`*.,;:!?()[]{}<>";
    const auto b = s.find_first_not_of(junk);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(junk);
    return s.substr(b, e - b + 1);
}

struct Elapsed {
    const Clock& clock;
    double start = clock.now();
    double operator()() const { return std::max(0.0, clock.now() - start); }
};

RoutingDecision fallback_decision(const Registry& registry, Strategy strategy) {
    RoutingDecision d;
    d.domain = registry.fallback().name;
    d.strategy = strategy;
    d.used_fallback = true;
    return d;
}

// First index of the maximum; registry order breaks ties.
std::size_t argmax(const std::vector<int>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::map<std::string, int> named_scores(const Registry& registry, const std::vector<int>& v) {
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out[registry.cards()[i].name] = v[i];
    return out;
}

} // namespace

std::optional<std::string> parse_domain(std::string_view raw, const Registry& registry) {
    const auto folded = text::fold(text::trim(raw));
    const auto core = strip_decoration(folded);
    if (core.empty()) return std::nullopt;

    if (const auto* card = registry.find(core)) return card->name;

    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < registry.size(); ++i) {
        const auto& card = registry.cards()[i];
        bool found = text::count_whole_word(folded, text::fold(card.name)) > 0;
        for (const auto& alias : card.aliases) {
            found = found || text::count_whole_word(folded, text::fold(alias)) > 0;
        }
        if (!found) continue;
        if (hit) return std::nullopt; // ambiguous
        hit = i;
    }
    if (!hit) return std::nullopt;
    return registry.cards()[*hit].name;
}

std::vector<int> keyword_scores(const Registry& registry, std::string_view query,
                                KeywordMode mode) {
    const auto folded = text::fold(query);
    std::vector<int> scores(registry.size(), 0);
    if (mode == KeywordMode::Substring) {
        // Keywords are compared against single tokens, so a keyword hits any
        // token containing it and phrases spanning tokens never hit.
        const auto toks = text::tokens(folded);
        for (std::size_t i = 0; i < registry.size(); ++i) {
            for (const auto& kw : registry.cards()[i].keywords) {
                for (const auto& tok : toks) {
                    if (tok.find(kw) != std::string::npos) ++scores[i];
                }
            }
        }
    } else {
        for (std::size_t i = 0; i < registry.size(); ++i) {
            for (const auto& kw : registry.cards()[i].keywords) {
                scores[i] += static_cast<int>(text::count_whole_word(folded, kw));
            }
        }
    }
    return scores;
}

RoutingDecision route_semantic(const RoutingContext& ctx, std::string_view query,
                               std::optional<std::string_view> previous_user_message) {
    if (text::trim(query).empty()) throw EmptyQuery();
    if (!ctx.backend) throw ValidationError("semantic routing needs a backend");
    Elapsed elapsed{*ctx.clock};

    CompletionRequest req;
    req.model_id = ctx.options.router_model_id;
    req.max_tokens = ctx.options.router_max_tokens;
    req.temperature = ctx.options.router_temperature;
    req.messages.push_back(
        {Role::User, render_routing_prompt(ctx.registry, query,
                                           ctx.options.router_context ? previous_user_message
                                                                      : std::nullopt)});

    RoutingDecision d;
    d.strategy = Strategy::Semantic;
    try {
        d.raw_output = ctx.backend->complete(req).text;
    } catch (const BackendError&) {
        d = fallback_decision(ctx.registry, Strategy::Semantic);
        d.elapsed = elapsed();
        return d;
    }
    if (auto name = parse_domain(d.raw_output, ctx.registry)) {
        d.domain = std::move(*name);
    } else {
        d.domain = ctx.registry.fallback().name;
        d.used_fallback = true;
    }
    d.elapsed = elapsed();
    return d;
}

RoutingDecision route_keyword(const Registry& registry, std::string_view query, KeywordMode mode,
                              const Clock& clock) {
    if (text::trim(query).empty()) throw EmptyQuery();
    Elapsed elapsed{clock};
    const auto scores = keyword_scores(registry, query, mode);
    const auto best = argmax(scores);

    RoutingDecision d;
    d.strategy = Strategy::Keyword;
    d.keyword_scores = named_scores(registry, scores);
    if (scores[best] == 0) {
        d.domain = registry.fallback().name;
        d.used_fallback = true;
    } else {
        d.domain = registry.cards()[best].name;
    }
    d.elapsed = elapsed();
    return d;
}

RoutingDecision route_hybrid(const RoutingContext& ctx, std::string_view query,
                             std::optional<std::string_view> previous_user_message) {
    Elapsed elapsed{*ctx.clock};
    auto d = route_semantic(ctx, query, previous_user_message);
    const auto scores = keyword_scores(ctx.registry, query, ctx.options.keyword_mode);
    const auto best = argmax(scores);
    const auto& winner = ctx.registry.cards()[best].name;

    d.strategy = Strategy::Hybrid;
    d.keyword_scores = named_scores(ctx.registry, scores);
    if (d.used_fallback && scores[best] > 0) {
        d.domain = winner;
        d.used_fallback = false;
    } else if (!d.used_fallback && winner != d.domain &&
               scores[best] >= ctx.options.override_threshold) {
        d.domain = winner;
    }
    d.elapsed = elapsed();
    return d;
}

RoutingDecision route_random(const Registry& registry, RandomRouter& random, const Clock& clock) {
    Elapsed elapsed{clock};
    RoutingDecision d;
    d.strategy = Strategy::Random;
    d.domain = registry.cards()[random.next(registry.size())].name;
    d.elapsed = elapsed();
    return d;
}

RoutingDecision route(Strategy strategy, const RoutingContext& ctx, std::string_view query,
                      std::optional<std::string_view> previous_user_message) {
    switch (strategy) {
    case Strategy::Semantic: return route_semantic(ctx, query, previous_user_message);
    case Strategy::Keyword:
        return route_keyword(ctx.registry, query, ctx.options.keyword_mode, *ctx.clock);
    case Strategy::Hybrid: return route_hybrid(ctx, query, previous_user_message);
    case Strategy::Random:
        if (text::trim(query).empty()) throw EmptyQuery();
        if (!ctx.random) throw ValidationError("random routing needs a seeded generator");
        return route_random(ctx.registry, *ctx.random, *ctx.clock);
    }
    throw ValidationError("unknown strategy");
}

} // namespace switchboard
