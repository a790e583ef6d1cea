#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "switchboard/backend.hpp"
#include "switchboard/clock.hpp"
#include "switchboard/registry.hpp"

namespace switchboard {

enum class Strategy { Semantic, Keyword, Hybrid, Random };
enum class KeywordMode { Substring, Word };

std::string_view to_string(Strategy s);
std::string_view to_string(KeywordMode m);
// Throw ValidationError on unknown names.
Strategy parse_strategy(std::string_view s);
KeywordMode parse_keyword_mode(std::string_view s);

struct RoutingDecision {
    std::string domain; // canonical card name
    Strategy strategy = Strategy::Semantic;
    std::string raw_output;
    bool used_fallback = false;
    std::map<std::string, int> keyword_scores;
    double elapsed = 0.0;

    bool operator==(const RoutingDecision&) const = default;
};

// Seeded uniform choice over the registry; draws are serialized so a fixed
// call order yields a fixed decision sequence.
class RandomRouter {
public:
    explicit RandomRouter(std::uint64_t seed) : rng_(seed) {}

    std::size_t next(std::size_t n);

private:
    std::mutex mu_;
    std::mt19937_64 rng_;
};

struct RoutingOptions {
    KeywordMode keyword_mode = KeywordMode::Substring;
    int override_threshold = 3;
    std::string router_model_id = "base";
    int router_max_tokens = 16;
    double router_temperature = 0.0;
    // Show the previous user message to the router.
    bool router_context = false;
};

// Everything a router needs besides the query.
struct RoutingContext {
    const Registry& registry;
    Backend* backend = nullptr;      // semantic and hybrid
    RandomRouter* random = nullptr;  // random
    const Clock* clock = &steady_clock();
    RoutingOptions options{};
};

// Maps raw router output onto a card name, or nullopt when the output is
// invalid or ambiguous.
std::optional<std::string> parse_domain(std::string_view raw, const Registry& registry);

// Keyword hit count per card, in registry order.
std::vector<int> keyword_scores(const Registry& registry, std::string_view query, KeywordMode mode);

RoutingDecision route_semantic(const RoutingContext& ctx, std::string_view query,
                               std::optional<std::string_view> previous_user_message = {});
RoutingDecision route_keyword(const Registry& registry, std::string_view query, KeywordMode mode,
                              const Clock& clock = steady_clock());
RoutingDecision route_hybrid(const RoutingContext& ctx, std::string_view query,
                             std::optional<std::string_view> previous_user_message = {});
RoutingDecision route_random(const Registry& registry, RandomRouter& random,
                             const Clock& clock = steady_clock());

RoutingDecision route(Strategy strategy, const RoutingContext& ctx, std::string_view query,
                      std::optional<std::string_view> previous_user_message = {});

} // namespace switchboard
