#pragma once

#include <string>
#include <string_view>

#include "switchboard/backend.hpp"
#include "switchboard/clock.hpp"
#include "switchboard/memory.hpp"
#include "switchboard/registry.hpp"
#include "switchboard/routing.hpp"

namespace switchboard {

struct ExpertOptions {
    int max_tokens = 512;
    double temperature = 0.7;
};

struct ExpertReply {
    std::string text;
    std::string domain;
    RoutingDecision decision;
    double latency_expert = 0.0;
    double latency_total = 0.0;
};

// [system prompt] + history + [query], in that order.
std::vector<ChatMessage> build_expert_messages(const AdapterCard& card, std::string_view query,
                                               const ConversationMemory& memory);

// One completion through the card's adapter. Backend errors propagate; memory is
// not touched. `decision` is attached to the reply as-is.
ExpertReply generate_reply(const AdapterCard& card, std::string_view query,
                           const ConversationMemory& memory, Backend& backend,
                           const RoutingDecision& decision = {}, const ExpertOptions& options = {},
                           const Clock& clock = steady_clock());

} // namespace switchboard
