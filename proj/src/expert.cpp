#include "switchboard/expert.hpp"

#include <algorithm>

#include "switchboard/errors.hpp"
#include "switchboard/text.hpp"

namespace switchboard {

std::vector<ChatMessage> build_expert_messages(const AdapterCard& card, std::string_view query,
                                               const ConversationMemory& memory) {
    std::vector<ChatMessage> messages;
    if (!card.system_prompt.empty()) messages.push_back({Role::System, card.system_prompt});
    for (auto& m : memory.render()) messages.push_back(std::move(m));
    messages.push_back({Role::User, std::string(query)});
    return messages;
}

ExpertReply generate_reply(const AdapterCard& card, std::string_view query,
                           const ConversationMemory& memory, Backend& backend,
                           const RoutingDecision& decision, const ExpertOptions& options,
                           const Clock& clock) {
    if (text::trim(query).empty()) throw EmptyQuery();

    CompletionRequest req;
    req.model_id = card.model_id;
    req.max_tokens = options.max_tokens;
    req.temperature = options.temperature;
    req.messages = build_expert_messages(card, query, memory);

    const double start = clock.now();
    auto result = backend.complete(req);
    const double elapsed = std::max(0.0, clock.now() - start);

    ExpertReply reply;
    reply.text = std::move(result.text);
    reply.domain = card.name;
    reply.decision = decision;
    reply.decision.domain = card.name;
    reply.latency_expert = elapsed;
    reply.latency_total = elapsed;
    return reply;
}

} // namespace switchboard
