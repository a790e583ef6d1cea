#include "switchboard/workflow.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "switchboard/text.hpp"

namespace switchboard {

Workflow::Workflow(Backend& backend, SessionStore& sessions, WorkflowOptions options,
                   const Clock& clock, RandomRouter* random)
    : backend_(backend),
      sessions_(sessions),
      options_(std::move(options)),
      clock_(clock),
      random_(random) {}

void Workflow::emit(const TurnState& state, const TraceEntry& e) const {
    if (!options_.trace_sink) return;
    nlohmann::json line{{"ts", e.timestamp},
                        {"session", state.session_id},
                        {"node", e.node},
                        {"event", e.event},
                        {"domain", e.domain},
                        {"elapsed_ms", e.elapsed * 1000.0},
                        {"fallback", e.fallback}};
    *options_.trace_sink << line.dump() << '\n';
}

RoutingDecision Workflow::dry_route(const std::string& query, Strategy strategy,
                                    const Registry& registry) {
    RoutingContext ctx{registry, &backend_, random_, &clock_, options_.routing};
    return route(strategy, ctx, query);
}

TurnState Workflow::run_turn(const std::string& session_id, const std::string& query,
                             Strategy strategy, const Registry& registry) {
    TurnState state;
    state.session_id = session_id;
    state.query = query;
    const double start = clock_.now();

    if (text::trim(query).empty()) {
        state.error = TurnError{"input", "EmptyQuery", "query is empty"};
        return state;
    }

    return sessions_.with_session(session_id, [&](ConversationMemory& memory) {
        state.history_snapshot = memory.render();

        std::optional<std::string_view> previous;
        if (!memory.empty()) previous = memory.turns().back().user_text;

        auto record = [&](TraceEntry e) {
            e.timestamp = clock_.now();
            emit(state, e);
            state.trace.entries.push_back(std::move(e));
        };

        // Router node.
        const double router_start = clock_.now();
        RoutingContext ctx{registry, &backend_, random_, &clock_, options_.routing};
        try {
            state.decision = route(strategy, ctx, query, previous);
        } catch (const Error& e) {
            state.error = TurnError{"router", "RouterError", e.what()};
            record({"router", "failed", "", false, 0, clock_.now() - router_start});
            state.trace.total_elapsed = clock_.now() - start;
            return state;
        }
        record({"router", "routed", state.decision->domain, state.decision->used_fallback, 0,
                std::max(0.0, clock_.now() - router_start)});

        // Expert node, then the fallback edge.
        const AdapterCard* card = registry.find(state.decision->domain);
        if (!card) card = &registry.fallback();
        auto attempt = [&](const AdapterCard& c, const char* node) -> bool {
            const double t0 = clock_.now();
            try {
                state.reply = generate_reply(c, query, memory, backend_, *state.decision,
                                             options_.expert, clock_);
                record({node, "completed", c.name, c.is_fallback, 0,
                        std::max(0.0, clock_.now() - t0)});
                return true;
            } catch (const BackendError& e) {
                state.error = TurnError{node, std::string(to_string(e.kind())), e.what()};
            } catch (const Error& e) {
                state.error = TurnError{node, "ExpertError", e.what()};
            }
            record({node, "failed", c.name, c.is_fallback, 0, std::max(0.0, clock_.now() - t0)});
            return false;
        };

        bool ok = attempt(*card, "expert");
        if (!ok) {
            ok = attempt(registry.fallback(), "expert-fallback");
            if (ok) {
                state.decision->domain = registry.fallback().name;
                state.decision->used_fallback = true;
                state.reply->decision = *state.decision;
            }
        }

        if (ok) {
            state.error.reset();
            double ts = clock_.now();
            if (!memory.empty()) ts = std::max(ts, memory.turns().back().timestamp);
            sessions_.commit(memory, Turn{query, state.reply->text, state.reply->domain, ts});
            state.trace.total_elapsed = std::max(0.0, clock_.now() - start);
            double expert_time = 0.0;
            for (const auto& e : state.trace.entries) {
                if (e.node != "router") expert_time += e.elapsed;
            }
            state.reply->latency_expert = expert_time;
            state.reply->latency_total = state.trace.total_elapsed;
        } else {
            state.reply.reset();
            state.trace.total_elapsed = std::max(0.0, clock_.now() - start);
        }
        return state;
    });
}

LatencyBreakdown decompose_latency(const TurnState& state) {
    if (!state.ok()) throw NotTerminal();
    LatencyBreakdown out;
    for (const auto& e : state.trace.entries) {
        (e.node == "router" ? out.router : out.expert) += e.elapsed;
    }
    out.total = state.trace.total_elapsed;
    out.overhead = std::max(0.0, out.total - out.router - out.expert);
    return out;
}

} // namespace switchboard
