#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "switchboard/expert.hpp"
#include "switchboard/memory.hpp"
#include "switchboard/registry.hpp"
#include "switchboard/routing.hpp"

namespace switchboard {

struct TraceEntry {
    std::string node;  // router | expert | expert-fallback
    std::string event; // routed | completed | failed
    std::string domain;
    bool fallback = false;
    double timestamp = 0.0; // clock reading at node exit
    double elapsed = 0.0;
};

struct Trace {
    std::vector<TraceEntry> entries;
    double total_elapsed = 0.0;
};

struct TurnError {
    std::string node; // input | router | expert-fallback
    std::string kind; // EmptyQuery | Timeout | BackendUnavailable | ProtocolError | ...
    std::string message;
};

struct TurnState {
    std::string session_id;
    std::string query;
    std::vector<ChatMessage> history_snapshot;
    std::optional<RoutingDecision> decision;
    std::optional<ExpertReply> reply;
    std::optional<TurnError> error;
    Trace trace;

    bool ok() const { return reply.has_value(); }
};

struct LatencyBreakdown {
    double router = 0.0;
    double expert = 0.0;
    double overhead = 0.0;
    double total = 0.0;
};

class NotTerminal : public Error {
public:
    NotTerminal() : Error("turn state is not a terminal success") {}
};

struct WorkflowOptions {
    RoutingOptions routing{};
    ExpertOptions expert{};
    // One JSON line per node event when set.
    std::ostream* trace_sink = nullptr;
};

// Router node, then expert node; on expert failure one retry through the
// fallback card. Memory is committed only after a successful reply.
class Workflow {
public:
    Workflow(Backend& backend, SessionStore& sessions, WorkflowOptions options = {},
             const Clock& clock = steady_clock(), RandomRouter* random = nullptr);

    TurnState run_turn(const std::string& session_id, const std::string& query,
                       Strategy strategy, const Registry& registry);

    RoutingDecision dry_route(const std::string& query, Strategy strategy,
                              const Registry& registry);

    const WorkflowOptions& options() const { return options_; }
    SessionStore& sessions() { return sessions_; }
    Backend& backend() { return backend_; }
    const Clock& clock() const { return clock_; }

private:
    void emit(const TurnState& state, const TraceEntry& e) const;

    Backend& backend_;
    SessionStore& sessions_;
    WorkflowOptions options_;
    const Clock& clock_;
    RandomRouter* random_;
};

LatencyBreakdown decompose_latency(const TurnState& state);

} // namespace switchboard
