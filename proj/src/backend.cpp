#include "switchboard/backend.hpp"

#include <thread>

#include <nlohmann/json.hpp>

#include "switchboard/text.hpp"

namespace switchboard {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

Role parse_role(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    throw ValidationError("unknown chat role '" + std::string(s) + "'");
}

void CompletionRequest::validate() const {
    if (model_id.empty()) throw ValidationError("completion request has no model id");
    if (messages.empty()) throw ValidationError("completion request has no messages");
    if (max_tokens <= 0) throw ValidationError("max_tokens must be positive");
    if (temperature < 0) throw ValidationError("temperature must be >= 0");
    for (const auto& m : messages) {
        if (m.content.empty() && m.role != Role::Assistant) {
            throw ValidationError("empty " + std::string(to_string(m.role)) + " message");
        }
    }
}

BackendError::BackendError(Kind kind, std::string model_id, const std::string& detail)
    : Error(std::string(to_string(kind)) + " [" + model_id + "]: " + detail),
      kind_(kind),
      model_id_(std::move(model_id)) {}

std::string_view to_string(BackendError::Kind kind) {
    switch (kind) {
    case BackendError::Kind::Timeout: return "Timeout";
    case BackendError::Kind::Unavailable: return "BackendUnavailable";
    case BackendError::Kind::Protocol: return "ProtocolError";
    }
    return "BackendUnavailable";
}

std::int64_t estimate_tokens(std::string_view s) {
    std::int64_t n = 0;
    bool in_word = false;
    for (char c : s) {
        const bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r';
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

std::string wire_request_body(const CompletionRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json body{{"model", req.model_id},
              {"messages", std::move(messages)},
              {"max_tokens", req.max_tokens},
              {"temperature", req.temperature}};
    return body.dump();
}

std::string wire_response_text(std::string_view body, const std::string& model_id) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
        throw BackendError(BackendError::Kind::Protocol, model_id, "response is not JSON");
    }
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) {
            throw BackendError(BackendError::Kind::Protocol, model_id,
                               "choices[0].message.content is not a string");
        }
        return content.get<std::string>();
    } catch (const json::exception&) {
        throw BackendError(BackendError::Kind::Protocol, model_id,
                           "response lacks choices[0].message.content");
    }
}

std::optional<std::string> embedded_routing_query(std::string_view prompt) {
    constexpr std::string_view marker = "\nQuery: \"";
    constexpr std::string_view experts = "\n\nAvailable Domain Experts:";
    const auto start = prompt.find(marker);
    if (start == std::string_view::npos) return std::nullopt;
    const auto body = start + marker.size();
    const auto end = prompt.find("\"" + std::string(experts), body);
    if (end == std::string_view::npos) return std::nullopt;
    return std::string(prompt.substr(body, end - body));
}

// ---------------------------------------------------------------------------

std::string_view to_string(MockBackend::Mode mode) {
    switch (mode) {
    case MockBackend::Mode::Oracle: return "oracle";
    case MockBackend::Mode::Scripted: return "scripted";
    case MockBackend::Mode::LatencySim: return "latency_sim";
    }
    return "oracle";
}

MockBackend::Mode parse_mock_mode(std::string_view s) {
    if (s == "oracle") return MockBackend::Mode::Oracle;
    if (s == "scripted") return MockBackend::Mode::Scripted;
    if (s == "latency_sim") return MockBackend::Mode::LatencySim;
    throw ValidationError("unknown mock mode '" + std::string(s) + "'");
}

MockBackend::MockBackend(Mode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

MockBackend& MockBackend::set_labels(std::map<std::string, std::string> labels) {
    std::lock_guard lk(mu_);
    labels_ = std::move(labels);
    return *this;
}

MockBackend& MockBackend::set_default_label(std::string label) {
    std::lock_guard lk(mu_);
    default_label_ = std::move(label);
    return *this;
}

MockBackend& MockBackend::set_script(std::map<std::string, std::string> script) {
    std::lock_guard lk(mu_);
    script_ = std::move(script);
    return *this;
}

MockBackend& MockBackend::set_default_reply(std::string reply) {
    std::lock_guard lk(mu_);
    default_reply_ = std::move(reply);
    return *this;
}

MockBackend& MockBackend::set_latency(LatencyConfig cfg) {
    std::lock_guard lk(mu_);
    latency_ = cfg;
    return *this;
}

MockBackend& MockBackend::set_clock(std::shared_ptr<ManualClock> clock) {
    std::lock_guard lk(mu_);
    clock_ = std::move(clock);
    return *this;
}

MockBackend& MockBackend::set_deadline(double seconds) {
    std::lock_guard lk(mu_);
    deadline_ = seconds;
    return *this;
}

MockBackend& MockBackend::fail_model(std::string model_id) {
    std::lock_guard lk(mu_);
    failing_models_.insert(std::move(model_id));
    return *this;
}

MockBackend& MockBackend::set_down(bool down) {
    std::lock_guard lk(mu_);
    down_ = down;
    return *this;
}

MockBackend& MockBackend::override_route(std::string query, std::string raw_reply) {
    std::lock_guard lk(mu_);
    route_overrides_[std::move(query)] = std::move(raw_reply);
    return *this;
}

std::size_t MockBackend::call_count() const {
    std::lock_guard lk(mu_);
    return log_.size();
}

std::vector<CompletionRequest> MockBackend::requests() const {
    std::lock_guard lk(mu_);
    return log_;
}

double MockBackend::draw(Range range) {
    // 53 random mantissa bits -> [0, 1]; reproducible across standard libraries.
    const double u = static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740991.0);
    return range.lo + (range.hi - range.lo) * u;
}

std::string MockBackend::reply_for(const CompletionRequest& req, bool routing) const {
    const std::string& last = req.messages.back().content;
    if (routing) {
        const auto query = embedded_routing_query(last).value_or("");
        if (auto it = route_overrides_.find(query); it != route_overrides_.end()) {
            return it->second;
        }
    }
    if (mode_ == Mode::Scripted) {
        auto it = script_.find(last);
        return it != script_.end() ? it->second : default_reply_;
    }
    if (routing) {
        const auto query = embedded_routing_query(last).value_or("");
        auto it = labels_.find(query);
        return it != labels_.end() ? it->second : default_label_;
    }
    return "[" + req.model_id + "] Answer to: " + last;
}

double MockBackend::delay_for(const CompletionRequest& req, bool routing) {
    if (mode_ != Mode::LatencySim) return 0.0;
    if (routing) return draw(latency_.router);
    double d = draw(latency_.expert);
    const bool has_history =
        std::any_of(req.messages.begin(), req.messages.end(),
                    [](const ChatMessage& m) { return m.role == Role::Assistant; });
    if (!has_history) d += latency_.cold_penalty;
    return d < 0 ? 0.0 : d;
}

CompletionResult MockBackend::complete(const CompletionRequest& req) {
    req.validate();

    double delay = 0.0;
    std::string reply;
    std::shared_ptr<ManualClock> clock;
    double deadline = 0.0;
    {
        std::lock_guard lk(mu_);
        log_.push_back(req);
        if (down_) {
            throw BackendError(BackendError::Kind::Unavailable, req.model_id, "backend is down");
        }
        if (failing_models_.count(req.model_id)) {
            throw BackendError(BackendError::Kind::Unavailable, req.model_id,
                               "injected failure for model");
        }
        const auto& last = req.messages.back();
        const bool routing =
            last.role == Role::User && embedded_routing_query(last.content).has_value();
        delay = delay_for(req, routing);
        reply = reply_for(req, routing);
        clock = clock_;
        deadline = deadline_;
    }

    const double waited = std::min(delay, deadline);
    if (clock) {
        clock->advance(waited);
    } else if (waited > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(waited));
    }
    if (delay > deadline) {
        throw BackendError(BackendError::Kind::Timeout, req.model_id,
                           "simulated delay exceeds deadline");
    }

    CompletionResult out;
    out.latency = delay;
    out.token_estimate = estimate_tokens(reply);
    out.text = std::move(reply);
    return out;
}

bool MockBackend::probe(double) {
    std::lock_guard lk(mu_);
    return !down_;
}

} // namespace switchboard
