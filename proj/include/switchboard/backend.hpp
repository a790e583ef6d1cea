#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "switchboard/clock.hpp"
#include "switchboard/errors.hpp"

namespace switchboard {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role parse_role(std::string_view s);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    int max_tokens = 512;
    double temperature = 0.0;

    // Throws ValidationError when the request cannot be sent.
    void validate() const;
};

struct CompletionResult {
    std::string text;
    double latency = 0.0; // seconds
    std::int64_t token_estimate = 0;
};

class BackendError : public Error {
public:
    enum class Kind { Timeout, Unavailable, Protocol };

    BackendError(Kind kind, std::string model_id, const std::string& detail);

    Kind kind() const { return kind_; }
    const std::string& model_id() const { return model_id_; }

private:
    Kind kind_;
    std::string model_id_;
};

std::string_view to_string(BackendError::Kind kind);

// Rough token count used for reporting: whitespace-separated words.
std::int64_t estimate_tokens(std::string_view s);

class Backend {
public:
    virtual ~Backend() = default;

    virtual CompletionResult complete(const CompletionRequest& req) = 0;

    // Cheap reachability check bounded by `deadline` seconds.
    virtual bool probe(double deadline) = 0;
};

// OpenAI-compatible chat-completions client. The adapter is selected purely by
// `model`; only choices[0].message.content is read from the response.
class HttpBackend final : public Backend {
public:
    struct Options {
        std::string base_url;
        std::string api_key;
        double timeout = 60.0;
        int retries = 0;
    };

    explicit HttpBackend(Options opts);

    // Reads SWITCHBOARD_BACKEND_URL / SWITCHBOARD_API_KEY. `base_url`, when
    // non-empty, wins over the environment.
    static Options options_from_env(std::string base_url = {});

    CompletionResult complete(const CompletionRequest& req) override;
    bool probe(double deadline) override;

    const Options& options() const { return opts_; }

private:
    CompletionResult attempt(const CompletionRequest& req);

    Options opts_;
    std::string origin_; // scheme://host[:port]
    std::string prefix_; // path prefix, no trailing slash
};

// Serializes a request body exactly as sent on the wire.
std::string wire_request_body(const CompletionRequest& req);

// Extracts choices[0].message.content; throws BackendError(Protocol) otherwise.
std::string wire_response_text(std::string_view body, const std::string& model_id);

// Pulls the query out of a rendered routing prompt, if `prompt` is one.
std::optional<std::string> embedded_routing_query(std::string_view prompt);

// Deterministic test double.
//
//   oracle      routing prompts are answered with the labeled domain of the
//               embedded query (default_label when unlabeled); expert calls get a
//               canned reply tagged with the model id.
//   scripted    replies are looked up by the last user message; unmatched
//               messages get default_reply.
//   latency_sim oracle answers plus seeded uniform delays.
//
// Delays advance `clock` when one is attached and sleep otherwise.
class MockBackend final : public Backend {
public:
    enum class Mode { Oracle, Scripted, LatencySim };

    struct Range {
        double lo = 0.0;
        double hi = 0.0;
    };

    struct LatencyConfig {
        Range router;
        Range expert;
        // Added to expert calls that carry no conversation history.
        double cold_penalty = 0.0;
    };

    MockBackend(Mode mode, std::uint64_t seed);

    MockBackend& set_labels(std::map<std::string, std::string> labels);
    MockBackend& set_default_label(std::string label);
    MockBackend& set_script(std::map<std::string, std::string> script);
    MockBackend& set_default_reply(std::string reply);
    MockBackend& set_latency(LatencyConfig cfg);
    MockBackend& set_clock(std::shared_ptr<ManualClock> clock);
    MockBackend& set_deadline(double seconds);
    MockBackend& fail_model(std::string model_id);
    MockBackend& set_down(bool down);
    MockBackend& override_route(std::string query, std::string raw_reply);

    CompletionResult complete(const CompletionRequest& req) override;
    bool probe(double deadline) override;

    Mode mode() const { return mode_; }
    std::size_t call_count() const;
    std::vector<CompletionRequest> requests() const;

    // Uniform draw in [lo, hi] from the mock's generator.
    double draw(Range range);

private:
    std::string reply_for(const CompletionRequest& req, bool routing) const;
    double delay_for(const CompletionRequest& req, bool routing);

    Mode mode_;
    mutable std::mutex mu_;
    std::mt19937_64 rng_;
    std::map<std::string, std::string> labels_;
    std::string default_label_ = "General";
    std::map<std::string, std::string> script_;
    std::map<std::string, std::string> route_overrides_;
    std::string default_reply_;
    LatencyConfig latency_;
    std::shared_ptr<ManualClock> clock_;
    double deadline_ = 60.0;
    std::set<std::string> failing_models_;
    bool down_ = false;
    std::vector<CompletionRequest> log_;
};

std::string_view to_string(MockBackend::Mode mode);
MockBackend::Mode parse_mock_mode(std::string_view s);

} // namespace switchboard
