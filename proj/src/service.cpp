#include "switchboard/service.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "switchboard/errors.hpp"
#include "switchboard/text.hpp"

namespace switchboard {

using nlohmann::json;

void ServiceConfig::validate() const {
    if (!(deadline > 0)) throw ValidationError("request deadline must be > 0");
    if (memory_cap < 1) throw ValidationError("memory cap must be >= 1");
    if (port < 0 || port > 65535) throw ValidationError("port out of range");
    if (override_threshold < 1) throw ValidationError("override threshold must be >= 1");
}

namespace {

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_reply(int status, const std::string& message) {
    return reply(status, json{{"error", message}});
}

json decision_json(const RoutingDecision& d) {
    json j{{"domain", d.domain},
           {"strategy", to_string(d.strategy)},
           {"raw_output", d.raw_output},
           {"used_fallback", d.used_fallback},
           {"elapsed", d.elapsed}};
    if (d.strategy == Strategy::Keyword || d.strategy == Strategy::Hybrid) {
        j["keyword_scores"] = d.keyword_scores;
    }
    return j;
}

// Session ids are short tokens: letters, digits, '-', '_', '.', ':'.
bool valid_session_id(const std::string& s) {
    if (s.empty() || s.size() > 128) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ||
               c == ':';
    });
}

} // namespace

Service::Service(ServiceConfig config, std::shared_ptr<Backend> backend,
                 std::shared_ptr<const Registry> registry)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      registry_(std::move(registry)),
      sessions_(config_.memory_cap, config_.persist_path),
      random_(config_.random_seed) {
    config_.validate();
    if (!backend_) throw ValidationError("service needs a backend");
    if (!registry_) registry_ = std::make_shared<const Registry>(load_registry(config_.config_path));
    sessions_.replay();
}

Service::~Service() { stop(); }

std::shared_ptr<const Registry> Service::registry() const {
    std::lock_guard lk(registry_mu_);
    return registry_;
}

void Service::reload(std::shared_ptr<const Registry> registry) {
    if (!registry) throw ValidationError("cannot reload an empty registry");
    std::lock_guard lk(registry_mu_);
    registry_ = std::move(registry);
}

void Service::reload() {
    reload(std::make_shared<const Registry>(load_registry(config_.config_path)));
}

Workflow Service::make_workflow() {
    WorkflowOptions opts;
    opts.routing.keyword_mode = config_.keyword_mode;
    opts.routing.override_threshold = config_.override_threshold;
    opts.routing.router_context = config_.router_context;
    opts.trace_sink = trace_sink_;
    return Workflow(*backend_, sessions_, opts, steady_clock(), &random_);
}

HttpResponse Service::handle(const std::string& method, const std::string& path,
                             const std::string& body) {
    requests_++;
    try {
        if (method == "POST" && path == "/chat") return chat(body);
        if (method == "POST" && path == "/route") return dry_route(body);
        if (method == "GET" && path == "/adapters") return adapters();
        if (method == "GET" && path == "/health") return health();
        if (method == "GET" && path == "/metrics") return metrics();
        if (method == "POST" && path == "/reload") return reload_endpoint();
        return error_reply(404, "no route for " + method + " " + path);
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
}

namespace {

struct ParsedRequest {
    std::string session_id;
    std::string message;
    std::optional<Strategy> strategy;
};

// Returns an error response when the body is unusable.
std::optional<HttpResponse> parse_request(const std::string& body, bool need_session,
                                          ParsedRequest& out) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return error_reply(400, "body must be a JSON object");
    if (need_session) {
        if (!j.contains("session_id") || !j["session_id"].is_string() ||
            !valid_session_id(j["session_id"].get<std::string>())) {
            return error_reply(400, "session_id must be a non-empty token");
        }
        out.session_id = j["session_id"].get<std::string>();
    }
    if (!j.contains("message") || !j["message"].is_string() ||
        text::trim(j["message"].get<std::string>()).empty()) {
        return error_reply(400, "message must be a non-empty string");
    }
    out.message = j["message"].get<std::string>();
    if (j.contains("strategy") && !j["strategy"].is_null()) {
        if (!j["strategy"].is_string()) return error_reply(422, "strategy must be a string");
        try {
            out.strategy = parse_strategy(j["strategy"].get<std::string>());
        } catch (const ValidationError& e) {
            return error_reply(422, e.what());
        }
    }
    return std::nullopt;
}

} // namespace

HttpResponse Service::chat(const std::string& body) {
    ParsedRequest req;
    if (auto err = parse_request(body, true, req)) return *err;
    const auto registry = this->registry();
    auto workflow = make_workflow();
    const auto trace_id = fmt::format("{}-{:06d}", req.session_id, ++trace_counter_);

    const auto state = workflow.run_turn(req.session_id, req.message,
                                         req.strategy.value_or(config_.default_strategy), *registry);
    if (!state.ok()) {
        chat_failed_++;
        const int status = state.error && state.error->node == "input" ? 400 : 502;
        return reply(status, json{{"error", state.error ? state.error->message : "failed"},
                                  {"kind", state.error ? state.error->kind : "unknown"},
                                  {"node", state.error ? state.error->node : ""},
                                  {"trace_id", trace_id}});
    }
    chat_ok_++;
    if (state.decision->used_fallback) fallbacks_++;

    const auto lat = decompose_latency(state);
    json trace = json::array();
    for (const auto& e : state.trace.entries) {
        trace.push_back({{"node", e.node},
                         {"event", e.event},
                         {"domain", e.domain},
                         {"fallback", e.fallback},
                         {"elapsed", e.elapsed}});
    }
    return reply(200, json{{"reply", state.reply->text},
                           {"domain", state.reply->domain},
                           {"used_fallback", state.decision->used_fallback},
                           {"strategy", to_string(state.decision->strategy)},
                           {"latency",
                            {{"router", lat.router},
                             {"expert", lat.expert},
                             {"overhead", lat.overhead},
                             {"total", lat.total}}},
                           {"trace_id", trace_id},
                           {"trace", std::move(trace)}});
}

HttpResponse Service::dry_route(const std::string& body) {
    ParsedRequest req;
    if (auto err = parse_request(body, false, req)) return *err;
    const auto registry = this->registry();
    auto workflow = make_workflow();
    routes_++;
    const auto decision =
        workflow.dry_route(req.message, req.strategy.value_or(config_.default_strategy), *registry);
    return reply(200, decision_json(decision));
}

HttpResponse Service::adapters() const {
    const auto registry = this->registry();
    json out = json::array();
    for (const auto& c : registry->cards()) {
        out.push_back({{"name", c.name}, {"description", c.description}, {"is_fallback", c.is_fallback}});
    }
    return reply(200, out);
}

HttpResponse Service::health() {
    const bool reachable = backend_->probe(std::min(2.0, config_.deadline));
    return reply(200, json{{"status", reachable ? "ok" : "degraded"},
                           {"backend_reachable", reachable},
                           {"adapters_loaded", registry()->size()}});
}

HttpResponse Service::metrics() const {
    return reply(200, json{{"requests", requests_.load()},
                           {"chat_ok", chat_ok_.load()},
                           {"chat_failed", chat_failed_.load()},
                           {"fallbacks", fallbacks_.load()},
                           {"routes", routes_.load()}});
}

HttpResponse Service::reload_endpoint() {
    try {
        reload();
    } catch (const Error& e) {
        return error_reply(422, e.what());
    }
    return reply(200, json{{"adapters_loaded", registry()->size()}});
}

int Service::bind() {
    server_ = std::make_unique<httplib::Server>();
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
        const auto out = handle(req.method, req.path, req.body);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    for (const char* path : {"/chat", "/route", "/reload"}) server_->Post(path, dispatch);
    for (const char* path : {"/adapters", "/health", "/metrics"}) server_->Get(path, dispatch);
    if (config_.port == 0) return server_->bind_to_any_port(config_.host);
    return server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool Service::serve() {
    if (!server_ && bind() < 0) return false;
    return server_->listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
}

bool is_mock_target(std::string_view target) {
    return target == "mock" || target.rfind("mock:", 0) == 0;
}

std::shared_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (is_mock_target(spec.target)) {
        const auto mode = spec.target == "mock" ? MockBackend::Mode::Oracle
                                                : parse_mock_mode(spec.target.substr(5));
        auto mock = std::make_shared<MockBackend>(mode, spec.seed);
        mock->set_labels(spec.oracle_labels).set_default_label(spec.default_label);
        mock->set_deadline(spec.timeout);
        return mock;
    }
    HttpBackend::Options o = HttpBackend::options_from_env(spec.target);
    if (!spec.api_key.empty()) o.api_key = spec.api_key;
    o.timeout = spec.timeout;
    return std::make_shared<HttpBackend>(o);
}

} // namespace switchboard
