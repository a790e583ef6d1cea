#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>

#include "switchboard/backend.hpp"
#include "switchboard/memory.hpp"
#include "switchboard/registry.hpp"
#include "switchboard/routing.hpp"
#include "switchboard/workflow.hpp"

namespace httplib {
class Server;
}

namespace switchboard {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string backend_url; // URL, or "mock[:mode]" for the in-process mock
    std::filesystem::path config_path = "config/adapters.json";
    Strategy default_strategy = Strategy::Semantic;
    std::size_t memory_cap = ConversationMemory::kDefaultCap;
    KeywordMode keyword_mode = KeywordMode::Substring;
    std::optional<std::filesystem::path> persist_path;
    double deadline = 60.0;
    std::uint64_t random_seed = 0;
    int override_threshold = 3;
    bool router_context = false;

    // Throws ValidationError.
    void validate() const;
};

struct HttpResponse {
    int status = 200;
    std::string body; // JSON
};

// Deployable surface: /chat, /route, /adapters, /health, /metrics, /reload.
// Handlers are callable directly through handle() and are what the HTTP server
// dispatches to.
class Service {
public:
    Service(ServiceConfig config, std::shared_ptr<Backend> backend,
            std::shared_ptr<const Registry> registry = nullptr);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    HttpResponse handle(const std::string& method, const std::string& path,
                        const std::string& body = {});

    std::shared_ptr<const Registry> registry() const;

    // Swaps the registry; requests already running keep the old one.
    void reload(std::shared_ptr<const Registry> registry);
    void reload(); // from config_path

    SessionStore& sessions() { return sessions_; }
    const ServiceConfig& config() const { return config_; }

    void set_trace_sink(std::ostream* sink) { trace_sink_ = sink; }

    // Binds config.host:config.port (port 0 picks a free port) and returns the
    // bound port, or -1.
    int bind();
    // Blocks serving requests until stop().
    bool serve();
    void stop();

private:
    HttpResponse chat(const std::string& body);
    HttpResponse dry_route(const std::string& body);
    HttpResponse adapters() const;
    HttpResponse health();
    HttpResponse metrics() const;
    HttpResponse reload_endpoint();

    Workflow make_workflow();

    ServiceConfig config_;
    std::shared_ptr<Backend> backend_;
    mutable std::mutex registry_mu_;
    std::shared_ptr<const Registry> registry_;
    SessionStore sessions_;
    RandomRouter random_;
    std::ostream* trace_sink_ = nullptr;
    std::unique_ptr<httplib::Server> server_;

    std::atomic<std::uint64_t> trace_counter_{0};
    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> chat_ok_{0};
    std::atomic<std::uint64_t> chat_failed_{0};
    std::atomic<std::uint64_t> fallbacks_{0};
    std::atomic<std::uint64_t> routes_{0};
};

struct BackendSpec {
    std::string target;           // URL or mock[:oracle|scripted|latency_sim]
    std::string api_key;
    double timeout = 60.0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> oracle_labels;
    std::string default_label = "General";
};

bool is_mock_target(std::string_view target);

// HttpBackend for URLs, MockBackend for mock targets.
std::shared_ptr<Backend> make_backend(const BackendSpec& spec);

} // namespace switchboard
