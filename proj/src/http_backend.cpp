#include <cstdlib>

#include <httplib.h>

#include "switchboard/backend.hpp"
#include "switchboard/clock.hpp"

namespace switchboard {

namespace {

std::pair<std::string, std::string> split_base_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', host_start);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

void set_timeouts(httplib::Client& cli, double seconds) {
    const auto us = std::chrono::microseconds(static_cast<std::int64_t>(seconds * 1e6));
    cli.set_connection_timeout(us);
    cli.set_read_timeout(us);
    cli.set_write_timeout(us);
}

} // namespace

HttpBackend::HttpBackend(Options opts) : opts_(std::move(opts)) {
    if (opts_.base_url.empty()) throw ValidationError("backend base url is empty");
    if (opts_.timeout <= 0) throw ValidationError("backend timeout must be positive");
    if (opts_.retries < 0) throw ValidationError("backend retries must be >= 0");
    std::tie(origin_, prefix_) = split_base_url(opts_.base_url);
}

HttpBackend::Options HttpBackend::options_from_env(std::string base_url) {
    Options o;
    if (!base_url.empty()) {
        o.base_url = std::move(base_url);
    } else if (const char* env = std::getenv("SWITCHBOARD_BACKEND_URL")) {
        o.base_url = env;
    }
    if (const char* key = std::getenv("SWITCHBOARD_API_KEY")) o.api_key = key;
    return o;
}

CompletionResult HttpBackend::complete(const CompletionRequest& req) {
    req.validate();
    for (int attempt_no = 0;; ++attempt_no) {
        try {
            return attempt(req);
        } catch (const BackendError& e) {
            if (attempt_no >= opts_.retries || e.kind() == BackendError::Kind::Protocol) throw;
        }
    }
}

CompletionResult HttpBackend::attempt(const CompletionRequest& req) {
    httplib::Client cli(origin_);
    set_timeouts(cli, opts_.timeout);
    if (!opts_.api_key.empty()) cli.set_bearer_token_auth(opts_.api_key);

    const auto& clock = steady_clock();
    const double start = clock.now();
    auto res = cli.Post(prefix_ + "/v1/chat/completions", wire_request_body(req),
                        "application/json");
    const double elapsed = clock.now() - start;

    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                               (err == httplib::Error::Read && elapsed >= opts_.timeout * 0.95);
        throw BackendError(timed_out ? BackendError::Kind::Timeout
                                     : BackendError::Kind::Unavailable,
                           req.model_id, httplib::to_string(err));
    }
    if (res->status >= 500) {
        throw BackendError(BackendError::Kind::Unavailable, req.model_id,
                           "HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw BackendError(BackendError::Kind::Protocol, req.model_id,
                           "HTTP " + std::to_string(res->status));
    }

    CompletionResult out;
    out.text = wire_response_text(res->body, req.model_id);
    out.latency = elapsed;
    out.token_estimate = estimate_tokens(out.text);
    return out;
}

bool HttpBackend::probe(double deadline) {
    httplib::Client cli(origin_);
    set_timeouts(cli, deadline);
    if (!opts_.api_key.empty()) cli.set_bearer_token_auth(opts_.api_key);
    auto res = cli.Get(prefix_ + "/v1/models");
    return res && res->status < 500;
}

} // namespace switchboard
