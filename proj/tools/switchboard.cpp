// Command-line front end for the switchboard router.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "switchboard/adapter_math.hpp"
#include "switchboard/evalharness.hpp"
#include "switchboard/service.hpp"

namespace fs = std::filesystem;
using namespace switchboard;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::string backend;
    std::string strategy = "semantic";
    std::string keyword_mode = "substring";
    std::uint64_t seed = 7;
    double deadline = 60.0;
    std::vector<std::string> oracle_fixtures;
};

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

void add_common(CLI::App* cmd, Common& c, bool with_strategy = true) {
    cmd->add_option("--config", c.config, "Adapter config (JSON); default $SWITCHBOARD_CONFIG or config/adapters.json");
    cmd->add_option("--backend", c.backend,
                    "Backend base URL, or mock[:oracle|scripted|latency_sim]; default $SWITCHBOARD_BACKEND_URL or mock");
    if (with_strategy) {
        cmd->add_option("--strategy", c.strategy, "semantic|keyword|hybrid|random")
            ->check(CLI::IsMember({"semantic", "keyword", "hybrid", "random"}));
    }
    cmd->add_option("--keyword-mode", c.keyword_mode, "substring|word")
        ->check(CLI::IsMember({"substring", "word"}));
    cmd->add_option("--seed", c.seed, "Seed for the random router and the mock backend");
    cmd->add_option("--deadline", c.deadline, "Backend request deadline in seconds");
    cmd->add_option("--oracle-fixture", c.oracle_fixtures,
                    "Labeled fixtures the mock oracle answers from (repeatable)");
}

void resolve(Common& c) {
    if (c.config.empty()) c.config = env_or("SWITCHBOARD_CONFIG", "config/adapters.json");
    if (c.backend.empty()) c.backend = env_or("SWITCHBOARD_BACKEND_URL", "mock");
    if (c.oracle_fixtures.empty()) {
        for (const char* f : {"fixtures/routing_25.jsonl", "fixtures/extended_hard.jsonl",
                              "fixtures/keyword_failures.jsonl"}) {
            if (fs::exists(f)) c.oracle_fixtures.emplace_back(f);
        }
    }
}

std::map<std::string, std::string> labels_from(const std::vector<std::string>& files) {
    std::map<std::string, std::string> labels;
    for (const auto& f : files) {
        for (auto& [q, d] : eval::oracle_labels(eval::load_fixture(f))) labels[q] = d;
    }
    return labels;
}

std::shared_ptr<Backend> backend_for(const Common& c, const Registry& registry) {
    BackendSpec spec;
    spec.target = c.backend;
    spec.timeout = c.deadline;
    spec.seed = c.seed;
    spec.default_label = registry.fallback().name;
    if (is_mock_target(c.backend)) spec.oracle_labels = labels_from(c.oracle_fixtures);
    return make_backend(spec);
}

RoutingOptions routing_options(const Common& c) {
    RoutingOptions o;
    o.keyword_mode = parse_keyword_mode(c.keyword_mode);
    return o;
}

void emit(const json& record, const std::string& out) {
    if (out.empty()) return;
    eval::write_report(out, record);
    std::cout << "machine report written to " << out << "\n";
}

std::vector<std::string> fixture_queries(const std::vector<eval::EvalRecord>& fixture) {
    std::vector<std::string> q;
    for (const auto& r : fixture) q.push_back(r.query);
    return q;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"switchboard: route queries to domain LoRA adapters"};
    app.require_subcommand(1);

    // serve
    Common serve_opts;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t memory_cap = ConversationMemory::kDefaultCap;
    std::string persist;
    std::string trace_log;
    bool router_context = false;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    add_common(serve, serve_opts);
    serve->add_option("--host", host, "Listen address");
    serve->add_option("--port", port, "Listen port");
    serve->add_option("--memory-cap", memory_cap, "Turns kept per session")->check(CLI::PositiveNumber);
    serve->add_option("--persist", persist, "Append committed turns to this NDJSON session log");
    serve->add_option("--trace-log", trace_log, "Write per-node trace lines here (default stdout)");
    serve->add_flag("--router-context", router_context, "Show the previous user message to the router");

    // route
    Common route_opts;
    std::string route_query;
    auto* route_cmd = app.add_subcommand("route", "Route one query (dry run, no generation)");
    add_common(route_cmd, route_opts);
    route_cmd->add_option("query", route_query, "User query")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluation harness");
    eval_cmd->require_subcommand(1);

    Common acc_opts;
    std::string acc_fixture = "fixtures/routing_25.jsonl";
    std::string acc_out;
    auto* acc = eval_cmd->add_subcommand("accuracy", "Routing accuracy on a labeled fixture");
    add_common(acc, acc_opts);
    acc->add_option("--fixture", acc_fixture, "NDJSON fixture");
    acc->add_option("--out", acc_out, "Machine report path");

    struct LatencyFlags {
        int n = 20;
        int warm = 9;
        double router_lo = 0.1, router_hi = 0.3;
        double expert_lo = 2.0, expert_hi = 5.0;
        double cold_penalty = 0.0;
        std::string fixture = "fixtures/routing_25.jsonl";
        std::string out;
    };
    auto add_latency = [](CLI::App* cmd, LatencyFlags& f) {
        cmd->add_option("--router-lo", f.router_lo, "Simulated router delay lower bound (s)");
        cmd->add_option("--router-hi", f.router_hi, "Simulated router delay upper bound (s)");
        cmd->add_option("--expert-lo", f.expert_lo, "Simulated expert delay lower bound (s)");
        cmd->add_option("--expert-hi", f.expert_hi, "Simulated expert delay upper bound (s)");
        cmd->add_option("--cold-penalty", f.cold_penalty, "Extra simulated delay on history-free turns (s)");
        cmd->add_option("--fixture", f.fixture, "Queries to cycle through");
        cmd->add_option("--out", f.out, "Machine report path");
    };

    Common lat_opts;
    LatencyFlags lat_flags;
    auto* lat = eval_cmd->add_subcommand("latency", "Sequential end-to-end latency benchmark");
    add_common(lat, lat_opts);
    add_latency(lat, lat_flags);
    lat->add_option("--n", lat_flags.n, "Number of sequential turns")->check(CLI::PositiveNumber);

    Common cw_opts;
    LatencyFlags cw_flags;
    cw_flags.expert_lo = cw_flags.expert_hi = 2.371;
    cw_flags.router_lo = cw_flags.router_hi = 0.0;
    cw_flags.cold_penalty = 1.387;
    auto* cw = eval_cmd->add_subcommand("coldwarm", "Cold vs. warm start latency");
    add_common(cw, cw_opts);
    add_latency(cw, cw_flags);
    cw->add_option("--warm", cw_flags.warm, "Warm turns after the cold one")->check(CLI::PositiveNumber);

    Common cmp_opts;
    LatencyFlags cmp_flags;
    std::string strategies = "semantic,keyword,hybrid,random";
    std::vector<std::string> cmp_fixtures;
    auto* cmp = eval_cmd->add_subcommand("compare", "Compare routing strategies");
    add_common(cmp, cmp_opts, false);
    add_latency(cmp, cmp_flags);
    cmp->add_option("--strategies", strategies, "Comma-separated strategies");
    cmp->add_option("--n", cmp_flags.n, "Latency-bench turns per strategy")->check(CLI::PositiveNumber);
    cmp->add_option("--fixtures", cmp_fixtures, "Fixtures concatenated into the comparison set");

    // lora-check
    std::int64_t rank = 16;
    std::int64_t dim = 4096;
    auto* lora = app.add_subcommand("lora-check", "LoRA trainable-parameter accounting");
    lora->add_option("--rank", rank, "Adapter rank r")->check(CLI::PositiveNumber);
    lora->add_option("--dim", dim, "Model dimension d")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            resolve(serve_opts);
            auto registry = std::make_shared<const Registry>(load_registry(serve_opts.config));
            ServiceConfig cfg;
            cfg.host = host;
            cfg.port = port;
            cfg.backend_url = serve_opts.backend;
            cfg.config_path = serve_opts.config;
            cfg.default_strategy = parse_strategy(serve_opts.strategy);
            cfg.memory_cap = memory_cap;
            cfg.keyword_mode = parse_keyword_mode(serve_opts.keyword_mode);
            if (!persist.empty()) cfg.persist_path = persist;
            cfg.deadline = serve_opts.deadline;
            cfg.random_seed = serve_opts.seed;
            cfg.router_context = router_context;

            Service service(cfg, backend_for(serve_opts, *registry), registry);
            std::ofstream trace_file;
            if (!trace_log.empty()) {
                trace_file.open(trace_log, std::ios::app);
                service.set_trace_sink(&trace_file);
            } else {
                service.set_trace_sink(&std::cout);
            }
            const int bound = service.bind();
            if (bound < 0) {
                std::cerr << "cannot bind " << host << ":" << port << "\n";
                return 1;
            }
            std::cerr << fmt::format("switchboard listening on {}:{} ({} adapters, backend {})\n",
                                     host, bound, registry->size(), cfg.backend_url);
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            service.serve();
            g_service = nullptr;
            return 0;
        }

        if (*route_cmd) {
            resolve(route_opts);
            const auto registry = load_registry(route_opts.config);
            auto backend = backend_for(route_opts, registry);
            RandomRouter random(route_opts.seed);
            RoutingContext ctx{registry, backend.get(), &random, &steady_clock(),
                               routing_options(route_opts)};
            const auto d = route(parse_strategy(route_opts.strategy), ctx, route_query);
            json j{{"domain", d.domain},
                   {"strategy", to_string(d.strategy)},
                   {"raw_output", d.raw_output},
                   {"used_fallback", d.used_fallback},
                   {"elapsed", d.elapsed}};
            if (!d.keyword_scores.empty()) j["keyword_scores"] = d.keyword_scores;
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*lora) {
            std::cout << fmt::format("{:>6}  {:>6}  {:>14}  {:>16}  {:>9}\n", "r", "d",
                                     "trainable", "full", "ratio");
            auto row = [](std::int64_t r, std::int64_t d) {
                const auto t = lora::trainable_param_count(r, d);
                const auto f = lora::full_param_count(d);
                std::cout << fmt::format("{:>6}  {:>6}  {:>14}  {:>16}  {:>8.4f}%\n", r, d, t, f,
                                         100.0 * static_cast<double>(t) / static_cast<double>(f));
            };
            row(rank, dim);
            for (std::int64_t r : {1, 4, 8, 16, 32, 64}) {
                if (r != rank) row(r, dim);
            }
            return 0;
        }

        // eval
        if (*acc) {
            resolve(acc_opts);
            const auto registry = load_registry(acc_opts.config);
            const auto fixture = eval::load_fixture(acc_fixture);
            acc_opts.oracle_fixtures.push_back(acc_fixture);
            auto backend = backend_for(acc_opts, registry);
            RandomRouter random(acc_opts.seed);
            RoutingContext ctx{registry, backend.get(), &random, &steady_clock(),
                               routing_options(acc_opts)};
            const auto rep =
                eval::run_accuracy_suite(fixture, parse_strategy(acc_opts.strategy), ctx);
            std::cout << eval::render_accuracy_table(rep);
            emit(eval::machine_record(rep), acc_out);
            return 0;
        }

        auto pipeline_backend = [](const Common& c, const LatencyFlags& f, const Registry& registry,
                                   std::shared_ptr<ManualClock>& clock) {
            if (!is_mock_target(c.backend)) return backend_for(c, registry);
            auto mock = std::make_shared<MockBackend>(MockBackend::Mode::LatencySim, c.seed);
            clock = std::make_shared<ManualClock>();
            mock->set_labels(labels_from(c.oracle_fixtures))
                .set_default_label(registry.fallback().name)
                .set_latency({{f.router_lo, f.router_hi}, {f.expert_lo, f.expert_hi}, f.cold_penalty})
                .set_clock(clock)
                .set_deadline(c.deadline);
            return std::shared_ptr<Backend>(mock);
        };

        if (*lat || *cw) {
            Common& c = *lat ? lat_opts : cw_opts;
            LatencyFlags& f = *lat ? lat_flags : cw_flags;
            resolve(c);
            const auto registry = load_registry(c.config);
            const auto queries = fixture_queries(eval::load_fixture(f.fixture));
            std::shared_ptr<ManualClock> clock;
            auto backend = pipeline_backend(c, f, registry, clock);
            SessionStore sessions;
            RandomRouter random(c.seed);
            WorkflowOptions wopts;
            wopts.routing = routing_options(c);
            const Clock& cl = clock ? static_cast<const Clock&>(*clock) : steady_clock();
            Workflow pipeline(*backend, sessions, wopts, cl, &random);
            const auto strategy = parse_strategy(c.strategy);
            if (*lat) {
                const auto rep = eval::run_latency_bench(f.n, pipeline, registry, queries, strategy);
                std::cout << eval::render_latency_table(rep) << "\n"
                          << eval::render_domain_latency_table(rep.by_domain);
                emit(json{{"strategy", c.strategy}, {"latency", eval::to_json(rep)}}, f.out);
            } else {
                const auto rep = eval::run_cold_warm(pipeline, registry, queries, f.warm, strategy);
                std::cout << eval::render_cold_warm_table(rep);
                emit(json{{"strategy", c.strategy}, {"coldwarm", eval::to_json(rep)}}, f.out);
            }
            return 0;
        }

        if (*cmp) {
            resolve(cmp_opts);
            if (cmp_fixtures.empty()) {
                cmp_fixtures = {"fixtures/routing_25.jsonl", "fixtures/extended_hard.jsonl"};
            }
            const auto registry = load_registry(cmp_opts.config);
            std::vector<eval::EvalRecord> fixture;
            for (const auto& f : cmp_fixtures) {
                auto part = eval::load_fixture(f);
                fixture.insert(fixture.end(), part.begin(), part.end());
                cmp_opts.oracle_fixtures.push_back(f);
            }
            const auto queries = fixture_queries(fixture);

            std::vector<eval::AccuracyReport> reports;
            json runs = json::array();
            for (const auto& name : split_csv(strategies)) {
                const auto strategy = parse_strategy(name);
                std::shared_ptr<ManualClock> clock;
                auto backend = pipeline_backend(cmp_opts, cmp_flags, registry, clock);
                const Clock& cl = clock ? static_cast<const Clock&>(*clock) : steady_clock();
                RandomRouter random(cmp_opts.seed);
                RoutingContext ctx{registry, backend.get(), &random, &cl, routing_options(cmp_opts)};
                auto rep = eval::run_accuracy_suite(fixture, strategy, ctx);

                SessionStore sessions;
                RandomRouter bench_random(cmp_opts.seed);
                WorkflowOptions wopts;
                wopts.routing = routing_options(cmp_opts);
                Workflow pipeline(*backend, sessions, wopts, cl, &bench_random);
                const auto latency = eval::run_latency_bench(cmp_flags.n, pipeline, registry,
                                                             queries, strategy);
                runs.push_back(eval::machine_record(rep, latency));
                reports.push_back(std::move(rep));
            }
            std::vector<std::string> domains;
            for (const auto& card : registry.cards()) domains.push_back(card.name);
            std::cout << eval::render_comparison_table(reports, domains) << "\n"
                      << eval::render_difficulty_table(reports);
            emit(json{{"fixtures", cmp_fixtures}, {"seed", cmp_opts.seed}, {"runs", runs}},
                 cmp_flags.out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
