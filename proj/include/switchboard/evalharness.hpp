#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "switchboard/registry.hpp"
#include "switchboard/routing.hpp"
#include "switchboard/workflow.hpp"

namespace switchboard::eval {

enum class Difficulty { Easy, Medium, Hard };

std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view s);

struct EvalRecord {
    std::string query;
    std::string expected_domain;
    Difficulty difficulty = Difficulty::Easy;
    std::string tag; // optional free-form label, e.g. a failure category
};

// Newline-delimited JSON records. Blank lines are skipped.
std::vector<EvalRecord> parse_fixture(std::string_view jsonl);
std::vector<EvalRecord> load_fixture(const std::filesystem::path& path);

// Throws ValidationError when a record names a domain the registry lacks.
void validate_fixture(const std::vector<EvalRecord>& fixture, const Registry& registry);

// query -> expected domain, for the oracle backend.
std::map<std::string, std::string> oracle_labels(const std::vector<EvalRecord>& fixture);

struct Tally {
    int correct = 0;
    int total = 0;
    bool operator==(const Tally&) const = default;
};

struct AccuracyReport {
    std::string strategy;
    double overall = 0.0;
    int correct = 0;
    int total = 0;
    std::map<std::string, Tally> by_domain;
    std::map<std::string, Tally> by_difficulty;
    std::map<std::pair<std::string, std::string>, int> confusion; // (expected, got)

    // Throws std::logic_error if the aggregate counts disagree.
    void check_consistency() const;
};

struct LatencyStats {
    double mean = 0, median = 0, min = 0, max = 0, std = 0, p95 = 0, p99 = 0;
    int count = 0;
};

struct DomainLatency {
    int count = 0;
    double mean = 0, median = 0, max = 0;
    bool operator==(const DomainLatency&) const = default;
};

struct LatencyReport {
    LatencyStats overall;
    std::map<std::string, DomainLatency> by_domain;
    int excluded = 0; // turns that ended in a terminal error
    std::vector<std::string> excluded_errors;
};

struct ColdWarmReport {
    double cold = 0;
    double warm_mean = 0;
    double improvement_pct = 0;
};

class EmptySamples : public Error {
public:
    EmptySamples() : Error("latency statistics need at least one sample") {}
};

AccuracyReport run_accuracy_suite(const std::vector<EvalRecord>& fixture, Strategy strategy,
                                  const RoutingContext& ctx);

// Population standard deviation; percentiles by nearest rank, i.e. the
// ceil(q * n)-th smallest sample. Median is the mean of the two middle values
// for even n.
LatencyStats latency_stats(std::vector<double> samples);

double percentile_nearest_rank(const std::vector<double>& sorted, double q);

double improvement_pct(double cold, double warm);

// Runs `n_queries` sequential turns in one session, cycling through `queries`.
LatencyReport run_latency_bench(int n_queries, Workflow& pipeline, const Registry& registry,
                                const std::vector<std::string>& queries,
                                Strategy strategy = Strategy::Semantic,
                                const std::string& session_id = "latency-bench");

// Clears the session, measures one cold turn, then `k_warm` warm turns.
ColdWarmReport run_cold_warm(Workflow& pipeline, const Registry& registry,
                             const std::vector<std::string>& queries, int k_warm,
                             Strategy strategy = Strategy::Semantic,
                             const std::string& session_id = "cold-warm");

// "48.3%" style: one decimal, half away from zero.
std::string format_pct(double fraction);
std::string format_ratio_pct(int correct, int total);

nlohmann::json to_json(const AccuracyReport& r);
nlohmann::json to_json(const LatencyStats& s);
nlohmann::json to_json(const LatencyReport& r);
nlohmann::json to_json(const ColdWarmReport& r);
AccuracyReport accuracy_from_json(const nlohmann::json& j);

// Machine record for one strategy run.
nlohmann::json machine_record(const AccuracyReport& acc,
                              const std::optional<LatencyReport>& latency = std::nullopt);

std::string render_accuracy_table(const AccuracyReport& r);
std::string render_comparison_table(const std::vector<AccuracyReport>& reports,
                                    const std::vector<std::string>& domains);
std::string render_difficulty_table(const std::vector<AccuracyReport>& reports);
std::string render_latency_table(const LatencyReport& r);
std::string render_domain_latency_table(const std::map<std::string, DomainLatency>& by_domain);
std::string render_cold_warm_table(const ColdWarmReport& r);

// Writes `record` as pretty JSON; throws IoError.
void write_report(const std::filesystem::path& path, const nlohmann::json& record);

} // namespace switchboard::eval
