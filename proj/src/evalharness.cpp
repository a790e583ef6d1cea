#include "switchboard/evalharness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "switchboard/errors.hpp"

namespace switchboard::eval {

using nlohmann::json;

std::string_view to_string(Difficulty d) {
    switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
    }
    return "easy";
}

Difficulty parse_difficulty(std::string_view s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "medium") return Difficulty::Medium;
    if (s == "hard") return Difficulty::Hard;
    throw ValidationError("unknown difficulty '" + std::string(s) + "'");
}

std::vector<EvalRecord> parse_fixture(std::string_view jsonl) {
    std::vector<EvalRecord> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError("fixture line " + std::to_string(lineno) + " is not a JSON object");
        }
        try {
            EvalRecord r;
            r.query = rec.at("query").get<std::string>();
            r.expected_domain = rec.at("expected_domain").get<std::string>();
            r.difficulty = parse_difficulty(rec.at("difficulty").get<std::string>());
            if (rec.contains("tag")) r.tag = rec["tag"].get<std::string>();
            if (r.query.empty()) throw ValidationError("empty query");
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError("fixture line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ParseError("fixture line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<EvalRecord> load_fixture(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open fixture " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_fixture(ss.str());
}

void validate_fixture(const std::vector<EvalRecord>& fixture, const Registry& registry) {
    for (const auto& r : fixture) {
        const auto* card = registry.find(r.expected_domain);
        if (!card || card->name != r.expected_domain) {
            throw ValidationError("fixture domain '" + r.expected_domain +
                                  "' is not a registry card name");
        }
    }
}

std::map<std::string, std::string> oracle_labels(const std::vector<EvalRecord>& fixture) {
    std::map<std::string, std::string> labels;
    for (const auto& r : fixture) labels[r.query] = r.expected_domain;
    return labels;
}

void AccuracyReport::check_consistency() const {
    int dom_correct = 0, dom_total = 0;
    for (const auto& [_, t] : by_domain) {
        dom_correct += t.correct;
        dom_total += t.total;
    }
    int diff_total = 0;
    for (const auto& [_, t] : by_difficulty) diff_total += t.total;
    if (dom_correct != correct || dom_total != total || diff_total != total) {
        throw std::logic_error("accuracy report totals disagree");
    }
    std::map<std::string, int> rows;
    int diagonal = 0;
    for (const auto& [key, n] : confusion) {
        rows[key.first] += n;
        if (key.first == key.second) diagonal += n;
    }
    for (const auto& [name, t] : by_domain) {
        if (rows[name] != t.total) throw std::logic_error("confusion row sum != domain total");
    }
    if (diagonal != correct) throw std::logic_error("confusion diagonal != correct count");
    const double expect = total ? static_cast<double>(correct) / total : 0.0;
    if (overall != expect) throw std::logic_error("overall accuracy inconsistent");
}

AccuracyReport run_accuracy_suite(const std::vector<EvalRecord>& fixture, Strategy strategy,
                                  const RoutingContext& ctx) {
    if (fixture.empty()) throw ValidationError("fixture is empty");
    validate_fixture(fixture, ctx.registry);

    AccuracyReport rep;
    rep.strategy = std::string(to_string(strategy));
    if (strategy == Strategy::Keyword || strategy == Strategy::Hybrid) {
        rep.strategy += "-" + std::string(to_string(ctx.options.keyword_mode));
    }
    for (const auto& r : fixture) {
        const auto decision = route(strategy, ctx, r.query);
        const bool hit = decision.domain == r.expected_domain;
        auto& dom = rep.by_domain[r.expected_domain];
        auto& diff = rep.by_difficulty[std::string(to_string(r.difficulty))];
        dom.total++;
        diff.total++;
        rep.total++;
        if (hit) {
            dom.correct++;
            diff.correct++;
            rep.correct++;
        }
        rep.confusion[{r.expected_domain, decision.domain}]++;
    }
    rep.overall = static_cast<double>(rep.correct) / rep.total;
    rep.check_consistency();
    return rep;
}

double percentile_nearest_rank(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw EmptySamples();
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

LatencyStats latency_stats(std::vector<double> samples) {
    if (samples.empty()) throw EmptySamples();
    std::sort(samples.begin(), samples.end());
    const auto n = samples.size();

    LatencyStats s;
    s.count = static_cast<int>(n);
    s.min = samples.front();
    s.max = samples.back();
    s.median = n % 2 ? samples[n / 2] : (samples[n / 2 - 1] + samples[n / 2]) / 2.0;
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(n));
    s.p95 = percentile_nearest_rank(samples, 0.95);
    s.p99 = percentile_nearest_rank(samples, 0.99);
    // Rounding in the mean can push it a hair outside [min, max].
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

double improvement_pct(double cold, double warm) { return 100.0 * (cold - warm) / cold; }

LatencyReport run_latency_bench(int n_queries, Workflow& pipeline, const Registry& registry,
                                const std::vector<std::string>& queries, Strategy strategy,
                                const std::string& session_id) {
    if (queries.empty()) throw ValidationError("latency bench needs queries");
    LatencyReport rep;
    std::vector<double> totals;
    std::map<std::string, std::vector<double>> per_domain;
    for (int i = 0; i < n_queries; ++i) {
        const auto& q = queries[static_cast<std::size_t>(i) % queries.size()];
        const auto state = pipeline.run_turn(session_id, q, strategy, registry);
        if (!state.ok()) {
            rep.excluded++;
            rep.excluded_errors.push_back(state.error ? state.error->kind : "unknown");
            continue;
        }
        const double t = state.trace.total_elapsed;
        totals.push_back(t);
        per_domain[state.decision->domain].push_back(t);
    }
    if (totals.empty()) throw EmptySamples();
    rep.overall = latency_stats(totals);
    for (auto& [name, v] : per_domain) {
        const auto s = latency_stats(v);
        rep.by_domain[name] = {s.count, s.mean, s.median, s.max};
    }
    return rep;
}

ColdWarmReport run_cold_warm(Workflow& pipeline, const Registry& registry,
                             const std::vector<std::string>& queries, int k_warm,
                             Strategy strategy, const std::string& session_id) {
    if (k_warm < 1) throw ValidationError("k_warm must be >= 1");
    if (queries.empty()) throw ValidationError("cold/warm bench needs queries");
    pipeline.sessions().clear_session(session_id);

    auto timed_turn = [&](int i) {
        const auto& q = queries[static_cast<std::size_t>(i) % queries.size()];
        const auto state = pipeline.run_turn(session_id, q, strategy, registry);
        if (!state.ok()) {
            throw Error("cold/warm turn failed: " +
                        (state.error ? state.error->message : std::string("unknown")));
        }
        return state.trace.total_elapsed;
    };

    ColdWarmReport rep;
    rep.cold = timed_turn(0);
    double sum = 0.0;
    for (int i = 1; i <= k_warm; ++i) sum += timed_turn(i);
    rep.warm_mean = sum / k_warm;
    rep.improvement_pct = rep.cold > 0 ? improvement_pct(rep.cold, rep.warm_mean) : 0.0;
    return rep;
}

std::string format_pct(double fraction) {
    const double tenths = std::round(fraction * 1000.0);
    return fmt::format("{:.1f}%", tenths / 10.0);
}

std::string format_ratio_pct(int correct, int total) {
    if (total == 0) return "n/a";
    return format_pct(static_cast<double>(correct) / total);
}

json to_json(const AccuracyReport& r) {
    json by_domain = json::object();
    for (const auto& [k, t] : r.by_domain) by_domain[k] = {{"correct", t.correct}, {"total", t.total}};
    json by_difficulty = json::object();
    for (const auto& [k, t] : r.by_difficulty) {
        by_difficulty[k] = {{"correct", t.correct}, {"total", t.total}};
    }
    json confusion = json::array();
    for (const auto& [key, n] : r.confusion) {
        confusion.push_back({{"expected", key.first}, {"got", key.second}, {"count", n}});
    }
    return {{"strategy", r.strategy},
            {"overall", r.overall},
            {"correct", r.correct},
            {"total", r.total},
            {"by_domain", std::move(by_domain)},
            {"by_difficulty", std::move(by_difficulty)},
            {"confusion", std::move(confusion)}};
}

AccuracyReport accuracy_from_json(const json& j) {
    AccuracyReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.overall = j.at("overall").get<double>();
    r.correct = j.at("correct").get<int>();
    r.total = j.at("total").get<int>();
    for (const auto& [k, v] : j.at("by_domain").items()) {
        r.by_domain[k] = {v.at("correct").get<int>(), v.at("total").get<int>()};
    }
    for (const auto& [k, v] : j.at("by_difficulty").items()) {
        r.by_difficulty[k] = {v.at("correct").get<int>(), v.at("total").get<int>()};
    }
    for (const auto& c : j.at("confusion")) {
        r.confusion[{c.at("expected").get<std::string>(), c.at("got").get<std::string>()}] =
            c.at("count").get<int>();
    }
    return r;
}

json to_json(const LatencyStats& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"min", s.min},
            {"max", s.max},     {"std", s.std},   {"p95", s.p95},       {"p99", s.p99}};
}

json to_json(const LatencyReport& r) {
    json j = to_json(r.overall);
    json by_domain = json::object();
    for (const auto& [k, d] : r.by_domain) {
        by_domain[k] = {{"count", d.count}, {"mean", d.mean}, {"median", d.median}, {"max", d.max}};
    }
    j["by_domain"] = std::move(by_domain);
    j["excluded"] = r.excluded;
    j["excluded_errors"] = r.excluded_errors;
    return j;
}

json to_json(const ColdWarmReport& r) {
    return {{"cold", r.cold}, {"warm_mean", r.warm_mean}, {"improvement_pct", r.improvement_pct}};
}

json machine_record(const AccuracyReport& acc, const std::optional<LatencyReport>& latency) {
    json j = to_json(acc);
    j["latency"] = latency ? to_json(*latency) : json::object();
    return j;
}

namespace {

// Column widths grow to fit every cell.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < cells.size() ? cells[c] : "";
            out += c == 0 ? fmt::format("{:<{}}", cell, width[c])
                          : fmt::format("  {:>{}}", cell, width[c]);
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::string out = line(header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (const auto& row : rows) out += line(row);
    return out;
}

std::string secs(double s) { return fmt::format("{:.3f} s", s); }

} // namespace

std::string render_accuracy_table(const AccuracyReport& r) {
    std::vector<std::vector<std::string>> rows{
        {"Total Test Queries", std::to_string(r.total)},
        {"Correctly Routed", std::to_string(r.correct)},
        {"Routing Accuracy", format_ratio_pct(r.correct, r.total)},
    };
    if (!r.by_difficulty.empty()) rows.push_back({"By Difficulty", ""});
    for (const auto level : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
        auto it = r.by_difficulty.find(std::string(to_string(level)));
        if (it == r.by_difficulty.end()) continue;
        std::string label(to_string(level));
        label[0] = static_cast<char>(std::toupper(label[0]));
        rows.push_back({fmt::format("  {} ({} queries)", label, it->second.total),
                        format_ratio_pct(it->second.correct, it->second.total)});
    }
    if (!r.by_domain.empty()) rows.push_back({"By Domain", ""});
    for (const auto& [name, t] : r.by_domain) {
        rows.push_back({"  " + name, fmt::format("{} ({}/{})", format_ratio_pct(t.correct, t.total),
                                                 t.correct, t.total)});
    }
    return "Routing Performance (" + r.strategy + ")\n" + render_table({"Metric", "Result"}, rows);
}

std::string render_comparison_table(const std::vector<AccuracyReport>& reports,
                                    const std::vector<std::string>& domains) {
    std::vector<std::string> header{"Routing Method", "Overall"};
    header.insert(header.end(), domains.begin(), domains.end());
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        std::vector<std::string> row{r.strategy, format_ratio_pct(r.correct, r.total)};
        for (const auto& d : domains) {
            auto it = r.by_domain.find(d);
            row.push_back(it == r.by_domain.end() ? "n/a"
                                                  : format_ratio_pct(it->second.correct,
                                                                     it->second.total));
        }
        rows.push_back(std::move(row));
    }
    return "Routing Accuracy Comparison\n" + render_table(header, rows);
}

std::string render_difficulty_table(const std::vector<AccuracyReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        std::vector<std::string> row{r.strategy};
        for (const auto level : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
            auto it = r.by_difficulty.find(std::string(to_string(level)));
            if (it == r.by_difficulty.end()) {
                row.push_back("n/a");
            } else {
                row.push_back(fmt::format("{} ({}/{})",
                                          format_ratio_pct(it->second.correct, it->second.total),
                                          it->second.correct, it->second.total));
            }
        }
        rows.push_back(std::move(row));
    }
    return "Routing Accuracy by Query Difficulty\n" +
           render_table({"Routing Method", "Easy Queries", "Medium Queries", "Hard Queries"}, rows);
}

std::string render_latency_table(const LatencyReport& r) {
    const auto& s = r.overall;
    std::vector<std::vector<std::string>> rows{
        {"Queries", std::to_string(s.count)},
        {"Mean Response Time", secs(s.mean)},
        {"Median Response Time", secs(s.median)},
        {"Min Response Time", secs(s.min)},
        {"Max Response Time", secs(s.max)},
        {"Std Deviation", secs(s.std)},
        {"P95 Latency", secs(s.p95)},
        {"P99 Latency", secs(s.p99)},
    };
    if (r.excluded) rows.push_back({"Excluded (errors)", std::to_string(r.excluded)});
    return "Latency\n" + render_table({"Metric", "Value"}, rows);
}

std::string render_domain_latency_table(const std::map<std::string, DomainLatency>& by_domain) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [name, d] : by_domain) {
        rows.push_back({name, std::to_string(d.count), fmt::format("{:.3f}", d.mean),
                        fmt::format("{:.3f}", d.median), fmt::format("{:.3f}", d.max)});
    }
    return "Response Time by Domain Expert\n" +
           render_table({"Domain", "Count", "Mean (s)", "Median (s)", "Max (s)"}, rows);
}

std::string render_cold_warm_table(const ColdWarmReport& r) {
    const std::string change = r.improvement_pct >= 0
                                   ? fmt::format("{:.1f}% faster", r.improvement_pct)
                                   : fmt::format("{:.1f}% slower", -r.improvement_pct);
    return "Cold vs. Warm Start Latency\n" +
           render_table({"Condition", "Response Time", "Improvement"},
                        {{"Cold Start", secs(r.cold), "-"},
                         {"Warm Start (avg)", secs(r.warm_mean), change}});
}

void write_report(const std::filesystem::path& path, const json& record) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report " + path.string());
    out << record.dump(2) << '\n';
    if (!out) throw IoError("failed writing report " + path.string());
}

} // namespace switchboard::eval
