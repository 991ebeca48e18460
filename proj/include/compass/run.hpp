#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "compass/catalog.hpp"
#include "compass/enumerate.hpp"
#include "compass/error.hpp"
#include "compass/estimator.hpp"
#include "compass/join_graph.hpp"
#include "compass/oracle.hpp"
#include "compass/query_spec.hpp"
#include "compass/scan.hpp"

namespace compass {

inline std::size_t default_workers() {
    const auto n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Everything that determines the outcome of an optimize or bench run.
struct RunConfig {
    std::uint64_t master_seed = 42;
    SketchConfig sketch{};
    EnumConfig enumeration{};
    std::size_t materialize_threshold = 100'000;
    std::size_t frontier_cap = 3;
    std::size_t workers = default_workers();
    std::size_t bench_max_size = 5;
    std::string catalog_dir;
    std::string query_path;
    std::string out_path;

    void validate() const {
        sketch.validate();
        enumeration.validate();
        if (frontier_cap == 0) throw InvalidInput("frontier cap must be positive");
        if (workers == 0) throw InvalidInput("worker count must be positive");
        if (bench_max_size < 2) throw InvalidInput("bench sub-plan size limit must be at least 2");
    }

    ScanOptions scan_options() const { return {sketch, master_seed, materialize_threshold, workers}; }

    SketchEstimatorOptions estimator_options() const {
        SketchEstimatorOptions o;
        o.contraction.frontier_cap = frontier_cap;
        return o;
    }

    /// Serialized without the worker count, which never changes results.
    nlohmann::json to_json() const {
        return {{"master_seed", master_seed},
                {"sketch", {{"rows", sketch.rows}, {"buckets", sketch.buckets}}},
                {"enumeration", enumeration.to_json()},
                {"materialize_threshold", materialize_threshold},
                {"frontier_cap", frontier_cap},
                {"bench_max_size", bench_max_size},
                {"catalog", catalog_dir},
                {"query", query_path},
                {"out", out_path}};
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        try {
            c.master_seed = j.value("master_seed", c.master_seed);
            if (j.contains("sketch")) {
                c.sketch.rows = j["sketch"].value("rows", c.sketch.rows);
                c.sketch.buckets = j["sketch"].value("buckets", c.sketch.buckets);
            }
            if (j.contains("enumeration")) c.enumeration = EnumConfig::from_json(j["enumeration"]);
            c.materialize_threshold = j.value("materialize_threshold", c.materialize_threshold);
            c.frontier_cap = j.value("frontier_cap", c.frontier_cap);
            c.workers = j.value("workers", c.workers);
            c.bench_max_size = j.value("bench_max_size", c.bench_max_size);
            c.catalog_dir = j.value("catalog", c.catalog_dir);
            c.query_path = j.value("query", c.query_path);
            c.out_path = j.value("out", c.out_path);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(std::string("bad run configuration: ") + e.what());
        }
        c.validate();
        return c;
    }
};

/// Loads every base table a query reads from the catalog, keyed by name.
inline std::map<std::string, Table> load_query_tables(const Catalog& catalog, const QuerySpec& spec) {
    std::map<std::string, Table> out;
    for (const auto& t : spec.tables)
        if (!out.count(t.name)) out.emplace(t.name, catalog.load(t.name));
    return out;
}

/// Stage 1: one push-down scan per alias, keyed by alias.
inline std::map<std::string, ScanResult> scan_query(const QuerySpec& spec, const std::map<std::string, Table>& tables,
                                                    const ScanOptions& options) {
    spec.validate();
    const auto attrs = join_attributes(spec);
    std::map<std::string, ScanResult> out;
    for (const auto& t : spec.tables) {
        auto it = tables.find(t.name);
        if (it == tables.end()) throw InvalidInput("query reads unknown table '" + t.name + "'");
        out.emplace(t.alias, scan(it->second, t.predicate.get(), attrs.at(t.alias), options));
    }
    return out;
}

struct OptimizeReport {
    JoinGraph graph;
    PlanResult plan;
    std::vector<std::string> order;
    std::size_t estimates_computed = 0;
    std::size_t cache_hits = 0;
    double scan_ms = 0.0;
    double enumerate_ms = 0.0;
    nlohmann::json config;

    /// Report without timing fields; identical for identical runs.
    nlohmann::json plan_json() const {
        nlohmann::json tables = nlohmann::json::array();
        for (const auto& v : graph.vertices())
            tables.push_back({{"alias", v.alias}, {"table", v.table}, {"cardinality", v.cardinality}});
        return {{"order", order},
                {"prefix_estimates", plan.prefix_estimates},
                {"cost", plan.cost},
                {"tables", tables},
                {"stats",
                 {{"plans_completed", plan.stats.plans_completed},
                  {"prunes", plan.stats.prunes},
                  {"estimator_calls", plan.stats.estimator_calls},
                  {"estimates_computed", estimates_computed},
                  {"cache_hits", cache_hits},
                  {"sources_explored", plan.stats.sources_explored},
                  {"sources_aborted", plan.stats.sources_aborted}}},
                {"config", config}};
    }

    nlohmann::json to_json() const {
        auto j = plan_json();
        j["timing"] = {{"scan_ms", scan_ms}, {"enumerate_ms", enumerate_ms}, {"total_ms", scan_ms + enumerate_ms}};
        return j;
    }
};

/// Scan every table (stage 1), then search for the cheapest left-deep order
/// with merged-sketch estimates (stage 2).
inline OptimizeReport run_optimize(const QuerySpec& spec, const std::map<std::string, Table>& tables,
                                   const RunConfig& cfg) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    OptimizeReport rep;
    rep.config = cfg.to_json();

    const auto t0 = clock::now();
    const auto scans = scan_query(spec, tables, cfg.scan_options());
    rep.graph = build_join_graph(spec, scans);
    auto est = SketchEstimator::from_scans(rep.graph, scans, cfg.estimator_options());
    const auto t1 = clock::now();
    rep.plan = enumerate(rep.graph, cfg.enumeration, est);
    const auto t2 = clock::now();

    rep.order = rep.graph.aliases(rep.plan.order);
    rep.estimates_computed = est.computed();
    rep.cache_hits = est.cache_hits();
    rep.scan_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rep.enumerate_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    return rep;
}

struct BenchQuery {
    std::string name;
    QuerySpec spec;
    std::map<std::string, Table> tables;
};

struct BenchResult {
    std::vector<OracleReport> reports;
    std::vector<std::pair<std::string, std::string>> skipped;  ///< (query, reason)

    nlohmann::json to_json() const {
        nlohmann::json reps = nlohmann::json::array();
        std::size_t rows = 0, zeros = 0;
        std::map<std::size_t, std::pair<double, std::size_t>> l1;
        for (const auto& r : reports) {
            reps.push_back(r.to_json());
            rows += r.subplans.size();
            zeros += r.zero_truths;
            for (const auto& c : r.l1) {
                l1[c.size].first += c.l1.normalized;
                ++l1[c.size].second;
            }
        }
        nlohmann::json mean_l1 = nlohmann::json::object();
        for (const auto& [k, v] : l1) mean_l1[std::to_string(k)] = v.first / static_cast<double>(v.second);
        nlohmann::json skip = nlohmann::json::array();
        for (const auto& [q, why] : skipped) skip.push_back({{"query", q}, {"reason", why}});
        return {{"queries", reps},
                {"skipped", skip},
                {"summary", {{"queries", reports.size()},
                             {"subplans", rows},
                             {"zero_truths", zeros},
                             {"mean_normalized_l1", mean_l1}}}};
    }

    void write_csv(std::ostream& out) const {
        OracleReport::write_csv_header(out);
        for (const auto& r : reports) r.write_csv_rows(out);
    }
};

/// Sketch estimates against exact counts for every connected sub-plan of up
/// to `cfg.bench_max_size` tables. Queries that exceed an oracle guard or the
/// estimator's contraction limits are skipped and listed with the reason.
inline BenchResult run_bench(const std::vector<BenchQuery>& queries, const RunConfig& cfg) {
    cfg.validate();
    BenchResult res;
    for (const auto& q : queries) {
        try {
            const auto scans = scan_query(q.spec, q.tables, cfg.scan_options());
            const auto graph = build_join_graph(q.spec, scans);
            auto est = SketchEstimator::from_scans(graph, scans, cfg.estimator_options());
            auto exact = ExactOracle::from_spec(graph, q.spec, q.tables);
            const auto plan = enumerate(graph, cfg.enumeration, est);
            res.reports.push_back(build_oracle_report(q.name, graph, est, exact, cfg.bench_max_size, plan.order));
        } catch (const GuardExceeded& e) {
            res.skipped.emplace_back(q.name, e.what());
        } catch (const EstimationFailure& e) {
            res.skipped.emplace_back(q.name, e.what());
        }
    }
    return res;
}

} // namespace compass
