#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "compass/compass.hpp"

using namespace compass;
using nlohmann::json;

namespace {

RunConfig small_config() {
    RunConfig c;
    c.sketch = {5, 256};
    c.workers = 1;
    return c;
}

BenchQuery disjoint_query() {
    BenchQuery q;
    q.name = "disjoint";
    q.tables.emplace("a", make_int_table("a", {{"k", {1, 1, 2, 3}}}));
    q.tables.emplace("b", make_int_table("b", {{"k", {1, 2, 2}}, {"j", {10, 11, 12}}}));
    q.tables.emplace("c", make_int_table("c", {{"j", {20, 21}}}));
    q.spec = QuerySpec::from_json(json::parse(R"({
      "tables": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
      "joins": [{"left": "a.k", "right": "b.k"}, {"left": "b.j", "right": "c.j"}]})"));
    return q;
}

} // namespace

TEST(RunConfig, JsonRoundTrip) {
    RunConfig c;
    c.master_seed = 7;
    c.sketch = {7, 512};
    c.enumeration.set_mode("limit-4");
    c.enumeration.alpha = 0.25;
    c.materialize_threshold = 123;
    c.frontier_cap = 4;
    c.bench_max_size = 3;
    c.catalog_dir = "cat";
    c.query_path = "q.json";
    const auto back = RunConfig::from_json(json::parse(c.to_json().dump()));
    EXPECT_EQ(back.to_json(), c.to_json());
    EXPECT_EQ(back.sketch, c.sketch);
    EXPECT_EQ(back.enumeration.mode_name(), "limit-4");
    EXPECT_FALSE(c.to_json().contains("workers"));
}

TEST(RunConfig, Validation) {
    EXPECT_THROW(RunConfig::from_json(json::parse(R"({"sketch":{"rows":4}})")), InvalidInput);
    EXPECT_THROW(RunConfig::from_json(json::parse(R"({"sketch":{"buckets":1000}})")), InvalidInput);
    EXPECT_THROW(RunConfig::from_json(json::parse(R"({"frontier_cap":0})")), InvalidInput);
    EXPECT_THROW(RunConfig::from_json(json::parse(R"({"enumeration":{"mode":"bogus"}})")), InvalidInput);
    EXPECT_THROW(RunConfig::from_json(json::parse(R"({"master_seed":"x"})")), InvalidInput);
    const auto d = RunConfig::from_json(json::object());
    EXPECT_EQ(d.sketch.rows, 11u);
    EXPECT_EQ(d.sketch.buckets, 1024u);
    EXPECT_EQ(d.enumeration.mode_name(), "limit-10");
}

TEST(Optimize, DeterministicAcrossRunsAndWorkers) {
    const auto q = movie_query(1);
    auto cfg = small_config();
    const auto a = run_optimize(q.spec, q.tables, cfg);
    const auto b = run_optimize(q.spec, q.tables, cfg);
    cfg.workers = 4;
    const auto c = run_optimize(q.spec, q.tables, cfg);
    EXPECT_EQ(a.plan_json(), b.plan_json());
    EXPECT_EQ(a.plan_json(), c.plan_json());
    EXPECT_TRUE(a.to_json().contains("timing"));
    EXPECT_FALSE(a.plan_json().contains("timing"));
    EXPECT_EQ(a.order.size(), 5u);
}

TEST(Optimize, SeedChangesSketchesNotShape) {
    const auto q = movie_query(1);
    auto cfg = small_config();
    const auto a = run_optimize(q.spec, q.tables, cfg);
    cfg.master_seed = 43;
    const auto b = run_optimize(q.spec, q.tables, cfg);
    EXPECT_EQ(a.plan_json()["tables"], b.plan_json()["tables"]);
    EXPECT_NE(a.plan_json()["prefix_estimates"], b.plan_json()["prefix_estimates"]);
}

TEST(Optimize, TwoTableReport) {
    BenchQuery q;
    q.tables.emplace("a", make_int_table("a", {{"k", {1, 1, 2}}}));
    q.tables.emplace("b", make_int_table("b", {{"k", {1, 2, 2, 2, 9}}}));
    q.spec = QuerySpec::from_json(json::parse(R"({
      "tables": [{"name": "a"}, {"name": "b"}],
      "joins": [{"left": "a.k", "right": "b.k"}]})"));
    const auto rep = run_optimize(q.spec, q.tables, small_config());
    EXPECT_EQ(rep.order, (std::vector<std::string>{"a", "b"}));
    const auto j = rep.to_json();
    ASSERT_EQ(j["prefix_estimates"].size(), 2u);
    EXPECT_EQ(j["prefix_estimates"][0], 3.0);
    EXPECT_DOUBLE_EQ(j["prefix_estimates"][1].get<double>(), 5.0);
    EXPECT_DOUBLE_EQ(j["cost"].get<double>(), 8.0);
    EXPECT_EQ(j["tables"][1]["cardinality"], 5.0);
}

TEST(Optimize, MatchesHandAssembledPipeline) {
    const auto q = movie_query(2);
    const auto cfg = small_config();
    const auto rep = run_optimize(q.spec, q.tables, cfg);

    std::map<std::string, ScanResult> scans;
    const auto attrs = join_attributes(q.spec);
    for (const auto& t : q.spec.tables)
        scans.emplace(t.alias, scan(q.tables.at(t.name), t.predicate.get(), attrs.at(t.alias), cfg.scan_options()));
    const auto g = build_join_graph(q.spec, scans);
    auto est = SketchEstimator::from_scans(g, scans, cfg.estimator_options());
    const auto plan = enumerate(g, cfg.enumeration, est);
    EXPECT_EQ(g.aliases(plan.order), rep.order);
    EXPECT_EQ(plan.prefix_estimates, rep.plan.prefix_estimates);
    EXPECT_EQ(plan.cost, rep.plan.cost);
}

TEST(Optimize, CatalogRoundTripGivesSamePlan) {
    const auto q = movie_query(4, 0.5);
    const auto dir = std::filesystem::temp_directory_path() / ("compass_run_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    Catalog cat(dir);
    for (const auto& [name, t] : q.tables) cat.store(t);
    const auto loaded = load_query_tables(cat, q.spec);
    EXPECT_EQ(loaded.size(), 5u);
    const auto cfg = small_config();
    EXPECT_EQ(run_optimize(q.spec, loaded, cfg).plan_json(), run_optimize(q.spec, q.tables, cfg).plan_json());
    std::filesystem::remove_all(dir);
}

TEST(Optimize, UnknownTable) {
    auto q = movie_query(1, 0.1);
    q.tables.erase("keyword");
    EXPECT_THROW(run_optimize(q.spec, q.tables, small_config()), InvalidInput);
}

TEST(Bench, FlagsZeroTruths) {
    auto cfg = small_config();
    cfg.bench_max_size = 3;
    const auto res = run_bench({disjoint_query()}, cfg);
    ASSERT_EQ(res.reports.size(), 1u);
    const auto& r = res.reports[0];
    ASSERT_EQ(r.subplans.size(), 3u);
    EXPECT_EQ(r.subplans[0].exact, 4u);
    EXPECT_EQ(r.subplans[1].exact, 0u);
    EXPECT_EQ(r.subplans[2].exact, 0u);
    EXPECT_EQ(r.zero_truths, 2u);
    const auto j = res.to_json();
    EXPECT_EQ(j["summary"]["zero_truths"], 2);
    EXPECT_EQ(j["summary"]["subplans"], 3);
    std::ostringstream csv;
    res.write_csv(csv);
    EXPECT_NE(csv.str().find("disjoint,b-c,2,0,"), std::string::npos) << csv.str();
}

TEST(Bench, SkipsQueriesBeyondLimits) {
    auto cfg = small_config();
    cfg.frontier_cap = 1;
    BenchQuery movie;
    auto m = movie_query(1, 0.2);
    movie.name = "movie";
    movie.spec = m.spec;
    movie.tables = m.tables;
    const auto res = run_bench({movie, disjoint_query()}, cfg);
    ASSERT_EQ(res.skipped.size(), 1u);
    EXPECT_EQ(res.skipped[0].first, "movie");
    ASSERT_EQ(res.reports.size(), 1u);
    EXPECT_EQ(res.reports[0].query, "disjoint");
    EXPECT_EQ(res.to_json()["skipped"][0]["query"], "movie");
}

TEST(Bench, MovieQueryReport) {
    const auto m = movie_query(6, 0.5);
    BenchQuery q{"movie", m.spec, m.tables};
    const auto res = run_bench({q}, small_config());
    ASSERT_EQ(res.reports.size(), 1u);
    const auto& r = res.reports[0];
    std::size_t connected = 0;
    for (std::size_t k = 2; k <= 5; ++k) {
        for (const auto& c : r.l1)
            if (c.size == k) {
                EXPECT_LE(c.l1.distance, c.reversed_max);
                connected += c.subplans;
            }
    }
    EXPECT_EQ(connected, r.subplans.size());
    EXPECT_EQ(r.plan.size(), 5u);
}
