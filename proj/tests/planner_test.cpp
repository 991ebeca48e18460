#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "compass/enumerate.hpp"
#include "compass/estimator.hpp"
#include "compass/oracle.hpp"
#include "compass/run.hpp"
#include "compass/synth.hpp"

using namespace compass;

namespace {

/// Deterministic pseudo-random cardinalities per vertex set.
class HashedEstimator : public CardinalityEstimator {
public:
    HashedEstimator(const JoinGraph& g, std::uint64_t seed) : g_(&g), seed_(seed) {}

    double estimate(VertexSet s) override {
        ++calls;
        seen.insert(s);
        if (std::popcount(s) == 1) return g_->vertices()[static_cast<std::size_t>(std::countr_zero(s))].cardinality;
        return static_cast<double>(detail::splitmix64(seed_ ^ s) % 100000);
    }

    std::size_t calls = 0;
    std::set<VertexSet> seen;

private:
    const JoinGraph* g_;
    std::uint64_t seed_;
};

JoinGraph random_graph(std::size_t n, std::size_t extra, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    JoinGraph g;
    for (std::size_t v = 0; v < n; ++v)
        g.add_vertex("v" + std::to_string(v), static_cast<double>(1 + rng() % 1000));
    std::size_t e = 0;
    auto connect = [&](std::size_t a, std::size_t b) {
        const auto id = std::to_string(e++);
        g.add_edge("e" + id, "v" + std::to_string(a), "c" + id, "v" + std::to_string(b), "c" + id);
    };
    for (std::size_t v = 1; v < n; ++v) connect(rng() % v, v);
    for (std::size_t k = 0; k < extra; ++k) {
        const std::size_t a = rng() % n, b = rng() % n;
        if (a != b) connect(a, b);
    }
    return g;
}

JoinGraph movie_shape() {
    JoinGraph g;
    g.add_vertex("t", 100);
    g.add_vertex("mk", 1000);
    g.add_vertex("k", 10);
    g.add_vertex("ci", 2000);
    g.add_vertex("n", 20);
    g.add_edge("e1", "t", "id", "mk", "movie_id");
    g.add_edge("e2", "mk", "keyword_id", "k", "id");
    g.add_edge("e3", "t", "id", "ci", "movie_id");
    g.add_edge("e4", "ci", "movie_id", "mk", "movie_id");
    g.add_edge("e5", "ci", "person_id", "n", "id");
    return g;
}

double min_cost(const JoinGraph& g, CardinalityEstimator& est) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : exhaustive_leftdeep_costs(g, est)) best = std::min(best, c.cost);
    return best;
}

double order_cost(const std::vector<std::size_t>& order, CardinalityEstimator& est) {
    double c = 0;
    VertexSet s = 0;
    for (auto v : order) {
        s |= vertex_bit(v);
        c += est.estimate(s);
    }
    return c;
}

EnumConfig mode(const std::string& name, bool pruning = true) {
    EnumConfig c;
    c.set_mode(name);
    c.pruning = pruning;
    return c;
}

struct MovieFixture {
    SynthQuery q = movie_query(3);
    std::map<std::string, ScanResult> scans;
    JoinGraph graph;

    explicit MovieFixture(SketchConfig sk = {}) {
        ScanOptions o;
        o.sketch = sk;
        scans = scan_query(q.spec, q.tables, o);
        graph = build_join_graph(q.spec, scans);
    }
};

} // namespace

TEST(JoinGraph, MovieDegrees) {
    const auto g = movie_shape();
    EXPECT_EQ(g.degree(g.vertex_index("mk")), 3u);
    EXPECT_EQ(g.degree(g.vertex_index("ci")), 3u);
    EXPECT_EQ(g.degree(g.vertex_index("t")), 2u);
    EXPECT_EQ(g.degree(g.vertex_index("k")), 1u);
    EXPECT_EQ(g.degree(g.vertex_index("n")), 1u);
    EXPECT_TRUE(g.connected(g.all()));
    EXPECT_FALSE(g.connected(vertex_bit(g.vertex_index("k")) | vertex_bit(g.vertex_index("n"))));
}

TEST(JoinGraph, BuiltFromScans) {
    MovieFixture f({3, 64});
    EXPECT_EQ(f.graph.size(), 5u);
    EXPECT_EQ(f.graph.edges().size(), 5u);
    for (const auto& v : f.graph.vertices())
        EXPECT_EQ(v.cardinality, static_cast<double>(f.scans.at(v.alias).exact_count));
    EXPECT_EQ(f.graph.degree(f.graph.vertex_index("mk")), 3u);
}

TEST(JoinGraph, RejectsBadShapes) {
    JoinGraph g;
    g.add_vertex("a", 1);
    g.add_vertex("b", 1);
    g.add_vertex("c", 1);
    EXPECT_THROW(g.add_vertex("a", 1), InvalidInput);
    EXPECT_THROW(g.add_edge("x", "a", "k", "a", "j"), InvalidInput);
    EXPECT_THROW(g.add_edge("x", "a", "k", "zz", "j"), InvalidInput);
    g.add_edge("e1", "a", "k", "b", "k");
    EXPECT_THROW(g.add_edge("e2", "b", "k", "a", "k"), InvalidInput);
    EXPECT_THROW(g.require_connected(), InvalidInput);
    g.add_edge("e2", "a", "j", "b", "j");
    EXPECT_EQ(g.degree(0), 2u);
}

TEST(VertexOrder, Example) {
    JoinGraph g;
    g.add_vertex("v1", 8);
    g.add_vertex("v2", 8);
    g.add_vertex("v3", 64);
    g.add_edge("e1", "v1", "a", "v2", "a");
    g.add_edge("e2", "v2", "b", "v3", "b");
    EXPECT_EQ(vertex_order(g, EnumConfig{}), (std::vector<std::size_t>{0, 1, 2}));
    EnumConfig degree_only;
    degree_only.alpha = 0;
    degree_only.beta = 1;
    EXPECT_EQ(vertex_order(g, degree_only), (std::vector<std::size_t>{0, 2, 1}));
    EnumConfig card_only;
    card_only.alpha = 1;
    card_only.beta = 0;
    EXPECT_EQ(vertex_order(g, card_only), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(EnumConfig, ModeRoundTrip) {
    for (const char* name : {"greedy", "full-greedy", "limit-10", "limit-3", "exhaustive"}) {
        EnumConfig c;
        c.set_mode(name);
        EXPECT_EQ(c.mode_name(), name);
        const auto back = EnumConfig::from_json(c.to_json());
        EXPECT_EQ(back.mode, c.mode);
        EXPECT_EQ(back.mode_name(), name);
        EXPECT_EQ(enumeration_mode(back), c.mode);
    }
    EnumConfig c;
    EXPECT_EQ(c.mode_name(), "limit-10");
    EXPECT_EQ(c.plan_limit(), std::optional<std::size_t>(10));
    c.set_mode("exhaustive");
    EXPECT_FALSE(c.plan_limit());
    EXPECT_THROW(c.set_mode("limit-0"), InvalidInput);
    EXPECT_THROW(c.set_mode("limit-x"), InvalidInput);
    EXPECT_THROW(c.set_mode("random"), InvalidInput);
    c.alpha = 1.5;
    EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Enumerate, TwoTables) {
    JoinGraph g;
    g.add_vertex("a", 10);
    g.add_vertex("b", 5);
    g.add_edge("e", "a", "k", "b", "k");
    HashedEstimator est(g, 1);
    const auto r = enumerate(g, mode("exhaustive"), est);
    ASSERT_TRUE(r.found());
    EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 0}));
    const double pair = est.estimate(g.all());
    EXPECT_DOUBLE_EQ(r.cost, 5 + pair);
    EXPECT_EQ(r.prefix_estimates, (std::vector<double>{5, pair}));
}

TEST(Enumerate, SingleTable) {
    JoinGraph g;
    g.add_vertex("only", 42);
    HashedEstimator est(g, 1);
    const auto r = enumerate(g, EnumConfig{}, est);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{0}));
    EXPECT_DOUBLE_EQ(r.cost, 42);
}

TEST(Enumerate, RejectsDisconnectedGraph) {
    JoinGraph g;
    g.add_vertex("a", 1);
    g.add_vertex("b", 1);
    HashedEstimator est(g, 1);
    EXPECT_THROW(enumerate(g, EnumConfig{}, est), InvalidInput);
}

TEST(Enumerate, ExhaustiveMatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto g = random_graph(2 + seed % 6, seed % 4, seed);
        HashedEstimator est(g, seed * 7 + 1);
        for (bool prune : {true, false}) {
            const auto r = enumerate(g, mode("exhaustive", prune), est);
            EXPECT_DOUBLE_EQ(r.cost, min_cost(g, est)) << "seed " << seed << " pruning " << prune;
            EXPECT_DOUBLE_EQ(order_cost(r.order, est), r.cost);
        }
    }
}

TEST(Enumerate, PlansOnlyFollowEdges) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = random_graph(7, 2, seed);
        HashedEstimator est(g, seed);
        const auto r = enumerate(g, mode("limit-5"), est);
        ASSERT_EQ(r.order.size(), g.size());
        VertexSet s = 0;
        for (auto v : r.order) {
            s |= vertex_bit(v);
            EXPECT_TRUE(g.connected(s));
        }
        for (auto s2 : est.seen) EXPECT_TRUE(g.connected(s2));
    }
}

TEST(Enumerate, PruningIsSoundAndCutsWork) {
    std::size_t total_prunes = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = random_graph(7, 3, seed + 100);
        HashedEstimator a(g, seed), b(g, seed);
        const auto with = enumerate(g, mode("exhaustive", true), a);
        const auto without = enumerate(g, mode("exhaustive", false), b);
        EXPECT_DOUBLE_EQ(with.cost, without.cost);
        EXPECT_EQ(without.stats.prunes, 0u);
        EXPECT_LE(with.stats.plans_completed, without.stats.plans_completed);
        EXPECT_EQ(without.stats.plans_completed, exhaustive_leftdeep_costs(g, b).size());
        total_prunes += with.stats.prunes;
    }
    EXPECT_GT(total_prunes, 0u);
}

TEST(Enumerate, PruneCountsBranchesAboveIncumbent) {
    JoinGraph g;
    g.add_vertex("a", 1);
    g.add_vertex("b", 1);
    g.add_vertex("c", 1000);
    g.add_edge("e1", "a", "k", "b", "k");
    g.add_edge("e2", "b", "j", "c", "j");
    struct Fixed : CardinalityEstimator {
        double estimate(VertexSet s) override {
            switch (s) {
            case 0b001: return 1;
            case 0b010: return 1;
            case 0b100: return 1000;
            case 0b011: return 2;
            case 0b110: return 5;
            default: return 10;
            }
        }
    } est;
    const auto r = enumerate(g, mode("exhaustive"), est);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_DOUBLE_EQ(r.cost, 13);
    EXPECT_EQ(r.stats.sources_explored, 3u);
    // b,a,c ties the incumbent; b,c,a reaches 16 and source c starts at 1000.
    EXPECT_EQ(r.stats.prunes, 2u);
    EXPECT_EQ(r.stats.plans_completed, 2u);
}

TEST(Enumerate, ModesAreNested) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto g = random_graph(8, seed % 3, seed + 500);
        HashedEstimator est(g, seed + 11);
        const double greedy = enumerate(g, mode("greedy"), est).cost;
        const double full = enumerate(g, mode("full-greedy"), est).cost;
        const double limit = enumerate(g, mode("limit-10"), est).cost;
        const double exhaustive = enumerate(g, mode("exhaustive"), est).cost;
        EXPECT_LE(exhaustive, limit) << seed;
        EXPECT_LE(limit, full) << seed;
        EXPECT_LE(full, greedy) << seed;
        EXPECT_DOUBLE_EQ(exhaustive, min_cost(g, est)) << seed;
    }
}

TEST(Enumerate, LimitAbortsSources) {
    const auto g = random_graph(8, 2, 9);
    HashedEstimator est(g, 3);
    const auto r = enumerate(g, mode("limit-2", false), est);
    EXPECT_EQ(r.stats.sources_explored, g.size());
    ASSERT_EQ(r.stats.plans_per_source.size(), g.size());
    for (auto n : r.stats.plans_per_source) EXPECT_LE(n, 2u);
    EXPECT_GT(r.stats.sources_aborted, 0u);
    const auto fg = enumerate(g, mode("full-greedy", false), est);
    for (auto n : fg.stats.plans_per_source) EXPECT_EQ(n, 1u);
}

TEST(Enumerate, GreedyStartsAtCheapestEdge) {
    JoinGraph g;
    g.add_vertex("a", 50);
    g.add_vertex("b", 10);
    g.add_vertex("c", 30);
    g.add_edge("e1", "a", "k", "b", "k");
    g.add_edge("e2", "b", "j", "c", "j");
    struct Fixed : CardinalityEstimator {
        double estimate(VertexSet s) override {
            switch (s) {
            case 0b001: return 50;
            case 0b010: return 10;
            case 0b100: return 30;
            case 0b011: return 100;
            case 0b110: return 7;
            default: return 60;
            }
        }
    } est;
    EXPECT_EQ(greedy_source(g, est), 1u);
    const auto r = enumerate(g, mode("greedy"), est);
    EXPECT_EQ(r.sources, (std::vector<std::size_t>{1}));
    EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(SketchEstimator, SingletonsAreExact) {
    MovieFixture f({3, 64});
    auto est = SketchEstimator::from_scans(f.graph, f.scans);
    for (std::size_t v = 0; v < f.graph.size(); ++v)
        EXPECT_EQ(est.estimate(vertex_bit(v)), f.graph.vertices()[v].cardinality);
}

TEST(SketchEstimator, PermutationInvariant) {
    MovieFixture f({5, 256});
    SketchEstimatorOptions o;
    o.caching = false;
    auto est = SketchEstimator::from_scans(f.graph, f.scans, o);
    const auto t = f.graph.vertex_index("t"), mk = f.graph.vertex_index("mk"), ci = f.graph.vertex_index("ci"),
               k = f.graph.vertex_index("k");
    std::vector<std::size_t> p{t, mk, ci, k};
    std::sort(p.begin(), p.end());
    const double first = estimate_subplan(p, est);
    do {
        EXPECT_EQ(estimate_subplan(p, est), first);
    } while (std::next_permutation(p.begin(), p.end()));
    EXPECT_EQ(est.cache_hits(), 0u);
}

TEST(SketchEstimator, CachingIsTransparent) {
    MovieFixture f({3, 128});
    SketchEstimatorOptions on, off;
    off.caching = false;
    auto cached = SketchEstimator::from_scans(f.graph, f.scans, on);
    auto plain = SketchEstimator::from_scans(f.graph, f.scans, off);
    for (auto s : connected_subplans(f.graph, 2, 5)) EXPECT_EQ(cached.estimate(s), plain.estimate(s));
    for (const char* m : {"greedy", "limit-10", "exhaustive"}) {
        const auto a = enumerate(f.graph, mode(m), cached);
        const auto b = enumerate(f.graph, mode(m), plain);
        EXPECT_EQ(a.order, b.order) << m;
        EXPECT_EQ(a.prefix_estimates, b.prefix_estimates) << m;
        EXPECT_EQ(a.cost, b.cost) << m;
    }
    EXPECT_GT(cached.cache_hits(), 0u);
    EXPECT_LT(cached.computed(), plain.computed());
}

TEST(SketchEstimator, TwoTableMatchesTwoWay) {
    MovieFixture f;
    auto est = SketchEstimator::from_scans(f.graph, f.scans);
    const auto& e = f.graph.edges()[0];
    const auto& a = f.scans.at(f.graph.vertices()[e.a].alias).sketches.at(e.edge_id);
    const auto& b = f.scans.at(f.graph.vertices()[e.b].alias).sketches.at(e.edge_id);
    const double expect = std::max(0.0, two_way_estimate(a, b).value);
    EXPECT_DOUBLE_EQ(est.estimate(vertex_bit(e.a) | vertex_bit(e.b)), expect);
}

TEST(SketchEstimator, RejectsBadInput) {
    MovieFixture f({3, 64});
    auto est = SketchEstimator::from_scans(f.graph, f.scans);
    const auto k = f.graph.vertex_index("k"), n = f.graph.vertex_index("n");
    EXPECT_THROW(est.contract(vertex_bit(k) | vertex_bit(n)), InvalidInput);
    EXPECT_THROW(est.contract(vertex_bit(k)), InvalidInput);
    auto scans = f.scans;
    scans.erase("k");
    EXPECT_THROW(SketchEstimator::from_scans(f.graph, scans), InvalidInput);
}
