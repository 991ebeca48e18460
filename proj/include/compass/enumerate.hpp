#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "compass/error.hpp"
#include "compass/estimator.hpp"
#include "compass/join_graph.hpp"

namespace compass {

enum class EnumerationMode { Greedy, FullGreedy, Limit, Exhaustive };

/// Plan-search knobs. Vertices are tried as DFS sources in increasing
/// f(v) = alpha * card(v) / max card + beta * deg(v) / max deg.
struct EnumConfig {
    double alpha = 0.5;
    double beta = 0.5;
    EnumerationMode mode = EnumerationMode::Limit;
    std::size_t max_plans = 10;  ///< per-source limit in Limit mode
    bool pruning = true;

    /// Complete plans allowed per source; nullopt means unbounded.
    std::optional<std::size_t> plan_limit() const {
        switch (mode) {
        case EnumerationMode::Greedy:
        case EnumerationMode::FullGreedy: return 1;
        case EnumerationMode::Limit: return max_plans;
        case EnumerationMode::Exhaustive: return std::nullopt;
        }
        return std::nullopt;
    }

    std::string mode_name() const {
        switch (mode) {
        case EnumerationMode::Greedy: return "greedy";
        case EnumerationMode::FullGreedy: return "full-greedy";
        case EnumerationMode::Limit: return "limit-" + std::to_string(max_plans);
        case EnumerationMode::Exhaustive: return "exhaustive";
        }
        return {};
    }

    /// Accepts "greedy", "full-greedy", "limit", "limit-N" and "exhaustive".
    void set_mode(const std::string& name) {
        if (name == "greedy") mode = EnumerationMode::Greedy;
        else if (name == "full-greedy") mode = EnumerationMode::FullGreedy;
        else if (name == "exhaustive") mode = EnumerationMode::Exhaustive;
        else if (name == "limit") mode = EnumerationMode::Limit;
        else if (name.rfind("limit-", 0) == 0) {
            mode = EnumerationMode::Limit;
            try {
                std::size_t used = 0;
                const auto n = std::stoul(name.substr(6), &used);
                if (used != name.size() - 6 || n == 0) throw std::invalid_argument(name);
                max_plans = n;
            } catch (const std::exception&) {
                throw InvalidInput("bad plan limit in mode '" + name + "'");
            }
        } else {
            throw InvalidInput("unknown enumeration mode '" + name + "'");
        }
    }

    void validate() const {
        if (alpha < 0 || alpha > 1 || beta < 0 || beta > 1)
            throw InvalidInput("alpha and beta must lie in [0, 1]");
        if (mode == EnumerationMode::Limit && max_plans == 0) throw InvalidInput("max_plans must be positive");
    }

    nlohmann::json to_json() const {
        return {{"alpha", alpha}, {"beta", beta}, {"mode", mode_name()}, {"max_plans", max_plans},
                {"pruning", pruning}};
    }

    static EnumConfig from_json(const nlohmann::json& j) {
        EnumConfig c;
        c.alpha = j.value("alpha", c.alpha);
        c.beta = j.value("beta", c.beta);
        c.max_plans = j.value("max_plans", c.max_plans);
        c.set_mode(j.value("mode", c.mode_name()));
        c.pruning = j.value("pruning", c.pruning);
        c.validate();
        return c;
    }
};

inline EnumerationMode enumeration_mode(const EnumConfig& c) { return c.mode; }

/// Vertices sorted by increasing f(v); ties by alias.
inline std::vector<std::size_t> vertex_order(const JoinGraph& g, const EnumConfig& cfg) {
    if (g.size() == 0) throw InvalidInput("cannot order an empty join graph");
    double max_card = 0.0;
    std::size_t max_deg = 0;
    for (std::size_t v = 0; v < g.size(); ++v) {
        max_card = std::max(max_card, g.vertices()[v].cardinality);
        max_deg = std::max(max_deg, g.degree(v));
    }
    std::vector<double> f(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) {
        const double c = max_card > 0 ? g.vertices()[v].cardinality / max_card : 0.0;
        const double d = max_deg > 0 ? static_cast<double>(g.degree(v)) / static_cast<double>(max_deg) : 0.0;
        f[v] = cfg.alpha * c + cfg.beta * d;
    }
    std::vector<std::size_t> order(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) order[v] = v;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(f[a], g.vertices()[a].alias) < std::tie(f[b], g.vertices()[b].alias);
    });
    return order;
}

/// Greedy-mode source: the smaller endpoint of the two-way join with the
/// smallest estimate.
inline std::size_t greedy_source(const JoinGraph& g, CardinalityEstimator& est) {
    if (g.edges().empty()) return 0;
    std::size_t best = 0;
    std::tuple<double, std::string, std::string> best_key;
    bool first = true;
    for (const auto& e : g.edges()) {
        auto a = g.vertices()[e.a].alias, b = g.vertices()[e.b].alias;
        if (b < a) std::swap(a, b);
        std::tuple<double, std::string, std::string> key{est.estimate(vertex_bit(e.a) | vertex_bit(e.b)), a, b};
        if (first || key < best_key) {
            first = false;
            best_key = key;
            const auto& va = g.vertices()[e.a];
            const auto& vb = g.vertices()[e.b];
            best = std::tie(va.cardinality, va.alias) <= std::tie(vb.cardinality, vb.alias) ? e.a : e.b;
        }
    }
    return best;
}

struct EnumStats {
    std::size_t plans_completed = 0;
    std::size_t prunes = 0;
    std::size_t estimator_calls = 0;
    std::size_t sources_explored = 0;
    std::size_t sources_aborted = 0;
    std::vector<std::size_t> plans_per_source;  ///< parallel to the explored sources
};

struct PlanResult {
    std::vector<std::size_t> order;          ///< best complete left-deep order
    std::vector<double> prefix_estimates;    ///< estimate of every prefix of `order`
    double cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> sources;
    EnumStats stats;

    bool found() const { return !order.empty(); }
};

/// Depth-first left-deep plan search over the join graph.
///
/// Every source is expanded along graph edges only (no cross products);
/// children are visited in increasing estimate of the extended prefix. The
/// cost of a prefix is the sum of the estimates of all its sub-prefixes,
/// including the single first table and the complete plan. Branches whose
/// cost exceeds the best complete plan are cut, and a source is abandoned
/// once it has produced `plan_limit()` complete plans.
inline PlanResult enumerate(const JoinGraph& g, const EnumConfig& cfg, CardinalityEstimator& est) {
    cfg.validate();
    g.require_connected();

    PlanResult res;
    struct Counting : CardinalityEstimator {
        CardinalityEstimator& inner;
        std::size_t calls = 0;
        explicit Counting(CardinalityEstimator& e) : inner(e) {}
        double estimate(VertexSet s) override {
            ++calls;
            return inner.estimate(s);
        }
    } counted(est);

    const auto limit = cfg.plan_limit();
    std::size_t completed_here = 0;
    bool abort = false;
    std::vector<std::size_t> path;

    auto dfs = [&](auto& self, VertexSet c, double cost) -> void {
        cost += counted.estimate(c);
        if (cfg.pruning && cost > res.cost) {
            ++res.stats.prunes;
            return;
        }
        if (c == g.all()) {
            if (cost < res.cost) {
                res.cost = cost;
                res.order = path;
            }
            ++completed_here;
            ++res.stats.plans_completed;
            if (limit && completed_here == *limit) abort = true;
            return;
        }
        std::vector<std::pair<double, std::size_t>> kids;
        for (auto v : members(g.neighbors(c))) kids.emplace_back(counted.estimate(c | vertex_bit(v)), v);
        std::sort(kids.begin(), kids.end(), [&](const auto& x, const auto& y) {
            return std::tie(x.first, g.vertices()[x.second].alias) < std::tie(y.first, g.vertices()[y.second].alias);
        });
        for (const auto& [e, v] : kids) {
            if (abort) return;
            path.push_back(v);
            self(self, c | vertex_bit(v), cost);
            path.pop_back();
        }
    };

    if (cfg.mode == EnumerationMode::Greedy) res.sources = {greedy_source(g, counted)};
    else res.sources = vertex_order(g, cfg);

    for (auto s : res.sources) {
        completed_here = 0;
        abort = false;
        path = {s};
        dfs(dfs, vertex_bit(s), 0.0);
        ++res.stats.sources_explored;
        res.stats.plans_per_source.push_back(completed_here);
        if (abort) ++res.stats.sources_aborted;
    }

    VertexSet prefix = 0;
    for (auto v : res.order) {
        prefix |= vertex_bit(v);
        res.prefix_estimates.push_back(counted.estimate(prefix));
    }
    res.stats.estimator_calls = counted.calls;
    return res;
}

} // namespace compass
