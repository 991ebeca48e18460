#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "compass/catalog.hpp"
#include "compass/error.hpp"
#include "compass/estimator.hpp"
#include "compass/join_graph.hpp"
#include "compass/predicate.hpp"
#include "compass/query_spec.hpp"
#include "compass/scan.hpp"

namespace compass {

/// Rows of `table` on which `predicate` is TRUE (all rows when null).
inline Table filter_table(const Table& table, const Predicate* predicate) {
    if (!predicate) return table;
    BoundPredicate bound(*predicate, table);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < table.row_count(); ++r)
        if (bound.matches(r)) rows.push_back(r);
    return select_rows(table, rows);
}

struct ExactOptions {
    /// Largest number of distinct open-edge value combinations kept between
    /// pipeline steps.
    std::size_t max_state = 5'000'000;
    bool caching = true;
};

namespace detail {

struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& k) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ k.size();
        for (auto v : k) h = splitmix64(h ^ v);
        return static_cast<std::size_t>(h);
    }
};

inline std::uint64_t checked_mul_add(std::uint64_t acc, std::uint64_t a, std::uint64_t b) {
    std::uint64_t p = 0, s = 0;
    if (__builtin_mul_overflow(a, b, &p) || __builtin_add_overflow(acc, p, &s))
        throw GuardExceeded("exact join count overflows 64 bits");
    return s;
}

} // namespace detail

/// Exact join cardinalities of connected vertex sets by a hash-join pipeline.
///
/// Tables are joined one at a time; between steps only the counts grouped by
/// the values of still-open join edges are kept, so the state never holds
/// individual join results.
class ExactOracle : public CardinalityEstimator {
public:
    /// `tables[v]` is the filtered table of vertex v.
    ExactOracle(const JoinGraph& graph, std::vector<Table> tables, ExactOptions options = {})
        : graph_(&graph), tables_(std::move(tables)), options_(options) {
        if (tables_.size() != graph.size()) throw InvalidInput("need one table per join-graph vertex");
        for (const auto& e : graph.edges()) {
            const Table& ta = tables_[e.a];
            const Table& tb = tables_[e.b];
            auto ia = ta.schema().index_of(e.a_column);
            auto ib = tb.schema().index_of(e.b_column);
            if (!ia || !ib) throw InvalidInput("join edge " + e.name + " references an unknown column");
            const Column& ca = ta.column(*ia);
            const Column& cb = tb.column(*ib);
            if (ca.type != cb.type) throw InvalidInput("join edge " + e.name + " compares int64 with text");
            std::unordered_map<std::string, std::uint64_t> dict;
            auto encode = [&](const Column& c) {
                Side s;
                s.keys.resize(c.size());
                s.valid.resize(c.size());
                for (std::size_t r = 0; r < c.size(); ++r) {
                    if (c.is_null(r)) continue;
                    s.valid[r] = 1;
                    if (c.type == ColumnType::Int64) {
                        s.keys[r] = static_cast<std::uint64_t>(c.ints[r]);
                    } else {
                        s.keys[r] = dict.emplace(c.texts[r], dict.size()).first->second;
                    }
                }
                return s;
            };
            keys_.push_back({encode(ca), encode(cb)});
        }
    }

    /// Builds the oracle from a query spec and unfiltered base tables keyed by
    /// table name.
    static ExactOracle from_spec(const JoinGraph& graph, const QuerySpec& spec,
                                 const std::map<std::string, Table>& base, ExactOptions options = {}) {
        std::vector<Table> filtered;
        for (std::size_t v = 0; v < graph.size(); ++v) {
            const auto& ref = spec.tables[v];
            if (ref.alias != graph.vertices()[v].alias) throw InvalidInput("spec and graph disagree on vertex order");
            auto it = base.find(ref.name);
            if (it == base.end()) throw InvalidInput("unknown table '" + ref.name + "'");
            filtered.push_back(filter_table(it->second, ref.predicate.get()));
        }
        return ExactOracle(graph, std::move(filtered), options);
    }

    double estimate(VertexSet subplan) override { return static_cast<double>(count(subplan)); }

    std::uint64_t count(VertexSet subplan) {
        if (subplan == 0 || (subplan & ~graph_->all()) != 0)
            throw InvalidInput("sub-plan references unknown vertices");
        if (!graph_->connected(subplan)) throw InvalidInput("sub-plan is not connected");
        if (options_.caching) {
            auto it = cache_.find(subplan);
            if (it != cache_.end()) return it->second;
        }
        const std::uint64_t c = compute(subplan);
        if (options_.caching) cache_.emplace(subplan, c);
        return c;
    }

    const JoinGraph& graph() const { return *graph_; }
    const Table& table(std::size_t v) const { return tables_[v]; }

private:
    struct Side {
        std::vector<std::uint64_t> keys;
        std::vector<char> valid;
    };
    using Key = std::vector<std::uint64_t>;
    using State = std::unordered_map<Key, std::uint64_t, detail::KeyHash>;

    const Side& side(std::size_t e, std::size_t v) const {
        return graph_->edges()[e].a == v ? keys_[e].first : keys_[e].second;
    }

    std::uint64_t compute(VertexSet s) const {
        const auto edges = graph_->induced_edges(s);
        VertexSet done = 0;
        std::vector<std::size_t> frontier;
        State state;
        state.emplace(Key{}, 1);

        while (done != s) {
            const VertexSet cand = done == 0 ? s : (graph_->neighbors(done) & s);
            std::size_t v = SIZE_MAX;
            for (auto u : members(cand))
                if (v == SIZE_MAX || tables_[u].row_count() < tables_[v].row_count()) v = u;

            std::vector<std::size_t> close_pos, close_edge, fresh;
            for (auto e : edges) {
                const auto& ed = graph_->edges()[e];
                if (ed.a != v && ed.b != v) continue;
                if (done & vertex_bit(ed.other(v))) {
                    close_edge.push_back(e);
                    close_pos.push_back(static_cast<std::size_t>(
                        std::find(frontier.begin(), frontier.end(), e) - frontier.begin()));
                } else {
                    fresh.push_back(e);
                }
            }

            std::unordered_map<Key, std::vector<std::pair<Key, std::uint64_t>>, detail::KeyHash> index;
            {
                State groups;
                Key k(close_edge.size() + fresh.size());
                for (std::size_t r = 0; r < tables_[v].row_count(); ++r) {
                    bool ok = true;
                    for (std::size_t i = 0; i < close_edge.size() + fresh.size() && ok; ++i) {
                        const Side& sd = side(i < close_edge.size() ? close_edge[i] : fresh[i - close_edge.size()], v);
                        ok = sd.valid[r] != 0;
                        k[i] = sd.keys[r];
                    }
                    if (ok) ++groups[k];
                }
                for (auto& [key, c] : groups) {
                    Key closing(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(close_edge.size()));
                    Key opened(key.begin() + static_cast<std::ptrdiff_t>(close_edge.size()), key.end());
                    index[std::move(closing)].emplace_back(std::move(opened), c);
                }
            }

            std::vector<std::size_t> keep;
            for (std::size_t i = 0; i < frontier.size(); ++i)
                if (std::find(close_pos.begin(), close_pos.end(), i) == close_pos.end()) keep.push_back(i);

            State next;
            Key probe(close_pos.size());
            for (const auto& [key, c] : state) {
                for (std::size_t i = 0; i < close_pos.size(); ++i) probe[i] = key[close_pos[i]];
                auto it = index.find(probe);
                if (it == index.end()) continue;
                for (const auto& [opened, m] : it->second) {
                    Key nk;
                    nk.reserve(keep.size() + opened.size());
                    for (auto i : keep) nk.push_back(key[i]);
                    nk.insert(nk.end(), opened.begin(), opened.end());
                    auto& slot = next[std::move(nk)];
                    slot = detail::checked_mul_add(slot, c, m);
                }
                if (next.size() > options_.max_state)
                    throw GuardExceeded("exact join state exceeds " + std::to_string(options_.max_state) + " groups");
            }

            std::vector<std::size_t> nf;
            for (auto i : keep) nf.push_back(frontier[i]);
            nf.insert(nf.end(), fresh.begin(), fresh.end());
            frontier = std::move(nf);
            state = std::move(next);
            done |= vertex_bit(v);
            if (state.empty()) return 0;
        }
        std::uint64_t total = 0;
        for (const auto& [k, c] : state) total = detail::checked_mul_add(total, c, 1);
        return total;
    }

    const JoinGraph* graph_;
    std::vector<Table> tables_;
    ExactOptions options_;
    std::vector<std::pair<Side, Side>> keys_;
    std::unordered_map<VertexSet, std::uint64_t> cache_;
};

/// Exact join size of every table in `graph`.
inline std::uint64_t exact_cardinality(const JoinGraph& graph, std::vector<Table> tables,
                                       ExactOptions options = {}) {
    ExactOracle oracle(graph, std::move(tables), options);
    return oracle.count(graph.all());
}

struct L1Distance {
    std::size_t distance = 0;
    double normalized = 0.0;
};

/// 1-based ascending ranks; equal values keep their input order.
inline std::vector<std::size_t> ranks_of(std::span<const double> values) {
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::size_t> rank(values.size());
    for (std::size_t p = 0; p < idx.size(); ++p) rank[idx[p]] = p + 1;
    return rank;
}

/// Sum over items of |rank by estimate - rank by truth|, and that sum / n.
inline L1Distance permutation_l1(std::span<const double> estimates, std::span<const double> truths) {
    if (estimates.size() != truths.size()) throw InvalidInput("estimate and truth lists differ in length");
    if (estimates.empty()) throw InvalidInput("permutation distance needs at least one item");
    const auto s = ranks_of(estimates);
    const auto c = ranks_of(truths);
    L1Distance d;
    for (std::size_t i = 0; i < s.size(); ++i) d.distance += s[i] > c[i] ? s[i] - c[i] : c[i] - s[i];
    d.normalized = static_cast<double>(d.distance) / static_cast<double>(s.size());
    return d;
}

/// Distance between an order of n items and its reverse: floor(n^2 / 2).
inline std::size_t reversed_l1(std::size_t n) { return n * n / 2; }

/// estimate / truth, or nullopt when the truth is zero.
inline std::optional<double> accuracy_ratio(double estimate, double truth) {
    if (truth < 0) throw InvalidInput("true cardinality cannot be negative");
    if (truth == 0) return std::nullopt;
    return estimate / truth;
}

struct LeftDeepCost {
    std::vector<std::size_t> order;
    double cost = 0.0;       ///< sum over all prefixes, first table included
    double join_cost = 0.0;  ///< sum over prefixes of two or more tables
};

/// Every left-deep order whose prefixes are all connected, with its cost under
/// `est`. Orders are listed lexicographically by vertex index.
inline std::vector<LeftDeepCost> exhaustive_leftdeep_costs(const JoinGraph& graph, CardinalityEstimator& est,
                                                           std::size_t max_vertices = 8) {
    if (graph.size() > max_vertices)
        throw GuardExceeded("exhaustive enumeration is limited to " + std::to_string(max_vertices) + " tables");
    graph.require_connected();
    std::vector<LeftDeepCost> out;
    std::vector<std::size_t> path;
    auto dfs = [&](auto& self, VertexSet c, double cost, double join_cost) -> void {
        if (c == graph.all()) {
            out.push_back({path, cost, join_cost});
            return;
        }
        const VertexSet next = c == 0 ? graph.all() : graph.neighbors(c);
        for (auto v : members(next)) {
            const double e = est.estimate(c | vertex_bit(v));
            path.push_back(v);
            self(self, c | vertex_bit(v), cost + e, c == 0 ? 0.0 : join_cost + e);
            path.pop_back();
        }
    };
    dfs(dfs, 0, 0.0, 0.0);
    return out;
}

/// Connected vertex sets with between `min_size` and `max_size` members, in
/// increasing bitmask order.
inline std::vector<VertexSet> connected_subplans(const JoinGraph& graph, std::size_t min_size, std::size_t max_size) {
    if (graph.size() > 24) throw GuardExceeded("sub-plan listing is limited to 24 tables");
    std::vector<VertexSet> out;
    for (VertexSet s = 1; s <= graph.all(); ++s) {
        const auto k = static_cast<std::size_t>(std::popcount(s));
        if (k >= min_size && k <= max_size && graph.connected(s)) out.push_back(s);
    }
    return out;
}

struct SubplanRow {
    VertexSet vertices = 0;
    std::string label;  ///< aliases joined by '-'
    std::size_t size = 0;
    std::uint64_t exact = 0;
    double estimate = 0.0;
    std::optional<double> ratio;
};

struct SizeClassL1 {
    std::size_t size = 0;
    std::size_t subplans = 0;
    L1Distance l1;
    std::size_t reversed_max = 0;
};

struct OracleReport {
    std::string query;
    std::vector<SubplanRow> subplans;
    std::vector<SizeClassL1> l1;
    std::vector<std::string> plan;
    double plan_estimated_cost = 0.0;
    std::uint64_t plan_exact_cost = 0;
    std::size_t zero_truths = 0;

    /// Median ratio over sub-plans with a positive truth.
    std::optional<double> median_ratio() const {
        std::vector<double> r;
        for (const auto& s : subplans)
            if (s.ratio) r.push_back(*s.ratio);
        if (r.empty()) return std::nullopt;
        std::sort(r.begin(), r.end());
        return r.size() % 2 ? r[r.size() / 2] : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
    }

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& s : subplans) {
            rows.push_back({{"subplan", s.label},
                            {"size", s.size},
                            {"exact", s.exact},
                            {"estimate", s.estimate},
                            {"ratio", s.ratio ? nlohmann::json(*s.ratio) : nlohmann::json(nullptr)},
                            {"zero_truth", !s.ratio.has_value()}});
        }
        nlohmann::json l1s = nlohmann::json::array();
        for (const auto& c : l1) {
            l1s.push_back({{"size", c.size},
                           {"subplans", c.subplans},
                           {"distance", c.l1.distance},
                           {"normalized", c.l1.normalized},
                           {"reversed_max", c.reversed_max}});
        }
        auto med = median_ratio();
        return {{"query", query},
                {"subplans", rows},
                {"l1", l1s},
                {"plan", {{"order", plan}, {"estimated_cost", plan_estimated_cost}, {"exact_cost", plan_exact_cost}}},
                {"summary",
                 {{"subplans", subplans.size()},
                  {"zero_truths", zero_truths},
                  {"median_ratio", med ? nlohmann::json(*med) : nlohmann::json(nullptr)}}}};
    }

    static void write_csv_header(std::ostream& out) { out << "query,subplan,size,exact,estimate,ratio,zero_truth\n"; }

    void write_csv_rows(std::ostream& out) const {
        for (const auto& s : subplans) {
            out << query << ',' << s.label << ',' << s.size << ',' << s.exact << ',' << nlohmann::json(s.estimate).dump()
                << ',';
            if (s.ratio) out << nlohmann::json(*s.ratio).dump();
            out << ',' << (s.ratio ? 0 : 1) << '\n';
        }
    }
};

/// Compares `est` against `exact` on every connected sub-plan of two to
/// `max_size` tables, and prices `plan` (vertex order) exactly.
inline OracleReport build_oracle_report(std::string query, const JoinGraph& graph, CardinalityEstimator& est,
                                        ExactOracle& exact, std::size_t max_size,
                                        const std::vector<std::size_t>& plan = {}) {
    OracleReport rep;
    rep.query = std::move(query);
    for (auto s : connected_subplans(graph, 2, max_size)) {
        SubplanRow row;
        row.vertices = s;
        row.size = static_cast<std::size_t>(std::popcount(s));
        for (auto v : members(s)) row.label += (row.label.empty() ? "" : "-") + graph.vertices()[v].alias;
        row.exact = exact.count(s);
        row.estimate = est.estimate(s);
        row.ratio = accuracy_ratio(row.estimate, static_cast<double>(row.exact));
        if (!row.ratio) ++rep.zero_truths;
        rep.subplans.push_back(std::move(row));
    }
    for (std::size_t k = 2; k <= max_size; ++k) {
        std::vector<double> e, t;
        for (const auto& r : rep.subplans)
            if (r.size == k) {
                e.push_back(r.estimate);
                t.push_back(static_cast<double>(r.exact));
            }
        if (e.empty()) continue;
        rep.l1.push_back({k, e.size(), permutation_l1(e, t), reversed_l1(e.size())});
    }
    VertexSet prefix = 0;
    for (auto v : plan) {
        prefix |= vertex_bit(v);
        rep.plan.push_back(graph.vertices()[v].alias);
        rep.plan_estimated_cost += est.estimate(prefix);
        rep.plan_exact_cost = detail::checked_mul_add(rep.plan_exact_cost, exact.count(prefix), 1);
    }
    return rep;
}

} // namespace compass
