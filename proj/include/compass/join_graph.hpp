#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "compass/error.hpp"
#include "compass/query_spec.hpp"
#include "compass/rng.hpp"
#include "compass/scan.hpp"

namespace compass {

/// Set of graph vertices as a bitmask; queries are limited to 64 tables.
using VertexSet = std::uint64_t;

inline VertexSet vertex_bit(std::size_t v) { return VertexSet{1} << v; }

inline std::vector<std::size_t> members(VertexSet s) {
    std::vector<std::size_t> out;
    while (s) {
        out.push_back(static_cast<std::size_t>(std::countr_zero(s)));
        s &= s - 1;
    }
    return out;
}

/// Query join graph: one vertex per table alias (with its post-selection
/// cardinality) and one edge per equi-join predicate. Parallel edges between
/// the same pair of vertices are kept as distinct edges.
class JoinGraph {
public:
    struct Vertex {
        std::string alias;
        std::string table;
        double cardinality = 0.0;
    };
    struct Edge {
        std::string name;     ///< user-facing join id, e.g. "e1"
        std::string edge_id;  ///< canonical predicate id used for seeding
        std::size_t a = 0, b = 0;
        std::string a_column, b_column;

        std::size_t other(std::size_t v) const { return v == a ? b : a; }
        const std::string& column_of(std::size_t v) const { return v == a ? a_column : b_column; }
    };

    std::size_t add_vertex(std::string alias, double cardinality, std::string table = {}) {
        if (index_.count(alias)) throw InvalidInput("duplicate vertex '" + alias + "'");
        if (vertices_.size() == 64) throw InvalidInput("join graphs are limited to 64 tables");
        if (table.empty()) table = alias;
        index_[alias] = vertices_.size();
        vertices_.push_back({std::move(alias), std::move(table), cardinality});
        incident_.emplace_back();
        return vertices_.size() - 1;
    }

    std::size_t add_edge(std::string name, const std::string& a_alias, std::string a_column,
                         const std::string& b_alias, std::string b_column) {
        const auto a = vertex_index(a_alias);
        const auto b = vertex_index(b_alias);
        if (a == b) throw InvalidInput("edge " + name + " is a self-loop");
        Edge e{std::move(name), canonical_edge_id(a_alias + "." + a_column, b_alias + "." + b_column),
               a, b, std::move(a_column), std::move(b_column)};
        for (const auto& x : edges_)
            if (x.edge_id == e.edge_id) throw InvalidInput("duplicate join predicate " + e.edge_id);
        edges_.push_back(std::move(e));
        incident_[a].push_back(edges_.size() - 1);
        incident_[b].push_back(edges_.size() - 1);
        return edges_.size() - 1;
    }

    std::size_t vertex_index(const std::string& alias) const {
        auto it = index_.find(alias);
        if (it == index_.end()) throw InvalidInput("unknown alias '" + alias + "'");
        return it->second;
    }

    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t size() const { return vertices_.size(); }
    const std::vector<std::size_t>& incident(std::size_t v) const { return incident_[v]; }
    std::size_t degree(std::size_t v) const { return incident_[v].size(); }
    VertexSet all() const { return vertices_.size() == 64 ? ~VertexSet{0} : vertex_bit(vertices_.size()) - 1; }

    VertexSet neighbors(VertexSet s) const {
        VertexSet out = 0;
        for (auto v : members(s))
            for (auto e : incident_[v]) out |= vertex_bit(edges_[e].other(v));
        return out & ~s;
    }

    bool connected(VertexSet s) const {
        if (s == 0) return false;
        VertexSet seen = s & (~s + 1);
        while (true) {
            const VertexSet next = (seen | neighbors(seen)) & s;
            if (next == seen) break;
            seen = next;
        }
        return seen == s;
    }

    /// Edges with both endpoints in `s`.
    std::vector<std::size_t> induced_edges(VertexSet s) const {
        std::vector<std::size_t> out;
        for (std::size_t e = 0; e < edges_.size(); ++e)
            if ((s & vertex_bit(edges_[e].a)) && (s & vertex_bit(edges_[e].b))) out.push_back(e);
        return out;
    }

    std::vector<std::string> aliases(const std::vector<std::size_t>& order) const {
        std::vector<std::string> out;
        for (auto v : order) out.push_back(vertices_[v].alias);
        return out;
    }

    void require_connected() const {
        if (vertices_.empty()) throw InvalidInput("join graph is empty");
        if (!connected(all())) throw InvalidInput("join graph is disconnected (cross products are not enumerated)");
    }

private:
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> incident_;
    std::map<std::string, std::size_t> index_;
};

/// Join attributes of every alias in `spec`, keyed by alias.
inline std::map<std::string, std::vector<JoinAttribute>> join_attributes(const QuerySpec& spec) {
    std::map<std::string, std::vector<JoinAttribute>> out;
    for (const auto& t : spec.tables) out[t.alias];
    for (const auto& j : spec.joins) {
        out[j.left.alias].push_back({j.edge_id(), j.left.column});
        out[j.right.alias].push_back({j.edge_id(), j.right.column});
    }
    return out;
}

/// Builds the graph with vertices annotated by exact post-selection counts.
inline JoinGraph build_join_graph(const QuerySpec& spec, const std::map<std::string, ScanResult>& scans) {
    spec.validate();
    JoinGraph g;
    for (const auto& t : spec.tables) {
        auto it = scans.find(t.alias);
        if (it == scans.end()) throw InvalidInput("alias '" + t.alias + "' was not scanned");
        g.add_vertex(t.alias, static_cast<double>(it->second.exact_count), t.name);
    }
    for (const auto& j : spec.joins) g.add_edge(j.id, j.left.alias, j.left.column, j.right.alias, j.right.column);
    g.require_connected();
    return g;
}

} // namespace compass
