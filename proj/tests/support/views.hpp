#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "compass/fast_agms.hpp"
#include "compass/merge.hpp"

namespace compass::testing {

/// Tables t0..t{n-1}; edge e joins tables first/second on column "c<e>".
struct GraphShape {
    std::size_t tables = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    std::vector<std::size_t> incident(std::size_t t) const {
        std::vector<std::size_t> out;
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e].first == t || edges[e].second == t) out.push_back(e);
        return out;
    }

    std::string attribute(std::size_t t, std::size_t e) const {
        return "t" + std::to_string(t) + ".c" + std::to_string(e);
    }

    std::string edge_id(std::size_t e) const {
        return canonical_edge_id(attribute(edges[e].first, e), attribute(edges[e].second, e));
    }
};

/// Random tuples: one key per incident edge, uniform on [0, domain).
inline std::vector<std::vector<std::uint64_t>> random_tuples(std::size_t n, std::size_t arity, std::uint64_t domain,
                                                             std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint64_t> d(0, domain - 1);
    std::vector<std::vector<std::uint64_t>> out(n, std::vector<std::uint64_t>(arity));
    for (auto& t : out)
        for (auto& k : t) k = d(rng);
    return out;
}

/// Builds the merged view of every table of `shape` from `data[t]` (tuples in
/// the order of `shape.incident(t)`).
inline std::vector<MergedTensorView> build_views(const GraphShape& shape,
                                                 const std::vector<std::vector<std::vector<std::uint64_t>>>& data,
                                                 SketchConfig cfg, std::uint64_t master_seed) {
    std::vector<MergedTensorView> views;
    for (std::size_t t = 0; t < shape.tables; ++t) {
        const auto inc = shape.incident(t);
        std::vector<MergedTensorView::Constituent> parts;
        for (std::size_t i = 0; i < inc.size(); ++i) {
            FastAgmsSketch sk(cfg, shape.edge_id(inc[i]), master_seed);
            for (const auto& tuple : data[t]) sk.update(tuple[i]);
            parts.push_back({shape.attribute(t, inc[i]), std::move(sk)});
        }
        views.emplace_back("t" + std::to_string(t), std::move(parts));
    }
    return views;
}

inline std::vector<MergedTensorView> random_views(const GraphShape& shape, std::size_t rows_per_table,
                                                  std::uint64_t domain, SketchConfig cfg, std::uint64_t master_seed,
                                                  std::mt19937_64& rng) {
    std::vector<std::vector<std::vector<std::uint64_t>>> data;
    for (std::size_t t = 0; t < shape.tables; ++t)
        data.push_back(random_tuples(rows_per_table, shape.incident(t).size(), domain, rng));
    return build_views(shape, data, cfg, master_seed);
}

} // namespace compass::testing
