#pragma once

#include <bit>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "compass/error.hpp"
#include "compass/fast_agms.hpp"
#include "compass/join_graph.hpp"
#include "compass/merge.hpp"
#include "compass/scan.hpp"

namespace compass {

/// Cardinality of the join of a connected vertex set. Implementations must be
/// deterministic: the same set always yields the same value.
class CardinalityEstimator {
public:
    virtual ~CardinalityEstimator() = default;
    virtual double estimate(VertexSet subplan) = 0;
};

/// Estimates keyed by vertex set, plus merged views of (vertex, edge subset)
/// pairs with at most three edges.
struct EstimateCache {
    std::unordered_map<VertexSet, double> estimates;
    std::map<std::pair<std::size_t, std::vector<std::size_t>>, MergedTensorView> views;

    void clear() {
        estimates.clear();
        views.clear();
    }
};

struct SketchEstimatorOptions {
    ContractionOptions contraction{};
    bool caching = true;
};

/// Sub-plan cardinalities from per-edge Fast-AGMS sketches: exact counts for
/// single tables, merged-sketch contraction (clamped at zero) otherwise.
///
/// The contraction order depends only on the vertex set, so every
/// permutation of a left-deep prefix gets the same value.
class SketchEstimator : public CardinalityEstimator {
public:
    /// `edge_sketches[e]` holds the sketches of edge e on its a- and b-side.
    SketchEstimator(const JoinGraph& graph,
                    std::vector<std::pair<FastAgmsSketch, FastAgmsSketch>> edge_sketches,
                    SketchEstimatorOptions options = {})
        : graph_(&graph), sketches_(std::move(edge_sketches)), options_(options) {
        if (sketches_.size() != graph.edges().size())
            throw InvalidInput("need one sketch pair per join edge");
        for (std::size_t e = 0; e < sketches_.size(); ++e)
            if (!sketches_[e].first.compatible_with(sketches_[e].second) ||
                sketches_[e].first.edge_id() != graph.edges()[e].edge_id)
                throw InvalidInput("sketches of edge " + graph.edges()[e].name + " are inconsistent");
    }

    static SketchEstimator from_scans(const JoinGraph& graph, const std::map<std::string, ScanResult>& scans,
                                      SketchEstimatorOptions options = {}) {
        std::vector<std::pair<FastAgmsSketch, FastAgmsSketch>> sk;
        for (const auto& e : graph.edges()) {
            auto side = [&](std::size_t v) -> const FastAgmsSketch& {
                const auto& alias = graph.vertices()[v].alias;
                auto s = scans.find(alias);
                if (s == scans.end()) throw InvalidInput("alias '" + alias + "' was not scanned");
                auto it = s->second.sketches.find(e.edge_id);
                if (it == s->second.sketches.end())
                    throw InvalidInput("no sketch for edge " + e.edge_id + " on " + alias);
                return it->second;
            };
            sk.emplace_back(side(e.a), side(e.b));
        }
        return SketchEstimator(graph, std::move(sk), options);
    }

    double estimate(VertexSet subplan) override {
        ++calls_;
        if (std::popcount(subplan) == 1)
            return graph_->vertices()[static_cast<std::size_t>(std::countr_zero(subplan))].cardinality;
        if (options_.caching) {
            auto it = cache_.estimates.find(subplan);
            if (it != cache_.estimates.end()) {
                ++hits_;
                return it->second;
            }
        }
        const double v = contract(subplan).estimate.cardinality();
        if (options_.caching) cache_.estimates.emplace(subplan, v);
        return v;
    }

    /// Full contraction result (per-row values, folded resolution, shape).
    ContractionResult contract(VertexSet subplan) {
        if (!graph_->connected(subplan) || std::popcount(subplan) < 2)
            throw InvalidInput("sub-plan must be a connected set of at least two tables");
        ++computed_;
        const auto edges = graph_->induced_edges(subplan);
        std::vector<MergedTensorView> views;
        std::vector<std::vector<std::string>> table_edges;
        std::vector<std::string> names;
        for (auto v : members(subplan)) {
            std::vector<std::size_t> mine;
            for (auto e : edges)
                if (graph_->edges()[e].a == v || graph_->edges()[e].b == v) mine.push_back(e);
            views.push_back(view_for(v, mine));
            table_edges.emplace_back();
            for (const auto& c : views.back().constituents()) table_edges.back().push_back(c.sketch.edge_id());
            names.push_back(graph_->vertices()[v].alias);
        }
        const auto order = choose_contraction_order(table_edges, names);
        std::vector<MergedTensorView> ordered;
        ordered.reserve(order.size());
        for (auto i : order) ordered.push_back(std::move(views[i]));
        return merged_estimate(ordered, options_.contraction);
    }

    std::size_t calls() const { return calls_; }
    std::size_t cache_hits() const { return hits_; }
    std::size_t computed() const { return computed_; }
    const EstimateCache& cache() const { return cache_; }

private:
    MergedTensorView build_view(std::size_t v, const std::vector<std::size_t>& edges) const {
        std::vector<MergedTensorView::Constituent> parts;
        const auto& alias = graph_->vertices()[v].alias;
        for (auto e : edges) {
            const auto& edge = graph_->edges()[e];
            const auto& sk = edge.a == v ? sketches_[e].first : sketches_[e].second;
            parts.push_back({alias + "." + edge.column_of(v), sk});
        }
        return MergedTensorView(alias, std::move(parts));
    }

    MergedTensorView view_for(std::size_t v, const std::vector<std::size_t>& edges) {
        if (!options_.caching || edges.size() > 3) return build_view(v, edges);
        auto key = std::make_pair(v, edges);
        auto it = cache_.views.find(key);
        if (it == cache_.views.end()) it = cache_.views.emplace(key, build_view(v, edges)).first;
        return it->second;
    }

    const JoinGraph* graph_;
    std::vector<std::pair<FastAgmsSketch, FastAgmsSketch>> sketches_;
    SketchEstimatorOptions options_;
    EstimateCache cache_;
    std::size_t calls_ = 0, hits_ = 0, computed_ = 0;
};

/// Estimate of a left-deep prefix given as a vertex sequence.
inline double estimate_subplan(const std::vector<std::size_t>& prefix, CardinalityEstimator& est) {
    VertexSet s = 0;
    for (auto v : prefix) s |= vertex_bit(v);
    return est.estimate(s);
}

} // namespace compass
