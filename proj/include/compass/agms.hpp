#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "compass/error.hpp"
#include "compass/rng.hpp"
#include "compass/sketch_config.hpp"

namespace compass {

/// Classic AGMS sketch of one table: an r x b matrix of independent basic
/// sketches. Every counter sees every tuple, multiplied by one xi value per
/// attached join edge (a composed sketch when a table joins on several edges).
class AgmsSketch {
public:
    AgmsSketch(SketchConfig config, std::vector<std::string> edge_ids, std::uint64_t master_seed)
        : config_(config), edge_ids_(std::move(edge_ids)) {
        config_.validate();
        if (edge_ids_.empty()) throw InvalidInput("AGMS sketch needs at least one edge");
        const std::size_t n = config_.counters();
        seeds_.reserve(n * edge_ids_.size());
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& e : edge_ids_) seeds_.push_back(derive_seeds(master_seed, e, i).xi);
        counters_.assign(n, 0);
    }

    /// Adds `weight` copies of the tuple whose join keys are `keys` (one per edge).
    void update(std::span<const std::uint64_t> keys, std::int64_t weight = 1) {
        const std::size_t k = edge_ids_.size();
        if (keys.size() != k)
            throw InvalidInput("AGMS update expects " + std::to_string(k) + " keys, got " +
                               std::to_string(keys.size()));
        for (std::size_t i = 0; i < counters_.size(); ++i) {
            int sign = 1;
            for (std::size_t e = 0; e < k; ++e) sign *= xi(seeds_[i * k + e], keys[e]);
            counters_[i] += sign * weight;
        }
    }

    const SketchConfig& config() const { return config_; }
    const std::vector<std::string>& edge_ids() const { return edge_ids_; }
    std::span<const std::int64_t> counters() const { return counters_; }
    std::int64_t at(std::size_t r, std::size_t c) const { return counters_[r * config_.buckets + c]; }

    const XiSeed& seed(std::size_t r, std::size_t c, std::size_t edge) const {
        return seeds_[(r * config_.buckets + c) * edge_ids_.size() + edge];
    }

private:
    SketchConfig config_;
    std::vector<std::string> edge_ids_;
    std::vector<XiSeed> seeds_;
    std::vector<std::int64_t> counters_;
};

/// Join size over the graph whose tables are `sketches`: multiply counters
/// across tables per (row, column), average columns, median rows. Every edge
/// must be attached to exactly two sketches with identical xi families.
inline Estimate agms_estimate(std::span<const AgmsSketch> sketches) {
    if (sketches.size() < 2) throw InvalidInput("AGMS estimate needs at least two sketches");
    const SketchConfig cfg = sketches.front().config();
    std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> owners;
    for (std::size_t t = 0; t < sketches.size(); ++t) {
        if (!(sketches[t].config() == cfg)) throw InvalidInput("AGMS sketches differ in shape");
        const auto& ids = sketches[t].edge_ids();
        for (std::size_t e = 0; e < ids.size(); ++e) owners[ids[e]].emplace_back(t, e);
    }
    for (const auto& [id, own] : owners) {
        if (own.size() != 2) throw InvalidInput("edge " + id + " must join exactly two sketches");
        const auto& [t0, e0] = own[0];
        const auto& [t1, e1] = own[1];
        for (std::size_t r = 0; r < cfg.rows; ++r)
            for (std::size_t c = 0; c < cfg.buckets; ++c)
                if (!(sketches[t0].seed(r, c, e0) == sketches[t1].seed(r, c, e1)))
                    throw InvalidInput("edge " + id + " has inconsistent xi seeds");
    }

    std::vector<double> rows(cfg.rows);
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cfg.buckets; ++c) {
            double prod = 1.0;
            for (const auto& sk : sketches) prod *= static_cast<double>(sk.at(r, c));
            sum += prod;
        }
        rows[r] = sum / static_cast<double>(cfg.buckets);
    }
    return make_estimate(std::move(rows));
}

} // namespace compass
