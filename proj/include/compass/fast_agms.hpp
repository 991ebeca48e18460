#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compass/error.hpp"
#include "compass/rng.hpp"
#include "compass/sketch_config.hpp"

namespace compass {

/// Fast-AGMS sketch of one join attribute for one join edge.
///
/// Each of the `rows` rows is an independent basic sketch of `buckets` signed
/// counters. Inserting key k adds xi_row(k) to counter h_row(k) of every row,
/// so exactly one counter per row moves by +-1 per insertion. Two sketches of
/// the same edge (same seeds) estimate the join size by a per-row dot product.
class FastAgmsSketch {
public:
    FastAgmsSketch(SketchConfig config, std::string edge_id, std::uint64_t master_seed)
        : config_(config), edge_id_(std::move(edge_id)) {
        config_.validate();
        seeds_.reserve(config_.rows);
        for (std::size_t r = 0; r < config_.rows; ++r)
            seeds_.push_back(derive_seeds(master_seed, edge_id_, r));
        counters_.assign(config_.counters(), 0);
    }

    FastAgmsSketch(SketchConfig config, std::string edge_id, std::vector<RowSeeds> seeds)
        : config_(config), edge_id_(std::move(edge_id)), seeds_(std::move(seeds)) {
        config_.validate();
        if (seeds_.size() != config_.rows)
            throw InvalidInput("expected one seed pair per sketch row");
        counters_.assign(config_.counters(), 0);
    }

    /// Rebuilds a sketch from its serialized parts.
    static FastAgmsSketch from_parts(SketchConfig config, std::string edge_id,
                                     std::vector<RowSeeds> seeds,
                                     std::vector<std::int64_t> counters,
                                     std::uint64_t tuple_count) {
        FastAgmsSketch sk(config, std::move(edge_id), std::move(seeds));
        if (counters.size() != config.counters())
            throw InvalidInput("counter payload does not match sketch shape");
        sk.counters_ = std::move(counters);
        sk.tuple_count_ = tuple_count;
        return sk;
    }

    void update(std::uint64_t key) {
        const std::size_t b = config_.buckets;
        for (std::size_t r = 0; r < config_.rows; ++r) {
            const auto& s = seeds_[r];
            counters_[r * b + bucket(s.hash, key, b)] += xi(s.xi, key);
        }
        ++tuple_count_;
    }

    bool compatible_with(const FastAgmsSketch& other) const {
        return config_ == other.config_ && edge_id_ == other.edge_id_ && seeds_ == other.seeds_;
    }

    /// Linearity: the sketch of a union of tuple multisets is the sum of sketches.
    FastAgmsSketch& operator+=(const FastAgmsSketch& other) {
        if (!compatible_with(other))
            throw InvalidInput("cannot add sketches with different config, seeds or edge");
        for (std::size_t i = 0; i < counters_.size(); ++i) counters_[i] += other.counters_[i];
        tuple_count_ += other.tuple_count_;
        return *this;
    }

    friend FastAgmsSketch operator+(FastAgmsSketch lhs, const FastAgmsSketch& rhs) {
        lhs += rhs;
        return lhs;
    }

    /// Halves the bucket count: counter[j] + counter[j + b/2]. Because bucket
    /// indices are reduced mod a power of two, this equals building the sketch
    /// directly with b/2 buckets.
    FastAgmsSketch fold() const {
        const std::size_t b = config_.buckets;
        if (b % 2 != 0) throw InvalidInput("cannot fold a sketch with an odd bucket count");
        if (b / 2 < 2) throw InvalidInput("folding below 2 buckets is not supported");
        SketchConfig half{config_.rows, b / 2};
        FastAgmsSketch out(half, edge_id_, seeds_);
        for (std::size_t r = 0; r < config_.rows; ++r)
            for (std::size_t j = 0; j < half.buckets; ++j)
                out.counters_[r * half.buckets + j] =
                    counters_[r * b + j] + counters_[r * b + j + half.buckets];
        out.tuple_count_ = tuple_count_;
        return out;
    }

    /// Repeated fold() down to `buckets` (a power of two not above the current count).
    FastAgmsSketch folded_to(std::size_t buckets) const {
        if (buckets > config_.buckets || config_.buckets % buckets != 0)
            throw InvalidInput("fold target must divide the current bucket count");
        FastAgmsSketch out = *this;
        while (out.config_.buckets > buckets) out = out.fold();
        return out;
    }

    const SketchConfig& config() const { return config_; }
    std::size_t rows() const { return config_.rows; }
    std::size_t buckets() const { return config_.buckets; }
    const std::string& edge_id() const { return edge_id_; }
    const std::vector<RowSeeds>& seeds() const { return seeds_; }
    std::uint64_t tuple_count() const { return tuple_count_; }
    std::span<const std::int64_t> counters() const { return counters_; }

    std::span<const std::int64_t> row(std::size_t r) const {
        return std::span<const std::int64_t>(counters_).subspan(r * config_.buckets,
                                                                config_.buckets);
    }

    std::int64_t at(std::size_t r, std::size_t j) const { return counters_[r * config_.buckets + j]; }

    friend bool operator==(const FastAgmsSketch&, const FastAgmsSketch&) = default;

private:
    SketchConfig config_;
    std::string edge_id_;
    std::vector<RowSeeds> seeds_;
    std::vector<std::int64_t> counters_;
    std::uint64_t tuple_count_ = 0;
};

/// Two-way join size: per row, sum_j a[j] * b[j] (128-bit accumulation),
/// median over rows.
inline Estimate two_way_estimate(const FastAgmsSketch& a, const FastAgmsSketch& b) {
    if (!a.compatible_with(b))
        throw InvalidInput("two-way estimate needs sketches of the same edge and seeds");
    std::vector<double> rows(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto ra = a.row(r);
        auto rb = b.row(r);
        __int128 acc = 0;
        for (std::size_t j = 0; j < ra.size(); ++j)
            acc += static_cast<__int128>(ra[j]) * rb[j];
        rows[r] = static_cast<double>(acc);
    }
    return make_estimate(std::move(rows));
}

} // namespace compass
