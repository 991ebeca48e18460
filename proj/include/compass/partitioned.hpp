#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compass/error.hpp"
#include "compass/fast_agms.hpp"
#include "compass/rng.hpp"
#include "compass/sketch_config.hpp"

namespace compass {

/// Fast-AGMS sketch of a table with k join attributes, laid out as one
/// k-dimensional tensor per row. Dimension d is addressed by the bucket hash
/// of edge d and each insertion adds the product of the k xi signs to exactly
/// one cell. Seeds are the same as those of the 1-D sketches of each edge.
class PartitionedSketch {
public:
    PartitionedSketch(std::size_t rows, std::vector<std::string> edge_ids,
                      std::vector<std::size_t> dims, std::uint64_t master_seed)
        : rows_(rows), edge_ids_(std::move(edge_ids)), dims_(std::move(dims)) {
        if (rows_ == 0 || rows_ % 2 == 0) throw InvalidInput("partitioned sketch rows must be odd");
        if (edge_ids_.empty() || edge_ids_.size() != dims_.size())
            throw InvalidInput("need one bucket count per partitioned dimension");
        cells_ = 1;
        for (auto d : dims_) {
            if (d == 0) throw InvalidInput("partitioned dimension of size zero");
            cells_ *= d;
        }
        seeds_.reserve(rows_ * dims_.size());
        for (std::size_t r = 0; r < rows_; ++r)
            for (const auto& e : edge_ids_) seeds_.push_back(derive_seeds(master_seed, e, r));
        counters_.assign(rows_ * cells_, 0);
    }

    void update(std::span<const std::uint64_t> keys) {
        const std::size_t k = dims_.size();
        if (keys.size() != k)
            throw InvalidInput("partitioned update expects " + std::to_string(k) + " keys");
        for (std::size_t r = 0; r < rows_; ++r) {
            std::size_t offset = 0;
            int sign = 1;
            for (std::size_t d = 0; d < k; ++d) {
                const auto& s = seeds_[r * k + d];
                offset = offset * dims_[d] + bucket(s.hash, keys[d], dims_[d]);
                sign *= xi(s.xi, keys[d]);
            }
            counters_[r * cells_ + offset] += sign;
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t dimensions() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    const std::vector<std::string>& edge_ids() const { return edge_ids_; }
    std::size_t cells_per_row() const { return cells_; }
    const RowSeeds& seeds(std::size_t r, std::size_t d) const { return seeds_[r * dims_.size() + d]; }

    std::span<const std::int64_t> row(std::size_t r) const {
        return std::span<const std::int64_t>(counters_).subspan(r * cells_, cells_);
    }

    /// Cell at row-major index tuple `idx`.
    std::int64_t cell(std::size_t r, std::span<const std::size_t> idx) const {
        std::size_t offset = 0;
        for (std::size_t d = 0; d < dims_.size(); ++d) offset = offset * dims_[d] + idx[d];
        return counters_[r * cells_ + offset];
    }

private:
    std::size_t rows_;
    std::vector<std::string> edge_ids_;
    std::vector<std::size_t> dims_;
    std::size_t cells_ = 1;
    std::vector<RowSeeds> seeds_;
    std::vector<std::int64_t> counters_;
};

/// Multi-way join estimate around a partitioned center table: per row,
/// sum over all index tuples of center[i_1..i_k] * prod_d boundary_d[i_d],
/// median over rows. `wiring[i]` is the center dimension of `boundary[i]`;
/// it must be a permutation of the dimensions.
inline Estimate part_estimate(std::span<const FastAgmsSketch> boundary,
                              const PartitionedSketch& center,
                              std::span<const std::size_t> wiring) {
    const std::size_t k = center.dimensions();
    if (boundary.size() != k || wiring.size() != k)
        throw InvalidInput("one boundary sketch per partitioned dimension is required");
    std::vector<const FastAgmsSketch*> by_dim(k, nullptr);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t d = wiring[i];
        if (d >= k || by_dim[d] != nullptr) throw InvalidInput("wiring is not a permutation");
        by_dim[d] = &boundary[i];
    }
    for (std::size_t d = 0; d < k; ++d) {
        const auto& b = *by_dim[d];
        if (b.edge_id() != center.edge_ids()[d] || b.rows() != center.rows() ||
            b.buckets() != center.dims()[d])
            throw InvalidInput("boundary sketch does not match center dimension " + std::to_string(d));
        for (std::size_t r = 0; r < center.rows(); ++r)
            if (!(b.seeds()[r] == center.seeds(r, d)))
                throw InvalidInput("boundary seeds differ from center dimension " + std::to_string(d));
    }

    std::vector<double> rows(center.rows());
    std::vector<std::size_t> idx(k, 0);
    for (std::size_t r = 0; r < center.rows(); ++r) {
        auto cells = center.row(r);
        double sum = 0.0;
        std::fill(idx.begin(), idx.end(), 0);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c] != 0) {
                double prod = static_cast<double>(cells[c]);
                for (std::size_t d = 0; d < k; ++d) prod *= static_cast<double>(by_dim[d]->at(r, idx[d]));
                sum += prod;
            }
            for (std::size_t d = k; d-- > 0;) {
                if (++idx[d] < center.dims()[d]) break;
                idx[d] = 0;
            }
        }
        rows[r] = sum;
    }
    return make_estimate(std::move(rows));
}

} // namespace compass
