#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "compass/error.hpp"
#include "compass/fast_agms.hpp"
#include "compass/sketch_config.hpp"

namespace compass {

/// |v| as an unsigned value; well defined for INT64_MIN.
inline std::uint64_t magnitude(std::int64_t v) {
    return v < 0 ? std::uint64_t{0} - static_cast<std::uint64_t>(v) : static_cast<std::uint64_t>(v);
}

/// Min-absolute-magnitude merge of bucket values, folded left to right:
/// the running value is kept when |left| <= |right|, so ties keep the earlier one.
inline std::int64_t merge_entry(std::span<const std::int64_t> values) {
    if (values.empty()) throw InvalidInput("merge_entry of an empty value list");
    std::int64_t acc = values.front();
    for (std::size_t i = 1; i < values.size(); ++i)
        if (magnitude(acc) > magnitude(values[i])) acc = values[i];
    return acc;
}

/// Implicit k-dimensional merged sketch of one table. Dimension d is the 1-D
/// sketch of the table's d-th join attribute; entry(i_1..i_k) is merge_entry
/// of the constituent buckets. Entries are evaluated on demand, never stored.
class MergedTensorView {
public:
    struct Constituent {
        std::string attribute;  ///< qualified attribute, e.g. "mk.movie_id"
        FastAgmsSketch sketch;
    };

    MergedTensorView(std::string table, std::vector<Constituent> parts)
        : table_(std::move(table)), parts_(std::move(parts)) {
        if (parts_.empty()) throw InvalidInput("merged view of " + table_ + " has no sketches");
        std::sort(parts_.begin(), parts_.end(), [](const Constituent& a, const Constituent& b) {
            return std::tie(a.attribute, a.sketch.edge_id()) < std::tie(b.attribute, b.sketch.edge_id());
        });
        const auto& cfg = parts_.front().sketch.config();
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (!(parts_[i].sketch.config() == cfg))
                throw InvalidInput("merged view of " + table_ + " mixes sketch shapes");
            if (i > 0 && parts_[i].sketch.edge_id() == parts_[i - 1].sketch.edge_id())
                throw InvalidInput("merged view of " + table_ + " repeats edge " +
                                   parts_[i].sketch.edge_id());
        }
    }

    /// Convenience for the one-dimensional case.
    MergedTensorView(std::string table, std::string attribute, FastAgmsSketch sketch)
        : MergedTensorView(std::move(table), {Constituent{std::move(attribute), std::move(sketch)}}) {}

    const std::string& table() const { return table_; }
    std::size_t dimension() const { return parts_.size(); }
    std::size_t rows() const { return parts_.front().sketch.rows(); }
    std::size_t buckets() const { return parts_.front().sketch.buckets(); }
    const std::vector<Constituent>& constituents() const { return parts_; }

    std::int64_t entry(std::size_t row, std::span<const std::size_t> idx) const {
        std::int64_t acc = parts_[0].sketch.at(row, idx[0]);
        for (std::size_t d = 1; d < parts_.size(); ++d) {
            const std::int64_t v = parts_[d].sketch.at(row, idx[d]);
            if (magnitude(acc) > magnitude(v)) acc = v;
        }
        return acc;
    }

    MergedTensorView folded_to(std::size_t buckets) const {
        MergedTensorView out = *this;
        for (auto& p : out.parts_) p.sketch = p.sketch.folded_to(buckets);
        return out;
    }

private:
    std::string table_;
    std::vector<Constituent> parts_;
};

struct ContractionOptions {
    /// Maximum number of simultaneously open edges during contraction.
    std::size_t frontier_cap = 3;
    /// Bound on b^w where w is the widest step (open edges plus newly opened
    /// ones). Constituents are folded until the bound holds.
    std::size_t max_cells = std::size_t{1} << 24;
};

struct ContractionShape {
    std::size_t max_frontier = 0;
    std::size_t max_width = 0;

    friend auto operator<=>(const ContractionShape&, const ContractionShape&) = default;
};

struct ContractionResult {
    Estimate estimate;
    std::size_t buckets = 0;  ///< resolution actually used after folding
    ContractionShape shape;
};

namespace detail {

struct ContractionStep {
    std::vector<std::size_t> keep;         // positions in the old frontier
    std::vector<std::size_t> close_front;  // positions in the old frontier ...
    std::vector<std::size_t> close_table;  // ... and of the same edges in the table view
    std::vector<std::size_t> fresh;        // table positions of newly opened edges
    std::size_t old_frontier = 0;
};

struct Schedule {
    std::vector<ContractionStep> steps;
    ContractionShape shape;
};

/// Table i lists its edges in canonical (constituent) order.
inline Schedule make_schedule(const std::vector<std::vector<std::string>>& table_edges) {
    Schedule s;
    std::vector<std::string> frontier;
    for (const auto& edges : table_edges) {
        ContractionStep st;
        st.old_frontier = frontier.size();
        std::vector<bool> closed(frontier.size(), false);
        for (std::size_t t = 0; t < edges.size(); ++t) {
            auto it = std::find(frontier.begin(), frontier.end(), edges[t]);
            if (it != frontier.end()) {
                const auto p = static_cast<std::size_t>(it - frontier.begin());
                st.close_front.push_back(p);
                st.close_table.push_back(t);
                closed[p] = true;
            } else {
                st.fresh.push_back(t);
            }
        }
        std::vector<std::string> next;
        for (std::size_t p = 0; p < frontier.size(); ++p)
            if (!closed[p]) {
                st.keep.push_back(p);
                next.push_back(frontier[p]);
            }
        for (auto t : st.fresh) next.push_back(edges[t]);
        s.shape.max_width = std::max(s.shape.max_width, frontier.size() + st.fresh.size());
        s.shape.max_frontier = std::max(s.shape.max_frontier, next.size());
        frontier = std::move(next);
        s.steps.push_back(std::move(st));
    }
    return s;
}

inline bool power_fits(std::size_t base, std::size_t exp, std::size_t limit) {
    std::size_t v = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (v > limit / base) return false;
        v *= base;
    }
    return v <= limit;
}

inline std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t v = 1;
    for (std::size_t i = 0; i < exp; ++i) v *= base;
    return v;
}

// Row-major offsets of every index tuple over `dims` selected positions, using
// the strides of the tensor those positions live in.
inline std::vector<std::size_t> offsets(std::span<const std::size_t> positions,
                                        std::span<const std::size_t> strides, std::size_t b) {
    std::vector<std::size_t> out(ipow(b, positions.size()));
    std::vector<std::size_t> idx(positions.size(), 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = off;
        for (std::size_t d = positions.size(); d-- > 0;) {
            off += strides[positions[d]];
            if (++idx[d] < b) break;
            off -= strides[positions[d]] * b;
            idx[d] = 0;
        }
    }
    return out;
}

struct MergedValues {
    std::vector<std::int64_t> value;
    std::vector<std::size_t> position;  // constituent position of the winning bucket
};

// Merged value of `view` restricted to the constituents `table_pos` (ascending),
// for every index tuple over them in row-major order.
inline MergedValues partial_merge(const MergedTensorView& view, std::size_t row,
                                  std::span<const std::size_t> table_pos, std::size_t b) {
    MergedValues mv;
    const std::size_t n = ipow(b, table_pos.size());
    mv.value.resize(n);
    mv.position.resize(n);
    if (table_pos.size() == 1) {
        const auto r0 = view.constituents()[table_pos[0]].sketch.row(row);
        std::copy(r0.begin(), r0.begin() + static_cast<std::ptrdiff_t>(b), mv.value.begin());
        std::fill(mv.position.begin(), mv.position.end(), table_pos[0]);
        return mv;
    }
    if (table_pos.size() == 2) {
        const auto r0 = view.constituents()[table_pos[0]].sketch.row(row);
        const auto r1 = view.constituents()[table_pos[1]].sketch.row(row);
        for (std::size_t i = 0; i < b; ++i) {
            const std::int64_t x = r0[i];
            const std::uint64_t ax = magnitude(x);
            for (std::size_t j = 0; j < b; ++j) {
                const std::int64_t y = r1[j];
                const bool second = magnitude(y) < ax;
                mv.value[i * b + j] = second ? y : x;
                mv.position[i * b + j] = second ? table_pos[1] : table_pos[0];
            }
        }
        return mv;
    }
    std::vector<std::size_t> idx(table_pos.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::int64_t best = 0;
        std::size_t pos = SIZE_MAX;
        for (std::size_t d = 0; d < table_pos.size(); ++d) {
            const std::int64_t v = view.constituents()[table_pos[d]].sketch.at(row, idx[d]);
            if (pos == SIZE_MAX || magnitude(v) < magnitude(best)) {
                best = v;
                pos = table_pos[d];
            }
        }
        mv.value[i] = best;
        mv.position[i] = pos;
        for (std::size_t d = table_pos.size(); d-- > 0;) {
            if (++idx[d] < b) break;
            idx[d] = 0;
        }
    }
    return mv;
}

// One row of the frontier contraction. For a step with closing edges C and
// fresh edges N, the table entry is the min-|.| winner between the merge over
// C and the merge over N (ties by constituent position). Sorting the C-tuples
// by (|a|, position) turns the sum over C into a prefix-sum lookup per N-tuple.
template <typename Acc>
Acc contract_row(std::span<const MergedTensorView> order, const Schedule& sched,
                 std::size_t row, std::size_t b) {
    std::vector<Acc> frontier{Acc(1)};
    for (std::size_t t = 0; t < order.size(); ++t) {
        const auto& view = order[t];
        const auto& st = sched.steps[t];

        std::vector<std::size_t> strides(st.old_frontier, 1);
        for (std::size_t p = st.old_frontier; p-- > 1;) strides[p - 1] = strides[p] * b;
        const auto keep_off = offsets(st.keep, strides, b);
        const MergedValues fresh = partial_merge(view, row, st.fresh, b);
        const std::size_t n_fresh = fresh.value.size();
        std::vector<Acc> next(keep_off.size() * n_fresh);

        if (st.close_front.empty()) {
            for (std::size_t k = 0; k < keep_off.size(); ++k)
                for (std::size_t n = 0; n < n_fresh; ++n)
                    next[k * n_fresh + n] = frontier[keep_off[k]] * static_cast<Acc>(fresh.value[n]);
            frontier = std::move(next);
            continue;
        }

        const auto close_off = offsets(st.close_front, strides, b);
        const MergedValues closing = partial_merge(view, row, st.close_table, b);
        const std::size_t n_close = close_off.size();

        // Key layout: |value| in the high 64 bits, then position and index.
        using Key = unsigned __int128;
        auto pack = [](std::int64_t v, std::size_t pos, std::size_t idx) {
            return (static_cast<Key>(magnitude(v)) << 64) | (static_cast<Key>(pos) << 32) | static_cast<Key>(idx);
        };
        std::vector<Key> sorted(n_close);
        for (std::size_t c = 0; c < n_close; ++c) sorted[c] = pack(closing.value[c], closing.position[c], c);
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> sorted_off(n_close);
        std::vector<Acc> sorted_val(n_close);
        for (std::size_t i = 0; i < n_close; ++i) {
            const auto c = static_cast<std::size_t>(sorted[i] & 0xffffffffu);
            sorted_off[i] = close_off[c];
            sorted_val[i] = static_cast<Acc>(closing.value[c]);
        }

        // cut[n]: number of closing tuples whose merged value beats fresh tuple n.
        std::vector<std::size_t> cut(n_fresh, n_close);
        if (!st.fresh.empty())
            for (std::size_t n = 0; n < n_fresh; ++n)
                cut[n] = static_cast<std::size_t>(
                    std::lower_bound(sorted.begin(), sorted.end(), pack(fresh.value[n], fresh.position[n], 0)) -
                    sorted.begin());

        std::vector<Acc> weighted(n_close + 1), plain(n_close + 1);
        for (std::size_t k = 0; k < keep_off.size(); ++k) {
            weighted[0] = Acc(0);
            plain[0] = Acc(0);
            const Acc* base = frontier.data() + keep_off[k];
            for (std::size_t i = 0; i < n_close; ++i) {
                const Acc f = base[sorted_off[i]];
                weighted[i + 1] = weighted[i] + f * sorted_val[i];
                plain[i + 1] = plain[i] + f;
            }
            for (std::size_t n = 0; n < n_fresh; ++n) {
                const std::size_t m = cut[n];
                Acc v = weighted[m];
                if (m < n_close) v += static_cast<Acc>(fresh.value[n]) * (plain[n_close] - plain[m]);
                next[k * n_fresh + n] = v;
            }
        }
        frontier = std::move(next);
    }
    return frontier.front();
}

} // namespace detail

/// Frontier shape of contracting tables in the given order; each entry lists
/// one table's edge ids.
inline ContractionShape contraction_shape(const std::vector<std::vector<std::string>>& table_edges) {
    return detail::make_schedule(table_edges).shape;
}

/// Deterministic contraction order for a connected set of tables: greedily
/// append the adjacent table with the smallest step width (then frontier,
/// then name), trying every start and keeping the narrowest result.
/// Returns a permutation of table indices.
inline std::vector<std::size_t> choose_contraction_order(
    const std::vector<std::vector<std::string>>& table_edges, const std::vector<std::string>& names) {
    const std::size_t n = table_edges.size();
    std::vector<std::size_t> by_name(n);
    std::iota(by_name.begin(), by_name.end(), std::size_t{0});
    std::sort(by_name.begin(), by_name.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(names[a], a) < std::tie(names[b], b);
    });

    std::vector<std::size_t> best;
    ContractionShape best_shape{SIZE_MAX, SIZE_MAX};
    for (std::size_t start : by_name) {
        std::vector<std::size_t> seq{start};
        std::vector<bool> used(n, false);
        used[start] = true;
        std::vector<std::string> frontier = table_edges[start];
        ContractionShape shape{frontier.size(), frontier.size()};
        while (seq.size() < n) {
            std::size_t pick = SIZE_MAX;
            std::tuple<bool, std::size_t, std::size_t> pick_key{};
            std::vector<std::string> pick_frontier;
            for (std::size_t cand : by_name) {
                if (used[cand]) continue;
                std::size_t fresh = 0;
                bool touches = false;
                std::vector<std::string> next;
                for (const auto& e : frontier)
                    if (std::find(table_edges[cand].begin(), table_edges[cand].end(), e) ==
                        table_edges[cand].end())
                        next.push_back(e);
                for (const auto& e : table_edges[cand]) {
                    if (std::find(frontier.begin(), frontier.end(), e) != frontier.end()) {
                        touches = true;
                    } else {
                        ++fresh;
                        next.push_back(e);
                    }
                }
                const std::tuple<bool, std::size_t, std::size_t> k{!touches, frontier.size() + fresh,
                                                                   next.size()};
                if (pick == SIZE_MAX || k < pick_key) {
                    pick = cand;
                    pick_key = k;
                    pick_frontier = std::move(next);
                }
            }
            used[pick] = true;
            seq.push_back(pick);
            shape.max_width = std::max(shape.max_width, std::get<1>(pick_key));
            shape.max_frontier = std::max(shape.max_frontier, std::get<2>(pick_key));
            frontier = std::move(pick_frontier);
        }
        const ContractionShape ranked{shape.max_width, shape.max_frontier};
        if (best.empty() || ranked < best_shape) {
            best_shape = ranked;
            best = std::move(seq);
        }
    }
    return best;
}

/// Multi-way join estimate from merged sketches.
///
/// Tables are contracted in the order given. Every edge id must occur in
/// exactly two views, with identical seeds on both sides. Per row, the
/// estimate is the sum over all bucket assignments (one index per edge) of
/// the product of every table's merged entry; the result is the row median.
/// Two-table plans accumulate in 128-bit integers, larger ones in double.
/// When the widest contraction step would exceed `max_cells`, every
/// constituent is folded to the largest bucket count that fits.
inline ContractionResult merged_estimate(std::span<const MergedTensorView> order,
                                         const ContractionOptions& options = {}) {
    if (order.size() < 2) throw InvalidInput("merged estimate needs at least two tables");
    const std::size_t rows = order.front().rows();
    const std::size_t b = order.front().buckets();

    std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> owners;
    std::vector<std::vector<std::string>> table_edges;
    for (std::size_t t = 0; t < order.size(); ++t) {
        const auto& v = order[t];
        if (v.rows() != rows || v.buckets() != b)
            throw InvalidInput("merged views " + order.front().table() + " and " + v.table() +
                               " differ in sketch shape");
        table_edges.emplace_back();
        for (std::size_t d = 0; d < v.dimension(); ++d) {
            const auto& id = v.constituents()[d].sketch.edge_id();
            owners[id].emplace_back(t, d);
            table_edges.back().push_back(id);
        }
    }
    for (const auto& [id, own] : owners) {
        if (own.size() != 2 || own[0].first == own[1].first)
            throw InvalidInput("edge " + id + " must connect exactly two tables of the sub-plan");
        const auto& a = order[own[0].first].constituents()[own[0].second].sketch;
        const auto& c = order[own[1].first].constituents()[own[1].second].sketch;
        if (!a.compatible_with(c)) throw InvalidInput("edge " + id + " has inconsistent seeds");
    }

    const auto sched = detail::make_schedule(table_edges);
    if (sched.shape.max_frontier > options.frontier_cap)
        throw EstimationFailure("contraction frontier of " + std::to_string(sched.shape.max_frontier) +
                                " edges exceeds cap " + std::to_string(options.frontier_cap));
    std::size_t eff = b;
    while (eff > 2 && !detail::power_fits(eff, sched.shape.max_width, options.max_cells)) eff /= 2;
    if (!detail::power_fits(eff, sched.shape.max_width, options.max_cells))
        throw EstimationFailure("contraction step of width " + std::to_string(sched.shape.max_width) +
                                " does not fit the cell budget even at 2 buckets");

    std::vector<MergedTensorView> folded;
    std::span<const MergedTensorView> views = order;
    if (eff < b) {
        folded.reserve(order.size());
        for (const auto& v : order) folded.push_back(v.folded_to(eff));
        views = folded;
    }

    std::vector<double> per_row(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        if (views.size() == 2)
            per_row[r] = static_cast<double>(detail::contract_row<__int128>(views, sched, r, eff));
        else
            per_row[r] = detail::contract_row<double>(views, sched, r, eff);
    }
    ContractionResult res;
    res.estimate = make_estimate(std::move(per_row));
    res.buckets = eff;
    res.shape = sched.shape;
    return res;
}

} // namespace compass
