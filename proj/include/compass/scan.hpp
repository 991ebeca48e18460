#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "compass/catalog.hpp"
#include "compass/error.hpp"
#include "compass/fast_agms.hpp"
#include "compass/predicate.hpp"
#include "compass/rng.hpp"

namespace compass {

/// A join edge incident to the scanned table and the local column it joins on.
struct JoinAttribute {
    std::string edge_id;
    std::string column;
};

struct ScanOptions {
    SketchConfig sketch{};
    std::uint64_t master_seed = 42;
    /// Filtered tables with at most this many rows are kept in memory.
    std::size_t materialize_threshold = 100'000;
    std::size_t workers = 1;
};

struct ScanResult {
    std::size_t exact_count = 0;
    std::map<std::string, FastAgmsSketch> sketches;  ///< keyed by edge id
    std::optional<Table> materialized;
};

/// Canonical sketch key of a non-null cell.
inline std::uint64_t join_key(const Column& col, std::size_t row) {
    return col.type == ColumnType::Int64 ? canonical_key(col.ints[row]) : canonical_key(col.texts[row]);
}

/// Copies the listed rows of `table` into a new table of the same schema.
inline Table select_rows(const Table& table, std::span<const std::size_t> rows) {
    std::vector<Column> cols;
    for (const auto& src : table.columns()) {
        Column c{src.type, {}, {}, {}};
        c.reserve(rows.size());
        for (auto r : rows) {
            if (src.is_null(r)) c.push_null();
            else if (src.type == ColumnType::Int64) c.push(src.ints[r]);
            else c.push(src.texts[r]);
        }
        cols.push_back(std::move(c));
    }
    return Table::from_columns(table.name(), table.schema(), std::move(cols));
}

/// Push-down selection with piggybacked sketch construction.
///
/// Evaluates `predicate` (if any) once per row. Every qualifying row is
/// counted and its join key is inserted into the sketch of each incident
/// edge; rows with a NULL join key are skipped for that edge only. Each edge
/// gets its own sketch even when two edges share a column. Row ranges may be
/// split across `workers`; partial sketches are summed, which gives the same
/// counters as a serial pass.
inline ScanResult scan(const Table& table, const Predicate* predicate,
                       std::span<const JoinAttribute> join_attrs, const ScanOptions& options) {
    options.sketch.validate();
    std::vector<std::size_t> cols;
    for (const auto& ja : join_attrs) {
        auto idx = table.schema().index_of(ja.column);
        if (!idx) throw InvalidInput("table " + table.name() + " has no join column '" + ja.column + "'");
        cols.push_back(*idx);
    }
    std::optional<BoundPredicate> bound;
    if (predicate) bound.emplace(*predicate, table);

    struct Partial {
        std::size_t count = 0;
        std::vector<FastAgmsSketch> sketches;
        std::vector<std::size_t> rows;
    };
    auto make_partial = [&] {
        Partial p;
        for (const auto& ja : join_attrs) p.sketches.emplace_back(options.sketch, ja.edge_id, options.master_seed);
        return p;
    };
    auto run = [&](Partial& p, std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            if (bound && !bound->matches(r)) continue;
            ++p.count;
            p.rows.push_back(r);
            for (std::size_t e = 0; e < cols.size(); ++e) {
                const Column& c = table.column(cols[e]);
                if (!c.is_null(r)) p.sketches[e].update(join_key(c, r));
            }
        }
    };

    const std::size_t n = table.row_count();
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, n / 4096 + 1));
    std::vector<Partial> parts;
    for (std::size_t w = 0; w < workers; ++w) parts.push_back(make_partial());
    if (workers == 1) {
        run(parts[0], 0, n);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] { run(parts[w], n * w / workers, n * (w + 1) / workers); });
        for (auto& t : pool) t.join();
        for (std::size_t w = 1; w < workers; ++w) {
            parts[0].count += parts[w].count;
            for (std::size_t e = 0; e < cols.size(); ++e) parts[0].sketches[e] += parts[w].sketches[e];
            parts[0].rows.insert(parts[0].rows.end(), parts[w].rows.begin(), parts[w].rows.end());
        }
    }

    ScanResult res;
    res.exact_count = parts[0].count;
    for (std::size_t e = 0; e < join_attrs.size(); ++e) {
        auto [it, inserted] = res.sketches.emplace(join_attrs[e].edge_id, std::move(parts[0].sketches[e]));
        if (!inserted) throw InvalidInput("edge " + join_attrs[e].edge_id + " listed twice for " + table.name());
    }
    if (res.exact_count <= options.materialize_threshold) res.materialized = select_rows(table, parts[0].rows);
    return res;
}

} // namespace compass
