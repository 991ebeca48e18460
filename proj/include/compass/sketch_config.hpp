#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <string>
#include <vector>

#include "compass/error.hpp"

namespace compass {

/// Shape of a Fast-AGMS (or AGMS) counter matrix.
///
/// `rows` independent basic estimators are combined by a median, so it must be
/// odd. `buckets` must be a power of two so sketches can be folded to coarser
/// resolutions. Accuracy grows with `buckets` (variance ~ 1/b per row) and
/// confidence with `rows`; the defaults give ~11K counters per sketch.
struct SketchConfig {
    std::size_t rows = 11;
    std::size_t buckets = 1024;

    void validate() const {
        if (rows == 0 || rows % 2 == 0)
            throw InvalidInput("sketch rows must be odd and positive, got " + std::to_string(rows));
        if (buckets < 2 || !std::has_single_bit(buckets))
            throw InvalidInput("sketch buckets must be a power of two >= 2, got " +
                               std::to_string(buckets));
    }

    std::size_t counters() const { return rows * buckets; }

    friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

/// Per-row basic estimates plus their median.
struct Estimate {
    std::vector<double> rows;
    double value = 0.0;

    /// Negative medians are meaningless as cardinalities; clamp at zero.
    double cardinality() const { return std::max(value, 0.0); }
};

inline double median_of(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median of an empty row set");
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(values.begin(), mid);
    return 0.5 * (lo + hi);
}

inline Estimate make_estimate(std::vector<double> rows) {
    Estimate e;
    e.value = median_of(rows);
    e.rows = std::move(rows);
    return e;
}

} // namespace compass
