#pragma once

// Min-max scaling fitted on training rows. Values outside the fitted range
// are clamped to [-0.5, 1.5]; constant columns map to 0.

#include <algorithm>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "drive_profiler/types.hpp"

namespace drive_profiler::pipeline {

struct NormalizationParams {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t dimension() const { return min.size(); }
};

inline constexpr double kNormalizedFloor = -0.5;
inline constexpr double kNormalizedCeil = 1.5;

/// Per-column min/max over the rows. Row is any contiguous range of doubles.
template <class Row>
NormalizationParams fit_normalizer(std::span<const Row> rows) {
    if (rows.empty()) {
        throw InputError("cannot fit a normalizer on an empty feature list");
    }
    const std::size_t dim = std::size(rows.front());
    NormalizationParams p;
    p.min.assign(dim, std::numeric_limits<double>::infinity());
    p.max.assign(dim, -std::numeric_limits<double>::infinity());
    for (const auto& row : rows) {
        if (std::size(row) != dim) throw InputError("feature rows differ in length");
        for (std::size_t j = 0; j < dim; ++j) {
            p.min[j] = std::min(p.min[j], row[j]);
            p.max[j] = std::max(p.max[j], row[j]);
        }
    }
    return p;
}

inline double normalize_value(const NormalizationParams& p, std::size_t j, double x) {
    const double range = p.max[j] - p.min[j];
    if (!(range > 0.0)) return 0.0;
    return std::clamp((x - p.min[j]) / range, kNormalizedFloor, kNormalizedCeil);
}

template <class Row>
Row apply_normalizer(const NormalizationParams& p, Row row) {
    if (std::size(row) != p.dimension()) {
        throw InputError("feature dimension " + std::to_string(std::size(row)) +
                         " does not match normalizer dimension " + std::to_string(p.dimension()));
    }
    for (std::size_t j = 0; j < p.dimension(); ++j) row[j] = normalize_value(p, j, row[j]);
    return row;
}

template <class Row>
std::vector<Row> apply_normalizer(const NormalizationParams& p, std::span<const Row> rows) {
    if (rows.empty()) {
        throw InputError("cannot normalize an empty feature list");
    }
    std::vector<Row> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(apply_normalizer(p, r));
    return out;
}

}  // namespace drive_profiler::pipeline
