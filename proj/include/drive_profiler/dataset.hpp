#pragma once

// Train/test partitioning of labeled windows. The partitions are distinct
// types so code that only accepts a TrainPartition cannot read test rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "drive_profiler/gbdt.hpp"
#include "drive_profiler/normalize.hpp"
#include "drive_profiler/pipeline.hpp"
#include "drive_profiler/types.hpp"

namespace drive_profiler::data {

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per class, shuffles that class's indices and puts round(fraction * n_k) of
/// them in train. Both index lists come back sorted.
inline SplitIndices stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InputError("train fraction must lie in (0, 1)");
    }
    std::mt19937_64 rng(seed);
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= kNumClasses) throw InputError("label code out of range");
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    SplitIndices out;
    for (auto& idx : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

/// Keeps every window of a trip on the same side of the split.
inline SplitIndices trip_split(std::span<const std::string> trip_ids, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InputError("train fraction must lie in (0, 1)");
    }
    std::vector<std::string> trips(trip_ids.begin(), trip_ids.end());
    std::sort(trips.begin(), trips.end());
    trips.erase(std::unique(trips.begin(), trips.end()), trips.end());
    std::mt19937_64 rng(seed);
    std::shuffle(trips.begin(), trips.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(trips.size())));
    std::map<std::string, bool> in_train;
    for (std::size_t i = 0; i < trips.size(); ++i) in_train[trips[i]] = i < n_train;

    SplitIndices out;
    for (std::size_t i = 0; i < trip_ids.size(); ++i) {
        (in_train[trip_ids[i]] ? out.train : out.test).push_back(i);
    }
    return out;
}

inline gbdt::TrainingSet to_training_set(std::span<const pipeline::LabeledFeatures> rows,
                                         std::span<const std::size_t> indices,
                                         const pipeline::NormalizationParams* normalizer) {
    gbdt::TrainingSet set;
    set.feature_names = pipeline::feature_names();
    set.x.cols = pipeline::kNumFeatures;
    set.x.values.reserve(indices.size() * pipeline::kNumFeatures);
    set.y.reserve(indices.size());
    for (auto i : indices) {
        const auto& r = rows[i];
        const auto f = normalizer ? pipeline::apply_normalizer(*normalizer, r.features) : r.features;
        set.x.push_row(f);
        set.y.push_back(to_code(r.label));
    }
    return set;
}

struct TrainPartition {
    gbdt::TrainingSet data;
};

struct TestPartition {
    gbdt::TrainingSet data;
};

struct Partitioned {
    TrainPartition train;
    TestPartition test;
    pipeline::NormalizationParams normalizer;  // fitted on train rows only
};

inline Partitioned partition(std::span<const pipeline::LabeledFeatures> rows, double train_fraction,
                             std::uint64_t seed, bool by_trip = false) {
    if (rows.empty()) throw InputError("no feature rows to split");
    SplitIndices idx;
    if (by_trip) {
        std::vector<std::string> ids;
        for (const auto& r : rows) ids.push_back(r.trip_id);
        idx = trip_split(ids, train_fraction, seed);
    } else {
        std::vector<int> labels;
        for (const auto& r : rows) labels.push_back(to_code(r.label));
        idx = stratified_split(labels, train_fraction, seed);
    }
    if (idx.train.empty() || idx.test.empty()) {
        throw InputError("split leaves an empty train or test partition");
    }
    std::vector<pipeline::FeatureVector> train_rows;
    for (auto i : idx.train) train_rows.push_back(rows[i].features);

    Partitioned out;
    out.normalizer = pipeline::fit_normalizer(std::span<const pipeline::FeatureVector>(train_rows));
    out.train.data = to_training_set(rows, idx.train, &out.normalizer);
    out.test.data = to_training_set(rows, idx.test, &out.normalizer);
    return out;
}

inline std::array<int, kNumClasses> class_histogram(std::span<const int> labels) {
    std::array<int, kNumClasses> h{};
    for (int y : labels) ++h[static_cast<std::size_t>(y)];
    return h;
}

inline gbdt::TrainingSet subset(const gbdt::TrainingSet& set, std::span<const std::size_t> indices) {
    gbdt::TrainingSet out;
    out.feature_names = set.feature_names;
    out.x.cols = set.x.cols;
    for (auto i : indices) {
        out.x.push_row(set.x.row(i));
        out.y.push_back(set.y[i]);
    }
    return out;
}

}  // namespace drive_profiler::data
