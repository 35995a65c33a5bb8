#pragma once

// Random search over learning rate, tree depth and tree count. Each trial
// trains on the training partition minus a stratified validation fold and is
// scored by validation macro F1.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

#include "drive_profiler/dataset.hpp"
#include "drive_profiler/gbdt.hpp"
#include "drive_profiler/metrics.hpp"

namespace drive_profiler::tune {

struct SearchSpace {
    double learning_rate_min = 0.01;  // sampled log-uniformly
    double learning_rate_max = 1.0;
    int max_depth_min = 3;
    int max_depth_max = 10;
    int n_estimators_min = 10;
    int n_estimators_max = 100;
    std::uint64_t random_state = 10;
    double l2_reg = 1.0;
    int min_samples_leaf = 5;

    bool contains(const gbdt::Hyperparameters& hp) const {
        return hp.learning_rate >= learning_rate_min && hp.learning_rate <= learning_rate_max &&
               hp.max_depth >= max_depth_min && hp.max_depth <= max_depth_max &&
               hp.n_estimators >= n_estimators_min && hp.n_estimators <= n_estimators_max;
    }
};

struct TrialResult {
    int index = 0;
    gbdt::Hyperparameters hyperparameters;
    double validation_f1 = 0.0;
    double seconds = 0.0;
};

struct SearchResult {
    TrialResult best;
    std::vector<TrialResult> trials;
};

inline constexpr double kValidationFraction = 0.15;

/// Deterministic sequence of parameter vectors for a seed.
inline std::vector<gbdt::Hyperparameters> sample_points(const SearchSpace& space, int n_trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_lr(std::log(space.learning_rate_min), std::log(space.learning_rate_max));
    std::uniform_int_distribution<int> depth(space.max_depth_min, space.max_depth_max);
    std::uniform_int_distribution<int> trees(space.n_estimators_min, space.n_estimators_max);
    std::vector<gbdt::Hyperparameters> points;
    for (int i = 0; i < n_trials; ++i) {
        gbdt::Hyperparameters hp;
        hp.learning_rate = std::clamp(std::exp(log_lr(rng)), space.learning_rate_min, space.learning_rate_max);
        hp.max_depth = depth(rng);
        hp.n_estimators = trees(rng);
        hp.l2_reg = space.l2_reg;
        hp.min_samples_leaf = space.min_samples_leaf;
        hp.random_state = space.random_state;
        points.push_back(hp);
    }
    return points;
}

/// Validation-fold split of a training partition: (fit rows, validation rows).
inline std::pair<gbdt::TrainingSet, gbdt::TrainingSet> validation_fold(const data::TrainPartition& train,
                                                                       std::uint64_t seed) {
    const auto idx = data::stratified_split(train.data.y, 1.0 - kValidationFraction, seed);
    return {data::subset(train.data, idx.train), data::subset(train.data, idx.test)};
}

inline double validation_f1(const gbdt::TrainingSet& fit_rows, const gbdt::TrainingSet& validation,
                            const gbdt::Hyperparameters& hp) {
    const auto model = gbdt::fit(fit_rows, hp);
    std::vector<int> predicted;
    predicted.reserve(validation.y.size());
    for (std::size_t i = 0; i < validation.x.rows(); ++i) predicted.push_back(to_code(model.predict(validation.x.row(i))));
    return metrics::macro_metrics(metrics::confusion(validation.y, predicted)).macro_f1;
}

inline SearchResult random_search(const data::TrainPartition& train, const SearchSpace& space, int n_trials,
                                  std::uint64_t seed) {
    if (n_trials < 1) throw InputError("n_trials must be >= 1");
    const auto hist = data::class_histogram(train.data.y);
    for (int k = 0; k < kNumClasses; ++k) {
        if (hist[static_cast<std::size_t>(k)] == 0) {
            throw InputError("class " + std::string(to_string(static_cast<BehaviorClass>(k))) +
                             " is missing from the training partition");
        }
    }
    const auto [fit_rows, validation] = validation_fold(train, seed);
    if (validation.y.empty()) throw InputError("training partition too small for a validation fold");

    SearchResult result;
    const auto points = sample_points(space, n_trials, seed);
    for (int i = 0; i < n_trials; ++i) {
        const auto started = std::chrono::steady_clock::now();
        TrialResult trial;
        trial.index = i;
        trial.hyperparameters = points[static_cast<std::size_t>(i)];
        trial.validation_f1 = validation_f1(fit_rows, validation, trial.hyperparameters);
        trial.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (result.trials.empty() || trial.validation_f1 > result.best.validation_f1) result.best = trial;
        result.trials.push_back(trial);
    }
    return result;
}

/// Best parameters as the JSON fragment `train --params` reads.
inline nlohmann::ordered_json best_params_json(const TrialResult& best) {
    auto j = gbdt::to_json(best.hyperparameters);
    j["validation_macro_f1"] = best.validation_f1;
    j["trial"] = best.index;
    return j;
}

}  // namespace drive_profiler::tune
