#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "drive_profiler/gbdt.hpp"
#include "oracles.hpp"

using namespace drive_profiler;
using namespace drive_profiler::gbdt;

namespace {

std::vector<std::string> names(std::size_t d) {
    std::vector<std::string> n;
    for (std::size_t j = 0; j < d; ++j) n.push_back("f" + std::to_string(j));
    return n;
}

// 40 samples, 10 per class; feature 0 separates the classes, feature 1 is noise.
TrainingSet separable_toy() {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrainingSet set;
    set.feature_names = names(2);
    for (int i = 0; i < 40; ++i) {
        const int cls = i % 4;
        const std::vector<double> row = {cls * 10.0 + u(rng), u(rng)};
        set.x.push_row(row);
        set.y.push_back(cls);
    }
    return set;
}

TrainingSet random_set(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, 3);
    TrainingSet set;
    set.feature_names = names(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d);
        for (auto& v : row) v = g(rng);
        set.x.push_row(row);
        // Labels depend weakly on the first feature so trees have something to find.
        set.y.push_back(row[0] > 0.5 ? 3 : cls(rng));
    }
    return set;
}

double accuracy(const GbdtModel& m, const TrainingSet& s) {
    int hits = 0;
    for (std::size_t i = 0; i < s.x.rows(); ++i) hits += to_code(m.predict(s.x.row(i))) == s.y[i];
    return static_cast<double>(hits) / static_cast<double>(s.x.rows());
}

}  // namespace

TEST(Softmax, Uniform) {
    for (double c : {0.0, -40.0, 3.5, 700.0}) {
        for (double p : softmax({c, c, c, c})) EXPECT_DOUBLE_EQ(p, 0.25);
    }
}

TEST(Softmax, OneHotLogit) {
    EXPECT_NEAR(softmax({1, 0, 0, 0})[0], 0.4753668864186717, 1e-15);
}

TEST(Softmax, StableForLargeScores) {
    const auto p = softmax({1000, 999, -1000, 0});
    EXPECT_TRUE(std::isfinite(p[0]));
    EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-15);
}

TEST(GradHess, Examples) {
    const auto uniform = grad_hess({0.25, 0.25, 0.25, 0.25}, 0);
    EXPECT_EQ(uniform.grad, (ClassScores{-0.75, 0.25, 0.25, 0.25}));
    EXPECT_EQ(uniform.hess, (ClassScores{0.1875, 0.1875, 0.1875, 0.1875}));
    const auto perfect = grad_hess({0, 0, 1, 0}, 2);
    EXPECT_EQ(perfect.grad, (ClassScores{0, 0, 0, 0}));
}

TEST(GradHess, MatchesFiniteDifferences) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> s(-3, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const ClassScores scores = {s(rng), s(rng), s(rng), s(rng)};
        const int y = trial % 4;
        const auto gh = grad_hess(softmax(scores), y);
        for (int k = 0; k < 4; ++k) {
            const double g = gh.grad[k];
            const double h = gh.hess[k];
            // Relative error, with the scale floored at 1e-2 for near-zero derivatives.
            EXPECT_LE(std::abs(oracle::fd_gradient(scores, y, k, 1e-6) - g) / std::max(std::abs(g), 1e-2), 1e-4);
            EXPECT_LE(std::abs(oracle::fd_second(scores, y, k, 1e-4) - h) / std::max(std::abs(h), 1e-2), 1e-4);
        }
    }
}

TEST(LeafValue, Examples) {
    EXPECT_EQ(leaf_value(0, 5, 1), 0.0);
    EXPECT_EQ(leaf_value(2, 3, 1), -0.5);
    EXPECT_EQ(leaf_value(-0.3, 0.21, 1.0), 0.3 / 1.21);
}

TEST(BestSplit, HomogeneousGradientsDoNotSplit) {
    FeatureMatrix x;
    for (int i = 0; i < 20; ++i) x.push_row(std::vector<double>{double(i), double(i % 3)});
    const std::vector<double> g(20, 0.4);
    const std::vector<double> h(20, 0.24);
    EXPECT_FALSE(best_split(x, g, h, 1.0, 1).has_value());
    EXPECT_FALSE(best_split(x, g, h, 0.0, 1).has_value());
}

TEST(BestSplit, TwoClustersSeparatedAtTheGap) {
    FeatureMatrix x;
    std::vector<double> g;
    std::vector<double> h;
    for (double v : {-3.0, -2.5, -2.0, -1.0, -0.5}) {
        x.push_row(std::vector<double>{v});
        g.push_back(-1);
        h.push_back(1);
    }
    for (double v : {0.5, 1.0, 1.5, 4.0}) {
        x.push_row(std::vector<double>{v});
        g.push_back(1);
        h.push_back(1);
    }
    const auto split = best_split(x, g, h, 1.0, 1);
    ASSERT_TRUE(split.has_value());
    EXPECT_EQ(split->feature, 0u);
    EXPECT_EQ(split->threshold, 0.0);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < x.rows(); ++i) rows.push_back({x.at(i, 0)});
    const auto expected = oracle::exhaustive_best_split(rows, g, h, 1.0, 1);
    ASSERT_TRUE(expected.has_value());
    EXPECT_EQ(expected->threshold, split->threshold);
    EXPECT_NEAR(expected->gain, split->gain, 1e-12);
}

TEST(BestSplit, RespectsMinSamplesLeaf) {
    FeatureMatrix x;
    std::vector<double> g;
    for (int i = 0; i < 10; ++i) {
        x.push_row(std::vector<double>{double(i)});
        g.push_back(i == 0 ? -5.0 : 0.1);
    }
    const std::vector<double> h(10, 1.0);
    const auto free = best_split(x, g, h, 1.0, 1);
    ASSERT_TRUE(free);
    EXPECT_EQ(free->threshold, 0.5);
    const auto constrained = best_split(x, g, h, 1.0, 3);
    ASSERT_TRUE(constrained);
    EXPECT_EQ(constrained->threshold, 2.5);
    EXPECT_FALSE(best_split(x, g, h, 1.0, 6).has_value());
}

TEST(BestSplit, MatchesExhaustiveEnumeration) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const auto inst = oracle::random_split_instance(rng, trial % 3 == 0);
        FeatureMatrix x;
        for (const auto& r : inst.rows) x.push_row(r);
        const auto got = best_split(x, inst.grad, inst.hess, inst.lambda, inst.min_leaf);
        const auto want = oracle::exhaustive_best_split(inst.rows, inst.grad, inst.hess, inst.lambda, inst.min_leaf);
        ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
        if (got) {
            EXPECT_EQ(got->feature, want->feature) << "trial " << trial;
            EXPECT_EQ(got->threshold, want->threshold) << "trial " << trial;
            EXPECT_NEAR(got->gain, want->gain, 1e-9 * std::max(1.0, want->gain));
        }
    }
}

TEST(Hyperparameters, Validation) {
    EXPECT_THROW(Hyperparameters::make(0.1, 3, 0), InputError);
    EXPECT_THROW(Hyperparameters::make(0.0, 3, 10), InputError);
    EXPECT_THROW(Hyperparameters::make(1.5, 3, 10), InputError);
    EXPECT_THROW(Hyperparameters::make(0.1, 0, 10), InputError);
    EXPECT_THROW(Hyperparameters::make(0.1, 3, 10, -1.0), InputError);
    EXPECT_THROW(Hyperparameters::make(0.1, 3, 10, 1.0, 0), InputError);
    EXPECT_NO_THROW(Hyperparameters::make(0.73, 8, 88, 1.0, 5, 10));
    EXPECT_NO_THROW(Hyperparameters::make(1.0, 1, 1, 0.0, 1));
}

TEST(Fit, SeparableToyReachesPerfectTrainingAccuracy) {
    const auto set = separable_toy();
    const auto model = fit(set, Hyperparameters::make(0.3, 3, 50));
    EXPECT_EQ(model.rounds(), 50u);
    EXPECT_EQ(model.trees.size(), 200u);
    EXPECT_EQ(accuracy(model, set), 1.0);
    EXPECT_LT(model.train_loss.back(), model.train_loss.front());
}

TEST(Fit, InitScoresAreLogPriors) {
    TrainingSet set;
    set.feature_names = names(1);
    const std::vector<int> labels = {0, 0, 0, 0, 1, 1, 2, 3};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        set.x.push_row(std::vector<double>{double(i)});
        set.y.push_back(labels[i]);
    }
    const auto model = fit(set, Hyperparameters::make(0.1, 2, 1, 1.0, 1));
    EXPECT_NEAR(model.init_scores[0], std::log(0.5), 1e-15);
    EXPECT_NEAR(model.init_scores[3], std::log(0.125), 1e-15);

    auto no_rounds = model;
    no_rounds.trees.clear();
    const auto p = no_rounds.predict_proba(std::vector<double>{3.0});
    EXPECT_NEAR(p[0], 0.5, 1e-15);
    EXPECT_NEAR(p[1], 0.25, 1e-15);
    EXPECT_NEAR(p[2], 0.125, 1e-15);
    EXPECT_NEAR(p[3], 0.125, 1e-15);
}

TEST(Fit, Errors) {
    TrainingSet empty;
    empty.feature_names = names(2);
    empty.x.cols = 2;
    EXPECT_THROW(fit(empty, Hyperparameters{}), InputError);

    auto set = separable_toy();
    set.feature_names.push_back("extra");
    EXPECT_THROW(fit(set, Hyperparameters{}), InputError);

    set = separable_toy();
    set.y.pop_back();
    EXPECT_THROW(fit(set, Hyperparameters{}), InputError);

    set = separable_toy();
    set.y[0] = 4;
    EXPECT_THROW(fit(set, Hyperparameters{}), InputError);

    Hyperparameters bad;
    bad.n_estimators = 0;
    EXPECT_THROW(fit(separable_toy(), bad), InputError);
}

TEST(Fit, WarnsOnMissingClass) {
    auto set = separable_toy();
    for (auto& y : set.y) y = y == 3 ? 2 : y;
    const auto model = fit(set, Hyperparameters::make(0.3, 2, 5));
    ASSERT_EQ(model.warnings.size(), 1u);
    EXPECT_NE(model.warnings[0].find("Dangerous"), std::string::npos);
    EXPECT_TRUE(std::isfinite(model.init_scores[3]));
}

TEST(Fit, DeterministicSerializedModel) {
    const auto set = separable_toy();
    const auto hp = Hyperparameters::make(0.5, 4, 20, 1.0, 2, 10);
    EXPECT_EQ(serialize(fit(set, hp)).dump(), serialize(fit(set, hp)).dump());
}

TEST(Fit, TrainingLossNonIncreasingForSmallLearningRates) {
    std::mt19937_64 rng(77);
    for (int d = 0; d < 10; ++d) {
        const auto set = random_set(rng, 60 + 15 * d, 1 + d % 5);
        for (double lr : {0.1, 0.3}) {
            const auto model = fit(set, Hyperparameters::make(lr, 1 + d % 6, 25, 1.0, 1 + d % 5));
            for (std::size_t r = 1; r < model.train_loss.size(); ++r) {
                EXPECT_LE(model.train_loss[r], model.train_loss[r - 1] + 1e-12) << "dataset " << d << " round " << r;
            }
        }
    }
}

TEST(Fit, DepthBound) {
    std::mt19937_64 rng(9);
    const auto set = random_set(rng, 300, 4);
    for (int depth : {1, 2, 5}) {
        const auto model = fit(set, Hyperparameters::make(0.5, depth, 5, 0.0, 1));
        for (const auto& t : model.trees) EXPECT_LE(t.depth(), depth);
    }
}

TEST(Fit, MonotoneFeatureTransformKeepsPredictions) {
    std::mt19937_64 rng(31);
    const auto set = random_set(rng, 200, 3);
    auto warped = set;
    for (std::size_t i = 0; i < warped.x.rows(); ++i) {
        auto& v = warped.x.values[i * 3 + 1];
        v = std::exp(v) * 3.0 + 1.0;
    }
    const auto hp = Hyperparameters::make(0.3, 4, 15, 1.0, 3);
    const auto a = fit(set, hp);
    const auto b = fit(warped, hp);
    for (std::size_t i = 0; i < set.x.rows(); ++i) {
        EXPECT_EQ(a.predict(set.x.row(i)), b.predict(warped.x.row(i)));
    }
}

TEST(Predict, ProbabilitiesSumToOneAndTiesGoLow) {
    const auto model = fit(separable_toy(), Hyperparameters::make(0.3, 3, 10));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10, 50);
    for (int i = 0; i < 100; ++i) {
        const auto p = model.predict_proba(std::vector<double>{u(rng), u(rng)});
        EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-12);
    }
    GbdtModel flat;
    flat.num_features = 1;
    EXPECT_EQ(flat.predict(std::vector<double>{0.0}), BehaviorClass::Normal);
}

TEST(Predict, SchemaChecks) {
    const auto set = separable_toy();
    const auto model = fit(set, Hyperparameters::make(0.3, 3, 5));
    EXPECT_THROW(model.predict_proba(std::vector<double>{1.0}), InputError);
    EXPECT_THROW(model.predict(set.x, "0000000000000000"), InputError);
    EXPECT_NO_THROW(model.predict(set.x, feature_ordering_hash(set.feature_names)));
}

TEST(Serialization, RoundTripPreservesPredictionsBitExactly) {
    std::mt19937_64 rng(5);
    const auto set = random_set(rng, 250, 5);
    auto model = fit(set, Hyperparameters::make(0.37, 5, 12, 1.0, 2));
    model.normalization = pipeline::NormalizationParams{std::vector<double>(5, -1.0), std::vector<double>(5, 2.0)};
    const auto text = serialize(model).dump();
    const auto back = deserialize(nlohmann::ordered_json::parse(text));
    EXPECT_EQ(serialize(back).dump(), text);
    std::normal_distribution<double> g(0, 2);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> row(5);
        for (auto& v : row) v = g(rng);
        const auto p = model.predict_proba(row);
        const auto q = back.predict_proba(row);
        for (int k = 0; k < 4; ++k) EXPECT_EQ(std::memcmp(&p[k], &q[k], sizeof(double)), 0);
    }
}

TEST(Serialization, StructuredErrors) {
    const auto doc = serialize(fit(separable_toy(), Hyperparameters::make(0.3, 2, 2)));

    auto wrong_version = doc;
    wrong_version["schema_version"] = 7;
    try {
        deserialize(wrong_version);
        FAIL();
    } catch (const ModelFormatError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("7"), std::string::npos);
        EXPECT_NE(msg.find("1"), std::string::npos);
    }

    auto missing = doc;
    missing.erase("init_scores");
    EXPECT_THROW(deserialize(missing), ModelFormatError);

    auto bad_child = doc;
    bad_child["trees"][0]["left"][0] = 0;
    if (bad_child["trees"][0]["feature"][0].get<int>() >= 0) {
        EXPECT_THROW(deserialize(bad_child), ModelFormatError);
    }

    auto odd_trees = doc;
    odd_trees["trees"].erase(0);
    EXPECT_THROW(deserialize(odd_trees), ModelFormatError);

    EXPECT_THROW(deserialize(nlohmann::ordered_json::array()), ModelFormatError);
}
