#pragma once

// Multiclass gradient-boosted regression trees on the softmax log-loss.
//
// Each boosting round computes per-sample gradients g = p - onehot(y) and
// Hessians h = p (1 - p) from the current scores, then grows one regression
// tree per class with exact greedy splits scored by
//   gain = 1/2 [ G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l) ]
// and Newton leaf weights -G/(H+l). Tree outputs enter the class score scaled
// by the learning rate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "drive_profiler/feature_schema.hpp"
#include "drive_profiler/normalize.hpp"
#include "drive_profiler/types.hpp"

namespace drive_profiler::gbdt {

using ClassScores = std::array<double, kNumClasses>;

/// Raised when a model document cannot be read back.
class ModelFormatError : public InputError {
public:
    using InputError::InputError;
};

struct Hyperparameters {
    double learning_rate = 0.1;
    int max_depth = 6;
    int n_estimators = 50;
    double l2_reg = 1.0;
    int min_samples_leaf = 5;
    std::uint64_t random_state = 10;

    /// Validating constructor; the struct itself stays an aggregate for reading.
    static Hyperparameters make(double learning_rate, int max_depth, int n_estimators,
                                double l2_reg = 1.0, int min_samples_leaf = 5,
                                std::uint64_t random_state = 10) {
        Hyperparameters hp{learning_rate, max_depth, n_estimators, l2_reg, min_samples_leaf, random_state};
        hp.validate();
        return hp;
    }

    void validate() const {
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
            throw InputError("learning_rate must lie in (0, 1], got " + std::to_string(learning_rate));
        }
        if (max_depth < 1) throw InputError("max_depth must be >= 1");
        if (n_estimators < 1) throw InputError("n_estimators must be >= 1");
        if (!(l2_reg >= 0.0)) throw InputError("l2_reg must be >= 0");
        if (min_samples_leaf < 1) throw InputError("min_samples_leaf must be >= 1");
    }

    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

inline ClassScores softmax(const ClassScores& scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    ClassScores p{};
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = std::exp(scores[k] - top);
        total += p[k];
    }
    for (auto& v : p) v /= total;
    return p;
}

struct GradHess {
    ClassScores grad{};
    ClassScores hess{};
};

inline GradHess grad_hess(const ClassScores& probs, int true_class) {
    GradHess out;
    for (int k = 0; k < kNumClasses; ++k) {
        const double p = probs[static_cast<std::size_t>(k)];
        out.grad[static_cast<std::size_t>(k)] = p - (k == true_class ? 1.0 : 0.0);
        out.hess[static_cast<std::size_t>(k)] = p * (1.0 - p);
    }
    return out;
}

/// -log p[true_class]
inline double log_loss(const ClassScores& scores, int true_class) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double s : scores) total += std::exp(s - top);
    return std::log(total) + top - scores[static_cast<std::size_t>(true_class)];
}

inline double leaf_value(double grad_sum, double hess_sum, double l2_reg) {
    return -grad_sum / (hess_sum + l2_reg);
}

inline double split_gain(double g_left, double h_left, double g_right, double h_right, double l2_reg) {
    const double g = g_left + g_right;
    const double h = h_left + h_right;
    return 0.5 * (g_left * g_left / (h_left + l2_reg) + g_right * g_right / (h_right + l2_reg) -
                  g * g / (h + l2_reg));
}

/// Gains closer than this count as tied; the earlier candidate wins.
inline double tie_tolerance(double gain) { return 1e-12 * std::max(1.0, std::abs(gain)); }

/// Dense row-major feature matrix.
struct FeatureMatrix {
    std::size_t cols = 0;
    std::vector<double> values;

    std::size_t rows() const { return cols == 0 ? 0 : values.size() / cols; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    void push_row(std::span<const double> r) {
        if (cols == 0) cols = r.size();
        if (r.size() != cols) throw InputError("row length does not match matrix width");
        values.insert(values.end(), r.begin(), r.end());
    }
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;  // x <= threshold goes left
    double gain = 0.0;
};

/// Midpoint between two adjacent distinct values, guaranteed to separate them.
inline double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid >= hi ? lo : mid;
}

namespace detail {

// Per-feature lists of the node's sample indices, each sorted by that feature.
using SortedColumns = std::vector<std::vector<std::uint32_t>>;

inline SortedColumns sort_columns(const FeatureMatrix& x, std::span<const std::uint32_t> samples) {
    SortedColumns cols(x.cols);
    for (std::size_t f = 0; f < x.cols; ++f) {
        auto& idx = cols[f];
        idx.assign(samples.begin(), samples.end());
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
    }
    return cols;
}

inline std::optional<Split> best_split_sorted(const FeatureMatrix& x, const SortedColumns& cols,
                                              std::span<const double> grad, std::span<const double> hess,
                                              double l2_reg, int min_samples_leaf) {
    const std::size_t n = cols.empty() ? 0 : cols.front().size();
    const auto min_leaf = static_cast<std::size_t>(min_samples_leaf);
    if (n < 2 * min_leaf || n < 2) return std::nullopt;

    double g_total = 0.0;
    double h_total = 0.0;
    for (auto i : cols.front()) {
        g_total += grad[i];
        h_total += hess[i];
    }

    std::optional<Split> best;
    for (std::size_t f = 0; f < cols.size(); ++f) {
        const auto& idx = cols[f];
        double g_left = 0.0;
        double h_left = 0.0;
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            g_left += grad[idx[pos]];
            h_left += hess[idx[pos]];
            const std::size_t n_left = pos + 1;
            if (n_left < min_leaf) continue;
            if (n - n_left < min_leaf) break;
            const double v = x.at(idx[pos], f);
            const double next = x.at(idx[pos + 1], f);
            if (!(v < next)) continue;
            const double gain = split_gain(g_left, h_left, g_total - g_left, h_total - h_left, l2_reg);
            if (!best || gain > best->gain + tie_tolerance(best->gain)) {
                best = Split{f, midpoint(v, next), gain};
            }
        }
    }
    if (best && !(best->gain > tie_tolerance(0.0))) return std::nullopt;
    return best;
}

}  // namespace detail

/// Best (feature, threshold) over all rows of x. Ties go to the lowest
/// feature index, then the lowest threshold. Returns nothing when no split
/// has positive gain or the node is too small for two leaves.
inline std::optional<Split> best_split(const FeatureMatrix& x, std::span<const double> grad,
                                       std::span<const double> hess, double l2_reg, int min_samples_leaf) {
    std::vector<std::uint32_t> all(x.rows());
    std::iota(all.begin(), all.end(), 0u);
    return detail::best_split_sorted(x, detail::sort_columns(x, all), grad, hess, l2_reg, min_samples_leaf);
}

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Regression tree stored as a pre-order node list; node 0 is the root.
struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes[static_cast<std::size_t>(i)];
            i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }

    /// Depth of the deepest leaf; a single leaf has depth 0.
    int depth() const {
        int deepest = 0;
        std::vector<std::pair<int, int>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [i, d] = stack.back();
            stack.pop_back();
            const auto& n = nodes[static_cast<std::size_t>(i)];
            if (n.is_leaf()) {
                deepest = std::max(deepest, d);
            } else {
                stack.push_back({n.left, d + 1});
                stack.push_back({n.right, d + 1});
            }
        }
        return deepest;
    }

    friend bool operator==(const Tree&, const Tree&) = default;
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const double> grad, std::span<const double> hess,
                const Hyperparameters& hp)
        : x_(x), grad_(grad), hess_(hess), hp_(hp), goes_left_(x.rows(), 0) {}

    Tree build(SortedColumns root) {
        tree_.nodes.clear();
        grow(std::move(root), 0);
        return std::move(tree_);
    }

private:
    int grow(SortedColumns cols, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        std::optional<Split> split;
        if (depth < hp_.max_depth) {
            split = best_split_sorted(x_, cols, grad_, hess_, hp_.l2_reg, hp_.min_samples_leaf);
        }
        if (!split) {
            double g = 0.0;
            double h = 0.0;
            for (auto i : cols.front()) {
                g += grad_[i];
                h += hess_[i];
            }
            tree_.nodes[static_cast<std::size_t>(id)].value = leaf_value(g, h, hp_.l2_reg);
            return id;
        }

        for (auto i : cols.front()) goes_left_[i] = x_.at(i, split->feature) <= split->threshold ? 1 : 0;
        SortedColumns left(cols.size());
        SortedColumns right(cols.size());
        for (std::size_t f = 0; f < cols.size(); ++f) {
            for (auto i : cols[f]) (goes_left_[i] ? left[f] : right[f]).push_back(i);
        }
        cols.clear();
        cols.shrink_to_fit();

        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(split->feature);
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    const FeatureMatrix& x_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    const Hyperparameters& hp_;
    std::vector<std::uint8_t> goes_left_;
    Tree tree_;
};

}  // namespace detail

struct GbdtModel {
    Hyperparameters hyperparameters;
    std::size_t num_features = 0;
    std::string feature_hash;
    ClassScores init_scores{};
    std::vector<Tree> trees;          // round-major: trees[round * kNumClasses + class]
    std::vector<double> train_loss;   // mean log-loss before round 1, then after each round
    std::optional<pipeline::NormalizationParams> normalization;
    std::vector<std::string> warnings;  // not persisted

    std::size_t rounds() const { return trees.size() / kNumClasses; }

    void check_schema(std::size_t features, const std::string& hash) const {
        if (features != num_features) {
            throw InputError("model expects " + std::to_string(num_features) + " features, got " +
                             std::to_string(features));
        }
        if (hash != feature_hash) {
            throw InputError("feature ordering hash mismatch: model " + feature_hash + ", input " + hash);
        }
    }

    ClassScores raw_scores(std::span<const double> row) const {
        if (row.size() != num_features) {
            throw InputError("model expects " + std::to_string(num_features) + " features, got " +
                             std::to_string(row.size()));
        }
        ClassScores s = init_scores;
        const double lr = hyperparameters.learning_rate;
        for (std::size_t t = 0; t < trees.size(); ++t) {
            s[t % kNumClasses] += lr * trees[t].predict(row);
        }
        return s;
    }

    ClassScores predict_proba(std::span<const double> row) const { return softmax(raw_scores(row)); }

    /// Argmax of the class probabilities; ties go to the lowest class code.
    BehaviorClass predict(std::span<const double> row) const {
        const auto p = predict_proba(row);
        std::size_t best = 0;
        for (std::size_t k = 1; k < p.size(); ++k) {
            if (p[k] > p[best]) best = k;
        }
        return static_cast<BehaviorClass>(best);
    }

    std::vector<BehaviorClass> predict(const FeatureMatrix& x, const std::string& hash) const {
        check_schema(x.cols, hash);
        std::vector<BehaviorClass> out;
        out.reserve(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(predict(x.row(i)));
        return out;
    }
};

/// Training data: features plus class codes 0-3, with the feature names
/// that define the ordering hash.
struct TrainingSet {
    FeatureMatrix x;
    std::vector<int> y;
    std::vector<std::string> feature_names;
};

inline double mean_log_loss(std::span<const ClassScores> scores, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += log_loss(scores[i], y[i]);
    return total / static_cast<double>(y.size());
}

// Floor for the prior of a class absent from training data.
inline constexpr double kMinPrior = 1e-6;

inline GbdtModel fit(const TrainingSet& data, const Hyperparameters& hp) {
    hp.validate();
    const std::size_t n = data.x.rows();
    if (n == 0) throw InputError("training set is empty");
    if (data.y.size() != n) {
        throw InputError("training set has " + std::to_string(n) + " rows but " +
                         std::to_string(data.y.size()) + " labels");
    }
    if (data.feature_names.size() != data.x.cols) {
        throw InputError("feature count mismatch: " + std::to_string(data.x.cols) + " columns, " +
                         std::to_string(data.feature_names.size()) + " names");
    }
    if (n > std::numeric_limits<std::uint32_t>::max()) throw InputError("training set too large");

    GbdtModel model;
    model.hyperparameters = hp;
    model.num_features = data.x.cols;
    model.feature_hash = feature_ordering_hash(data.feature_names);

    std::array<std::size_t, kNumClasses> counts{};
    for (int label : data.y) {
        if (label < 0 || label >= kNumClasses) {
            throw InputError("label code out of range: " + std::to_string(label));
        }
        ++counts[static_cast<std::size_t>(label)];
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) {
            model.warnings.push_back("class " + std::string(to_string(static_cast<BehaviorClass>(k))) +
                                     " absent from training data");
        }
        const double prior = static_cast<double>(counts[k]) / static_cast<double>(n);
        model.init_scores[k] = std::log(std::max(prior, kMinPrior));
    }

    std::vector<ClassScores> scores(n, model.init_scores);
    model.train_loss.push_back(mean_log_loss(scores, data.y));

    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    const auto sorted = detail::sort_columns(data.x, all);

    std::vector<std::array<double, kNumClasses>> grads(n);
    std::vector<std::array<double, kNumClasses>> hesses(n);
    std::vector<double> g(n);
    std::vector<double> h(n);
    model.trees.reserve(static_cast<std::size_t>(hp.n_estimators) * kNumClasses);

    for (int round = 0; round < hp.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = grad_hess(softmax(scores[i]), data.y[i]);
            grads[i] = gh.grad;
            hesses[i] = gh.hess;
        }
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                g[i] = grads[i][k];
                h[i] = hesses[i][k];
            }
            detail::TreeBuilder builder(data.x, g, h, hp);
            auto tree = builder.build(sorted);
            for (std::size_t i = 0; i < n; ++i) scores[i][k] += hp.learning_rate * tree.predict(data.x.row(i));
            model.trees.push_back(std::move(tree));
        }
        model.train_loss.push_back(mean_log_loss(scores, data.y));
    }
    return model;
}

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kFormatName = "drive-profiler-gbdt";

inline nlohmann::ordered_json to_json(const Hyperparameters& hp) {
    return {{"learning_rate", hp.learning_rate}, {"max_depth", hp.max_depth},
            {"n_estimators", hp.n_estimators},   {"l2_reg", hp.l2_reg},
            {"min_samples_leaf", hp.min_samples_leaf}, {"random_state", hp.random_state}};
}

inline Hyperparameters hyperparameters_from_json(const nlohmann::ordered_json& j) {
    Hyperparameters hp;
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.max_depth = j.at("max_depth").get<int>();
    hp.n_estimators = j.at("n_estimators").get<int>();
    hp.l2_reg = j.value("l2_reg", 1.0);
    hp.min_samples_leaf = j.value("min_samples_leaf", 5);
    hp.random_state = j.value("random_state", std::uint64_t{10});
    hp.validate();
    return hp;
}

inline nlohmann::ordered_json serialize(const GbdtModel& model) {
    using nlohmann::ordered_json;
    ordered_json trees = ordered_json::array();
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        ordered_json feature = ordered_json::array();
        ordered_json threshold = ordered_json::array();
        ordered_json left = ordered_json::array();
        ordered_json right = ordered_json::array();
        ordered_json value = ordered_json::array();
        for (const auto& n : model.trees[t].nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            value.push_back(n.value);
        }
        trees.push_back({{"round", t / kNumClasses}, {"class", t % kNumClasses},
                         {"feature", feature}, {"threshold", threshold}, {"left", left},
                         {"right", right}, {"value", value}});
    }
    ordered_json doc = {
        {"format", kFormatName},
        {"schema_version", kSchemaVersion},
        {"num_classes", kNumClasses},
        {"num_features", model.num_features},
        {"feature_hash", model.feature_hash},
        {"hyperparameters", to_json(model.hyperparameters)},
        {"init_scores", model.init_scores},
        {"train_loss", model.train_loss},
        {"trees", trees},
    };
    if (model.normalization) {
        doc["normalization"] = {{"min", model.normalization->min}, {"max", model.normalization->max}};
    }
    return doc;
}

inline GbdtModel deserialize(const nlohmann::ordered_json& doc) {
    try {
        if (!doc.is_object() || doc.value("format", std::string{}) != kFormatName) {
            throw ModelFormatError("not a GBDT model document");
        }
        const int version = doc.at("schema_version").get<int>();
        if (version != kSchemaVersion) {
            throw ModelFormatError("model schema version " + std::to_string(version) +
                                   " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
        }
        if (doc.at("num_classes").get<int>() != kNumClasses) {
            throw ModelFormatError("model must have " + std::to_string(kNumClasses) + " classes");
        }
        GbdtModel m;
        m.num_features = doc.at("num_features").get<std::size_t>();
        m.feature_hash = doc.at("feature_hash").get<std::string>();
        m.hyperparameters = hyperparameters_from_json(doc.at("hyperparameters"));
        m.init_scores = doc.at("init_scores").get<ClassScores>();
        m.train_loss = doc.at("train_loss").get<std::vector<double>>();

        const auto& trees = doc.at("trees");
        if (!trees.is_array() || trees.size() % kNumClasses != 0) {
            throw ModelFormatError("tree count must be a multiple of " + std::to_string(kNumClasses));
        }
        for (std::size_t t = 0; t < trees.size(); ++t) {
            const auto& jt = trees[t];
            const auto feature = jt.at("feature").get<std::vector<int>>();
            const auto threshold = jt.at("threshold").get<std::vector<double>>();
            const auto left = jt.at("left").get<std::vector<int>>();
            const auto right = jt.at("right").get<std::vector<int>>();
            const auto value = jt.at("value").get<std::vector<double>>();
            const std::size_t count = feature.size();
            if (count == 0 || threshold.size() != count || left.size() != count || right.size() != count ||
                value.size() != count) {
                throw ModelFormatError("tree " + std::to_string(t) + " has inconsistent node arrays");
            }
            Tree tree;
            for (std::size_t i = 0; i < count; ++i) {
                TreeNode node{feature[i], threshold[i], left[i], right[i], value[i]};
                if (!node.is_leaf()) {
                    const auto self = static_cast<int>(i);
                    const bool children_ok = node.left > self && node.right > self &&
                                             node.left < static_cast<int>(count) &&
                                             node.right < static_cast<int>(count);
                    if (!children_ok || static_cast<std::size_t>(node.feature) >= m.num_features) {
                        throw ModelFormatError("tree " + std::to_string(t) + " node " + std::to_string(i) +
                                               " has invalid children or feature index");
                    }
                }
                tree.nodes.push_back(node);
            }
            if (tree.depth() > m.hyperparameters.max_depth) {
                throw ModelFormatError("tree " + std::to_string(t) + " exceeds max_depth");
            }
            m.trees.push_back(std::move(tree));
        }
        if (doc.contains("normalization")) {
            pipeline::NormalizationParams p;
            p.min = doc["normalization"].at("min").get<std::vector<double>>();
            p.max = doc["normalization"].at("max").get<std::vector<double>>();
            if (p.min.size() != m.num_features || p.max.size() != m.num_features) {
                throw ModelFormatError("normalization dimension does not match num_features");
            }
            m.normalization = std::move(p);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("malformed model document: ") + e.what());
    } catch (const ModelFormatError&) {
        throw;
    } catch (const InputError& e) {
        throw ModelFormatError(std::string("malformed model document: ") + e.what());
    }
}

}  // namespace drive_profiler::gbdt
