#pragma once

#include <array>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "drive_profiler/types.hpp"

namespace drive_profiler::metrics {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& row : counts) {
            for (auto c : row) t += c;
        }
        return t;
    }
    std::int64_t tp(int k) const { return counts[k][k]; }
    std::int64_t fp(int k) const {
        std::int64_t col = 0;
        for (int t = 0; t < kNumClasses; ++t) col += counts[t][k];
        return col - tp(k);
    }
    std::int64_t fn(int k) const {
        std::int64_t row = 0;
        for (int p = 0; p < kNumClasses; ++p) row += counts[k][p];
        return row - tp(k);
    }
    std::int64_t tn(int k) const { return total() - tp(k) - fp(k) - fn(k); }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) {
        throw InputError("label lists differ in length: " + std::to_string(truth.size()) + " vs " +
                         std::to_string(predicted.size()));
    }
    if (truth.empty()) throw InputError("no labels to evaluate");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses) {
            throw InputError("label code out of range at position " + std::to_string(i));
        }
        ++cm.counts[t][p];
    }
    return cm;
}

inline ConfusionMatrix confusion(std::span<const BehaviorClass> truth, std::span<const BehaviorClass> predicted) {
    std::vector<int> t;
    std::vector<int> p;
    for (auto c : truth) t.push_back(to_code(c));
    for (auto c : predicted) p.push_back(to_code(c));
    return confusion(std::span<const int>(t), std::span<const int>(p));
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;  // one-vs-rest (TP + TN) / total
};

struct EvalReport {
    std::array<ClassMetrics, kNumClasses> per_class{};
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double avg_accuracy_ovr = 0.0;
    double accuracy_top1 = 0.0;
    ConfusionMatrix confusion;
    std::int64_t samples = 0;
    bool halved_f1 = false;
};

struct MetricOptions {
    // Per-class F1 as P*R/(P+R), without the harmonic-mean factor 2.
    bool halved_f1 = false;
};

namespace detail {
inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace detail

/// Macro-averaged metrics over the four classes. Any 0/0 term counts as 0.
inline EvalReport macro_metrics(const ConfusionMatrix& cm, MetricOptions options = {}) {
    const auto total = cm.total();
    if (total <= 0) throw InputError("confusion matrix is empty");
    const double n = static_cast<double>(total);

    EvalReport r;
    r.confusion = cm;
    r.samples = total;
    r.halved_f1 = options.halved_f1;
    double correct = 0.0;
    for (int k = 0; k < kNumClasses; ++k) {
        const double tp = static_cast<double>(cm.tp(k));
        const double fp = static_cast<double>(cm.fp(k));
        const double fn = static_cast<double>(cm.fn(k));
        const double tn = static_cast<double>(cm.tn(k));
        auto& c = r.per_class[static_cast<std::size_t>(k)];
        c.precision = detail::ratio(tp, tp + fp);
        c.recall = detail::ratio(tp, tp + fn);
        const double scale = options.halved_f1 ? 1.0 : 2.0;
        c.f1 = detail::ratio(scale * c.precision * c.recall, c.precision + c.recall);
        c.accuracy = (tp + tn) / n;
        correct += tp;

        r.macro_precision += c.precision;
        r.macro_recall += c.recall;
        r.macro_f1 += c.f1;
        r.avg_accuracy_ovr += c.accuracy;
    }
    r.macro_precision /= kNumClasses;
    r.macro_recall /= kNumClasses;
    r.macro_f1 /= kNumClasses;
    r.avg_accuracy_ovr /= kNumClasses;
    r.accuracy_top1 = correct / n;
    return r;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
    using nlohmann::ordered_json;
    ordered_json per_class = ordered_json::array();
    for (int k = 0; k < kNumClasses; ++k) {
        const auto& c = r.per_class[static_cast<std::size_t>(k)];
        per_class.push_back({{"class", to_string(static_cast<BehaviorClass>(k))},
                             {"precision", c.precision},
                             {"recall", c.recall},
                             {"f1", c.f1},
                             {"accuracy_ovr", c.accuracy}});
    }
    ordered_json matrix = ordered_json::array();
    for (const auto& row : r.confusion.counts) matrix.push_back(row);
    return {{"samples", r.samples},
            {"avg_accuracy_ovr", r.avg_accuracy_ovr},
            {"accuracy_top1", r.accuracy_top1},
            {"macro_precision", r.macro_precision},
            {"macro_recall", r.macro_recall},
            {"macro_f1", r.macro_f1},
            {"f1_formula", r.halved_f1 ? "P*R/(P+R)" : "2*P*R/(P+R)"},
            {"per_class", per_class},
            {"confusion_matrix", matrix}};
}

/// Aligned plain-text table of the headline rows, the per-class rows and the confusion matrix.
inline std::string to_text(const EvalReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    auto line = [&](const std::string& name, double v) {
        out << std::left << std::setw(22) << name << std::right << std::setw(10) << v << "\n";
    };
    line("Average Accuracy", r.avg_accuracy_ovr);
    line("Top-1 Accuracy", r.accuracy_top1);
    line("Macro Precision", r.macro_precision);
    line("Macro Recall", r.macro_recall);
    line("Macro F1-score", r.macro_f1);
    out << "\n" << std::left << std::setw(14) << "class" << std::right << std::setw(11) << "precision"
        << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "support" << "\n";
    for (int k = 0; k < kNumClasses; ++k) {
        const auto& c = r.per_class[static_cast<std::size_t>(k)];
        out << std::left << std::setw(14) << to_string(static_cast<BehaviorClass>(k)) << std::right
            << std::setw(11) << c.precision << std::setw(10) << c.recall << std::setw(10) << c.f1
            << std::setw(10) << (r.confusion.tp(k) + r.confusion.fn(k)) << "\n";
    }
    out << "\nconfusion (rows = true, cols = predicted)\n";
    for (int t = 0; t < kNumClasses; ++t) {
        out << std::left << std::setw(14) << to_string(static_cast<BehaviorClass>(t)) << std::right;
        for (int p = 0; p < kNumClasses; ++p) out << std::setw(8) << r.confusion.counts[t][p];
        out << "\n";
    }
    out << "samples: " << r.samples << "\n";
    return out.str();
}

}  // namespace drive_profiler::metrics
