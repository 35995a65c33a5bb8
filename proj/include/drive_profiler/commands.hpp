#pragma once

// The end-to-end workflow behind the command-line tool: simulate -> prepare
// -> tune -> train -> predict. Each command validates its paths first, writes
// its outputs atomically and prints a short summary to `log`.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "drive_profiler/dataset.hpp"
#include "drive_profiler/gbdt.hpp"
#include "drive_profiler/io.hpp"
#include "drive_profiler/label.hpp"
#include "drive_profiler/metrics.hpp"
#include "drive_profiler/pipeline.hpp"
#include "drive_profiler/sim.hpp"
#include "drive_profiler/tune.hpp"

namespace drive_profiler::commands {

namespace fs = std::filesystem;

enum class Overlap { Train, None };

inline Overlap overlap_from_string(const std::string& s) {
    if (s == "train") return Overlap::Train;
    if (s == "none") return Overlap::None;
    throw InputError("overlap must be 'train' or 'none', got '" + s + "'");
}

inline std::size_t stride_for(Overlap o) {
    return o == Overlap::Train ? static_cast<std::size_t>(kWindowStride) : static_cast<std::size_t>(kWindowFrames);
}

namespace detail {

inline void require_file(const fs::path& p, const std::string& what) {
    if (p.empty()) throw InputError(what + " path is required");
    if (!fs::is_regular_file(p)) throw InputError(what + " not found: " + p.string());
}

inline void require_output(const fs::path& p, const std::string& what) {
    if (p.empty()) throw InputError(what + " path is required");
    const auto parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) throw InputError(what + " directory does not exist: " + parent.string());
}

inline void check_split(double split) {
    if (!(split > 0.0 && split < 1.0)) {
        throw InputError("--split must lie in (0, 1); train and test fractions sum to 1");
    }
}

inline std::string histogram_line(const std::array<int, kNumClasses>& h) {
    std::ostringstream out;
    for (int k = 0; k < kNumClasses; ++k) {
        if (k) out << "  ";
        out << to_string(static_cast<BehaviorClass>(k)) << "=" << h[static_cast<std::size_t>(k)];
    }
    return out.str();
}

inline std::vector<int> predict_codes(const gbdt::GbdtModel& model, const gbdt::TrainingSet& set) {
    std::vector<int> out;
    for (auto c : model.predict(set.x, feature_ordering_hash(set.feature_names))) out.push_back(to_code(c));
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    fs::path trips_dir;
    int trips = 125;
    double duration_s = 240.0;
    int segments_per_trip = 2;
    std::uint64_t seed = 42;
};

inline std::string trip_file_name(int index) {
    std::ostringstream name;
    name << "trip_" << std::setw(4) << std::setfill('0') << index << ".jsonl";
    return name.str();
}

inline void cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
    if (opt.trips < 1) throw InputError("--trips must be at least 1");
    if (opt.trips_dir.empty()) throw InputError("--trips-dir is required");
    std::error_code ec;
    fs::create_directories(opt.trips_dir, ec);
    if (!fs::is_directory(opt.trips_dir)) throw InputError("cannot create trips directory: " + opt.trips_dir.string());

    const auto configs = sim::balanced_configs({opt.trips, opt.duration_s, opt.segments_per_trip, opt.seed});
    const auto trips = sim::generate_dataset(configs);
    for (std::size_t i = 0; i < trips.size(); ++i) {
        io::write_trip(opt.trips_dir / trip_file_name(static_cast<int>(i)), trips[i]);
    }
    log << "wrote " << trips.size() << " trips to " << opt.trips_dir.string() << "\n";
    log << "total minutes: " << io::format_double(sim::total_minutes(trips)) << "\n";
    log << "intended segments: " << detail::histogram_line(sim::intended_histogram(trips)) << "\n";
}

// ---------------------------------------------------------------- prepare

struct PrepareOptions {
    fs::path trips_dir;
    fs::path features;
    Overlap overlap = Overlap::Train;
};

struct PrepareSummary {
    std::size_t trips = 0;
    std::size_t windows = 0;
    double raw_minutes = 0.0;
    std::array<int, kNumClasses> histogram{};
};

inline PrepareSummary cmd_prepare(const PrepareOptions& opt, std::ostream& log) {
    if (opt.trips_dir.empty()) throw InputError("--trips-dir is required");
    detail::require_output(opt.features, "features");
    const auto files = io::list_trip_files(opt.trips_dir);
    if (files.empty()) throw InputError("no .jsonl trip files in " + opt.trips_dir.string());

    PrepareSummary summary;
    std::vector<pipeline::LabeledFeatures> rows;
    for (const auto& f : files) {
        const auto trip = io::read_trip(f);
        const std::string id = f.stem().string();
        std::vector<pipeline::LabeledFeatures> trip_rows;
        try {
            trip_rows = pipeline::process_trip(trip, id, stride_for(opt.overlap));
        } catch (const InputError& e) {
            throw InputError(f.string() + ": " + e.what());
        }
        if (trip_rows.empty()) log << "warning: " << id << " is shorter than one window\n";
        summary.raw_minutes += trip.samples.back().t / 60.0;
        rows.insert(rows.end(), trip_rows.begin(), trip_rows.end());
        ++summary.trips;
    }
    for (const auto& r : rows) ++summary.histogram[static_cast<std::size_t>(to_code(r.label))];
    summary.windows = rows.size();
    io::write_file_atomic(opt.features, io::features_to_csv(rows));

    log << "trips: " << summary.trips << "  raw minutes: " << io::format_double(summary.raw_minutes) << "\n";
    log << "windows: " << summary.windows << "\n";
    log << "labels: " << detail::histogram_line(summary.histogram) << "\n";
    return summary;
}

// ---------------------------------------------------------------- tune

struct TuneOptions {
    fs::path features;
    fs::path best_params;  // JSON fragment for `train --params`
    fs::path trial_log;    // CSV, optional
    int trials = 30;
    double split = 0.7;
    std::uint64_t seed = 42;
    bool by_trip = false;
    bool record_timing = false;  // wall-clock seconds make the log non-reproducible
};

inline std::string trial_log_csv(const std::vector<tune::TrialResult>& trials, bool record_timing) {
    std::string out = "trial,learning_rate,max_depth,n_estimators,validation_macro_f1,seconds\n";
    for (const auto& t : trials) {
        out += std::to_string(t.index) + "," + io::format_double(t.hyperparameters.learning_rate) + "," +
               std::to_string(t.hyperparameters.max_depth) + "," + std::to_string(t.hyperparameters.n_estimators) +
               "," + io::format_double(t.validation_f1) + "," + (record_timing ? io::format_double(t.seconds) : "") +
               "\n";
    }
    return out;
}

inline tune::SearchResult cmd_tune(const TuneOptions& opt, std::ostream& log) {
    detail::require_file(opt.features, "features");
    detail::require_output(opt.best_params, "best params");
    if (!opt.trial_log.empty()) detail::require_output(opt.trial_log, "trial log");
    detail::check_split(opt.split);

    const auto rows = io::features_from_csv(io::read_file(opt.features), opt.features.string());
    const auto parts = data::partition(rows, opt.split, opt.seed, opt.by_trip);
    const auto result = tune::random_search(parts.train, tune::SearchSpace{}, opt.trials, opt.seed);

    io::write_file_atomic(opt.best_params, tune::best_params_json(result.best).dump(2) + "\n");
    if (!opt.trial_log.empty()) io::write_file_atomic(opt.trial_log, trial_log_csv(result.trials, opt.record_timing));

    const auto& hp = result.best.hyperparameters;
    log << "trials: " << result.trials.size() << "\n";
    log << "best trial " << result.best.index << ": learning_rate=" << io::format_double(hp.learning_rate)
        << " max_depth=" << hp.max_depth << " n_estimators=" << hp.n_estimators
        << " validation macro F1=" << io::format_double(result.best.validation_f1) << "\n";
    return result;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    fs::path features;
    fs::path model;
    fs::path report;       // JSON report
    fs::path params;       // optional best-params JSON from tune
    double split = 0.7;
    std::uint64_t seed = 42;
    bool by_trip = false;
    bool halved_f1 = false;
    // Used when no params file is given.
    gbdt::Hyperparameters hyperparameters = gbdt::Hyperparameters::make(0.04, 8, 53);
};

struct TrainOutcome {
    gbdt::GbdtModel model;
    metrics::EvalReport report;
};

inline TrainOutcome cmd_train(const TrainOptions& opt, std::ostream& log) {
    detail::require_file(opt.features, "features");
    detail::require_output(opt.model, "model");
    if (!opt.report.empty()) detail::require_output(opt.report, "report");
    if (!opt.params.empty()) detail::require_file(opt.params, "params");
    detail::check_split(opt.split);

    auto hp = opt.hyperparameters;
    if (!opt.params.empty()) {
        try {
            hp = gbdt::hyperparameters_from_json(nlohmann::ordered_json::parse(io::read_file(opt.params)));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(opt.params.string() + ": " + e.what());
        }
    }
    hp.validate();

    const auto rows = io::features_from_csv(io::read_file(opt.features), opt.features.string());
    const auto parts = data::partition(rows, opt.split, opt.seed, opt.by_trip);
    const auto hist = data::class_histogram(parts.train.data.y);
    for (int k = 0; k < kNumClasses; ++k) {
        if (hist[static_cast<std::size_t>(k)] == 0) {
            throw InputError("class " + std::string(to_string(static_cast<BehaviorClass>(k))) +
                             " is absent from the training split");
        }
    }

    TrainOutcome out;
    out.model = gbdt::fit(parts.train.data, hp);
    out.model.normalization = parts.normalizer;
    const auto predicted = detail::predict_codes(out.model, parts.test.data);
    out.report = metrics::macro_metrics(metrics::confusion(parts.test.data.y, predicted),
                                        {.halved_f1 = opt.halved_f1});

    io::write_file_atomic(opt.model, gbdt::serialize(out.model).dump() + "\n");
    if (!opt.report.empty()) io::write_file_atomic(opt.report, metrics::to_json(out.report).dump(2) + "\n");

    log << "train windows: " << parts.train.data.y.size() << "  test windows: " << parts.test.data.y.size() << "\n";
    log << "learning_rate=" << io::format_double(hp.learning_rate) << " max_depth=" << hp.max_depth
        << " n_estimators=" << hp.n_estimators << "\n\n";
    log << metrics::to_text(out.report);
    return out;
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
    fs::path model;
    fs::path trip;
    fs::path out;  // optional copy of the report
    Overlap overlap = Overlap::None;
};

struct WindowPrediction {
    std::string id;
    double start_t = 0.0;
    BehaviorClass predicted = BehaviorClass::Normal;
    BehaviorClass rule_label = BehaviorClass::Normal;
    std::string triggers;
};

/// Rule inputs that individually reach at least Intermediate severity.
inline std::string triggering_features(const pipeline::FeatureVector& raw) {
    const double overspeed = raw[pipeline::feature_index("overspeed_p95_pct")];
    label::SteeringEvents events{static_cast<int>(raw[pipeline::feature_index("weave_count")]),
                                 raw[pipeline::feature_index("max_impulse")]};
    std::vector<std::string> parts;
    std::ostringstream s;
    s << std::fixed << std::setprecision(1);
    if (label::overspeed_severity(overspeed) != BehaviorClass::Normal) {
        s << "overspeed=" << overspeed << "%";
        parts.push_back(s.str());
        s.str("");
    }
    if (label::weave_count_severity(events.weave_count) != BehaviorClass::Normal) {
        parts.push_back("weaves=" + std::to_string(events.weave_count) + "/min");
    }
    if (label::impulse_severity(events) != BehaviorClass::Normal) {
        s << std::setprecision(2) << "impulse=" << events.max_impulse;
        parts.push_back(s.str());
    }
    if (parts.empty()) return "-";
    std::string joined;
    for (const auto& p : parts) joined += (joined.empty() ? "" : " ") + p;
    return joined;
}

inline std::string prediction_table(const std::vector<WindowPrediction>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "window" << std::right << std::setw(9) << "start_s" << std::setw(5) << "P.C"
        << "  " << std::left << std::setw(13) << "class" << std::right << std::setw(5) << "rule" << "  triggers\n";
    out << std::fixed << std::setprecision(1);
    for (const auto& r : rows) {
        out << std::left << std::setw(8) << r.id << std::right << std::setw(9) << r.start_t << std::setw(5)
            << to_code(r.predicted) << "  " << std::left << std::setw(13) << to_string(r.predicted) << std::right
            << std::setw(5) << to_code(r.rule_label) << "  " << r.triggers << "\n";
    }
    return out.str();
}

inline std::vector<WindowPrediction> cmd_predict(const PredictOptions& opt, std::ostream& log) {
    detail::require_file(opt.model, "model");
    detail::require_file(opt.trip, "trip");
    if (!opt.out.empty()) detail::require_output(opt.out, "output");

    gbdt::GbdtModel model;
    try {
        model = gbdt::deserialize(nlohmann::ordered_json::parse(io::read_file(opt.model)));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(opt.model.string() + ": " + e.what());
    }
    model.check_schema(pipeline::kNumFeatures, pipeline::pipeline_feature_hash());
    if (!model.normalization) throw InputError("model carries no normalization parameters");

    const auto trip = io::read_trip(opt.trip);
    const auto rows = pipeline::process_trip(trip, opt.trip.stem().string(), stride_for(opt.overlap));

    std::vector<WindowPrediction> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto normalized = pipeline::apply_normalizer(*model.normalization, rows[i].features);
        out.push_back({"W" + std::to_string(i + 1), rows[i].start_t, model.predict(normalized), rows[i].label,
                       triggering_features(rows[i].features)});
    }
    const auto table = prediction_table(out);
    if (!opt.out.empty()) io::write_file_atomic(opt.out, table);
    log << table;
    return out;
}

// ---------------------------------------------------------------- rules

inline void cmd_rules(const fs::path& out, std::ostream& log) {
    const auto text = label::rules_json().dump(2) + "\n";
    if (!out.empty()) {
        detail::require_output(out, "rules output");
        io::write_file_atomic(out, text);
    }
    log << text;
}

}  // namespace drive_profiler::commands
