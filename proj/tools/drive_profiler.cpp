// drive_profiler: simulate trips, build window features, tune, train and
// predict driver behavior classes.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "drive_profiler/commands.hpp"

namespace dp = drive_profiler;
namespace cmd = drive_profiler::commands;

int main(int argc, char** argv) {
    CLI::App app{"Driver behavior profiling: synthetic telemetry, rule labels and a GBDT classifier"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value file mirroring the command-line flags");

    // Shared flags live on the top-level app; subcommands fall through to them.
    std::uint64_t seed = 42;
    std::string trips_dir = "trips";
    std::string features = "features.csv";
    std::string model = "model.json";
    std::string report;
    int trials = 30;
    double split = 0.7;
    std::string overlap;
    app.add_option("--seed", seed, "random seed")->envname("DRIVE_PROFILER_SEED");
    app.add_option("--trips-dir", trips_dir, "directory of .jsonl trip files");
    app.add_option("--features", features, "features CSV");
    app.add_option("--model", model, "model JSON");
    app.add_option("--report", report, "evaluation report JSON");
    app.add_option("--trials", trials, "random-search trial count");
    app.add_option("--split", split, "train fraction of the train/test split");
    app.add_option("--overlap", overlap, "windowing: 'train' (50% overlap) or 'none'")
        ->check(CLI::IsMember({"train", "none"}));

    auto* simulate = app.add_subcommand("simulate", "generate synthetic trips")->fallthrough();
    cmd::SimulateOptions sim_opt;
    simulate->add_option("--trips", sim_opt.trips, "number of trips");
    simulate->add_option("--duration", sim_opt.duration_s, "trip duration in seconds");
    simulate->add_option("--segments", sim_opt.segments_per_trip, "behavior segments per trip");

    auto* prepare = app.add_subcommand("prepare", "resample, window, label and extract features")->fallthrough();

    auto* tune = app.add_subcommand("tune", "random-search hyperparameters")->fallthrough();
    cmd::TuneOptions tune_opt;
    std::string best_params = "best_params.json";
    std::string trial_log = "trials.csv";
    tune->add_option("--out", best_params, "best-params JSON output");
    tune->add_option("--trial-log", trial_log, "per-trial CSV log");
    tune->add_flag("--record-timing", tune_opt.record_timing, "write wall-clock seconds into the trial log");
    tune->add_flag("--group-by-trip", tune_opt.by_trip, "split by trip instead of by window");

    auto* train = app.add_subcommand("train", "train on the 70% split and evaluate on the rest")->fallthrough();
    cmd::TrainOptions train_opt;
    std::string params;
    double learning_rate = train_opt.hyperparameters.learning_rate;
    int max_depth = train_opt.hyperparameters.max_depth;
    int n_estimators = train_opt.hyperparameters.n_estimators;
    train->add_option("--params", params, "best-params JSON from `tune`");
    train->add_option("--learning-rate", learning_rate);
    train->add_option("--max-depth", max_depth);
    train->add_option("--n-estimators", n_estimators);
    train->add_flag("--group-by-trip", train_opt.by_trip, "split by trip instead of by window");
    train->add_flag("--halved-f1", train_opt.halved_f1, "per-class F1 without the factor 2");

    auto* predict = app.add_subcommand("predict", "per-window predictions for one trip")->fallthrough();
    cmd::PredictOptions predict_opt;
    std::string trip;
    std::string predict_out;
    predict->add_option("--trip", trip, "trip .jsonl file")->required();
    predict->add_option("--out", predict_out, "also write the report here");

    auto* rules = app.add_subcommand("rules", "print the labeling rule tables as JSON");
    std::string rules_out;
    rules->add_option("--out", rules_out, "also write rules.json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) {
            sim_opt.trips_dir = trips_dir;
            sim_opt.seed = seed;
            cmd::cmd_simulate(sim_opt, std::cout);
        } else if (*prepare) {
            cmd::PrepareOptions opt{trips_dir, features, cmd::overlap_from_string(overlap.empty() ? "train" : overlap)};
            cmd::cmd_prepare(opt, std::cout);
        } else if (*tune) {
            tune_opt.features = features;
            tune_opt.best_params = best_params;
            tune_opt.trial_log = trial_log;
            tune_opt.trials = trials;
            tune_opt.split = split;
            tune_opt.seed = seed;
            cmd::cmd_tune(tune_opt, std::cout);
        } else if (*train) {
            train_opt.features = features;
            train_opt.model = model;
            train_opt.report = report;
            train_opt.params = params;
            train_opt.split = split;
            train_opt.seed = seed;
            train_opt.hyperparameters = dp::gbdt::Hyperparameters::make(learning_rate, max_depth, n_estimators);
            cmd::cmd_train(train_opt, std::cout);
        } else if (*predict) {
            predict_opt.model = model;
            predict_opt.trip = trip;
            predict_opt.out = predict_out;
            predict_opt.overlap = cmd::overlap_from_string(overlap.empty() ? "none" : overlap);
            cmd::cmd_predict(predict_opt, std::cout);
        } else if (*rules) {
            cmd::cmd_rules(rules_out, std::cout);
        }
    } catch (const dp::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
