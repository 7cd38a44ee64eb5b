#pragma once

// Config-driven studies over DINN and baseline fits, with table assembly and
// report/CSV output.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dinnlab/baselines.hpp"
#include "dinnlab/dinn.hpp"

namespace dinnlab {

struct ExperimentConfig {
    std::string id;  // range | noise | data | architecture | lr | missing | suite | real
    std::uint64_t seed = 0;
    std::string model = "covid_sird";
    std::size_t points = 100;
    // Base DINN settings; studies override the swept field. The iteration
    // budget here is the desk-scale one unless full_scale is set.
    TrainConfig train = default_train();
    bool full_scale = false;
    long full_iterations = 400000;
    // Worker threads for independent runs (0: hardware concurrency).
    unsigned threads = 0;

    std::vector<double> pcts{0, 100, 1000, 10000, 100000};
    std::vector<double> noise_levels{0.01, 0.05, 0.10, 0.20};
    NoiseModel noise_model = NoiseModel::Multiplicative;
    std::vector<std::size_t> sizes{10, 20, 100, 1000};
    std::size_t eval_points = 1000;
    std::vector<double> baseline_x0{0.1, 0.1, 0.1};
    std::pair<double, double> baseline_bounds{0.0, 2.0};
    std::vector<std::string> baseline_fit{"I"};
    std::vector<std::size_t> layers{2, 4, 8, 12};
    std::vector<std::size_t> neurons{10, 20, 64};
    std::vector<double> lrs{1e-5, 1e-6, 1e-8};
    std::vector<long> steps{100, 1000, 10000};
    double loss_threshold = 4e-4;
    std::vector<std::string> hidden{"R"};
    bool fix_known = true;
    std::vector<std::string> diseases;  // empty: every registry model but sir
    std::string csv_path;
    int subsample_every = 10;
    double train_cutoff = 280;

    static TrainConfig default_train();
    long budget() const { return full_scale ? full_iterations : train.iterations; }
};

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults; unknown keys are a Config error.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

// One table cell is a number, a string or null (undefined metric / censored).
struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::ordered_json>> rows;
};

struct PlotSeries {
    std::string name;
    Trajectory truth;
    Trajectory prediction;
};

struct RunRecord {
    std::string label;
    nlohmann::ordered_json key;  // swept settings identifying the run
    FitReport report;
    std::string error;           // non-empty when the run failed (e.g. divergence)
};

struct ExperimentReport {
    std::string experiment_id;
    nlohmann::ordered_json config;
    std::vector<RunRecord> runs;
    std::vector<Table> tables;
    std::vector<PlotSeries> plots;
    std::uint64_t seed = 0;
};

struct ErrorSummary {
    double best = 0.0;
    double worst = 0.0;
    double median = 0.0;
};

// Min, max and median (mean of the two central values for even counts).
ErrorSummary summarize_errors(std::vector<double> errors);

std::string code_version();

// Deterministic serialization: no wall-clock values.
nlohmann::ordered_json to_json(const ExperimentReport& r);
// Wall times per run, kept apart so report.json stays reproducible.
nlohmann::ordered_json timings_json(const ExperimentReport& r);

// Writes report.json, timings.json, one CSV per table and plot_<name>.csv
// (t, then <c>_true and <c>_pred per compartment) into dir.
void write_outputs(const ExperimentReport& r, const std::string& dir);
void write_table_csv(const std::string& path, const Table& t);
void write_plot_csv(const std::string& path, const PlotSeries& p);

ExperimentReport run_range_study(const ExperimentConfig& cfg);
ExperimentReport run_noise_study(const ExperimentConfig& cfg);
ExperimentReport run_data_study(const ExperimentConfig& cfg);
ExperimentReport run_architecture_study(const ExperimentConfig& cfg);
ExperimentReport run_lr_study(const ExperimentConfig& cfg);
ExperimentReport run_missing_data(const ExperimentConfig& cfg);
ExperimentReport run_disease_suite(const ExperimentConfig& cfg);
ExperimentReport run_real_forecast(const ExperimentConfig& cfg);

// Dispatches on cfg.id; UnknownName for anything else.
ExperimentReport run_experiment(const ExperimentConfig& cfg);
std::vector<std::string> experiment_ids();

} // namespace dinnlab
