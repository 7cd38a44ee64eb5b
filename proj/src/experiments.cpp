#include "dinnlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "dinnlab/csv.hpp"
#include "dinnlab/error.hpp"

#ifndef DINNLAB_VERSION
#define DINNLAB_VERSION "unknown"
#endif

namespace dinnlab {

using ojson = nlohmann::ordered_json;

TrainConfig ExperimentConfig::default_train() {
    TrainConfig t;
    t.iterations = 50000;
    t.activation = Activation::Tanh;
    t.param_range_pct = 1000.0;
    t.log_every = 1000;
    return t;
}

namespace {

const char* to_string(NoiseModel m) { return m == NoiseModel::Multiplicative ? "multiplicative" : "additive"; }

NoiseModel noise_model_from_string(const std::string& s) {
    if (s == "multiplicative") return NoiseModel::Multiplicative;
    if (s == "additive") return NoiseModel::Additive;
    throw Error(ErrorKind::Config, "unknown noise model '" + s + "'");
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

ojson num_or_null(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson found_or_truth(const FitReport& r, const ParamSpec& spec) {
    for (const auto& [k, v] : r.found_params)
        if (k == spec.name) return v;
    return spec.true_value;
}

ojson error_of(const FitReport& r, const ParamSpec& spec) {
    for (std::size_t k = 0; k < r.found_params.size(); ++k)
        if (r.found_params[k].first == spec.name) return r.param_errors[k];
    return nullptr;
}

double mean_param_error(const FitReport& r) {
    if (r.param_errors.empty()) return 0.0;
    return std::accumulate(r.param_errors.begin(), r.param_errors.end(), 0.0) /
           static_cast<double>(r.param_errors.size());
}

std::vector<const ParamSpec*> table_params(const CompartmentModel& m) {
    std::vector<const ParamSpec*> out;
    for (const auto& p : m.params)
        if (!p.known) out.push_back(&p);
    return out;
}

void append_param_columns(std::vector<std::string>& header, const CompartmentModel& m) {
    for (const auto* p : table_params(m)) header.push_back(p->name);
    for (const auto* p : table_params(m)) header.push_back(p->name + "_error_pct");
}

void append_param_cells(std::vector<ojson>& row, const CompartmentModel& m, const FitReport& r) {
    for (const auto* p : table_params(m)) row.push_back(found_or_truth(r, *p));
    for (const auto* p : table_params(m)) row.push_back(r.found_params.empty() ? ojson(0.0) : error_of(r, *p));
}

void append_error_columns(std::vector<std::string>& header, const CompartmentModel& m, bool with_nn = true) {
    if (with_nn)
        for (const auto& c : m.compartments) header.push_back("error_nn_" + c);
    for (const auto& c : m.compartments) header.push_back("error_learnable_" + c);
}

void append_error_cells(std::vector<ojson>& row, const CompartmentModel& m, const FitReport& r, bool with_nn = true) {
    auto cells = [&](const std::vector<std::optional<double>>& v) {
        for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(c < v.size() ? num_or_null(v[c]) : ojson(nullptr));
    };
    if (with_nn) cells(r.error_nn);
    cells(r.error_learnable);
}

ExperimentReport start_report(const ExperimentConfig& cfg, const std::string& id) {
    ExperimentReport rep;
    rep.experiment_id = id;
    rep.config = to_json(cfg);
    rep.seed = cfg.seed;
    return rep;
}

TrainConfig run_train_config(const ExperimentConfig& cfg) {
    TrainConfig t = cfg.train;
    t.iterations = cfg.budget();
    t.seed = cfg.seed;
    return t;
}

struct Outcome {
    FitReport report;
    std::optional<Trajectory> prediction;
    std::string error;
};

Outcome train_run(const CompartmentModel& model, const Dataset& ds, const TrainConfig& tc,
                  const std::optional<Trajectory>& truth) {
    Outcome o;
    try {
        auto res = train(model, ds, tc, truth);
        o.report = std::move(res.report);
        o.prediction = res.model.predict(truth ? truth->times : ds.times);
    } catch (const Error& e) {
        o.report.diverged = e.kind() == ErrorKind::Divergence;
        o.report.failure = e.what();
        o.error = std::string(dinnlab::to_string(e.kind())) + ": " + e.what();
    }
    return o;
}

void add_run(ExperimentReport& rep, std::string label, ojson key, Outcome&& o, const Trajectory& truth) {
    if (o.prediction) rep.plots.push_back({label, truth, std::move(*o.prediction)});
    rep.runs.push_back({std::move(label), std::move(key), std::move(o.report), std::move(o.error)});
}

std::string fmt(double v) { return csv::format_number(v); }

struct Synthetic {
    Dataset ds;
    Trajectory truth;
};

Synthetic clean_data(const CompartmentModel& m, std::size_t points) {
    const auto p = m.true_values();
    Synthetic s;
    s.ds = synthesize(m, p, m.default_y0, points, m.horizon, {});
    s.truth = integrate(m, p, m.default_y0, s.ds.times);
    return s;
}

} // namespace

ojson to_json(const ExperimentConfig& c) {
    ojson j;
    j["id"] = c.id;
    j["seed"] = c.seed;
    j["model"] = c.model;
    j["points"] = c.points;
    j["train"] = to_json(c.train);
    j["full_scale"] = c.full_scale;
    j["full_iterations"] = c.full_iterations;
    j["pcts"] = c.pcts;
    j["noise_levels"] = c.noise_levels;
    j["noise_model"] = to_string(c.noise_model);
    j["sizes"] = c.sizes;
    j["eval_points"] = c.eval_points;
    j["baseline_x0"] = c.baseline_x0;
    j["baseline_bounds"] = {c.baseline_bounds.first, c.baseline_bounds.second};
    j["baseline_fit"] = c.baseline_fit;
    j["layers"] = c.layers;
    j["neurons"] = c.neurons;
    j["lrs"] = c.lrs;
    j["steps"] = c.steps;
    j["loss_threshold"] = c.loss_threshold;
    j["hidden"] = c.hidden;
    j["fix_known"] = c.fix_known;
    j["diseases"] = c.diseases;
    j["csv_path"] = c.csv_path;
    j["subsample_every"] = c.subsample_every;
    j["train_cutoff"] = c.train_cutoff;
    return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig c) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "experiment config must be an object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "id") c.id = v.get<std::string>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "model") c.model = v.get<std::string>();
            else if (key == "points") c.points = v.get<std::size_t>();
            else if (key == "train") c.train = train_config_from_json(v, c.train);
            else if (key == "full_scale") c.full_scale = v.get<bool>();
            else if (key == "full_iterations") c.full_iterations = v.get<long>();
            else if (key == "threads") c.threads = v.get<unsigned>();
            else if (key == "pcts") c.pcts = v.get<std::vector<double>>();
            else if (key == "noise_levels") c.noise_levels = v.get<std::vector<double>>();
            else if (key == "noise_model") c.noise_model = noise_model_from_string(v.get<std::string>());
            else if (key == "sizes") c.sizes = v.get<std::vector<std::size_t>>();
            else if (key == "eval_points") c.eval_points = v.get<std::size_t>();
            else if (key == "baseline_x0") c.baseline_x0 = v.get<std::vector<double>>();
            else if (key == "baseline_bounds") {
                const auto b = v.get<std::vector<double>>();
                if (b.size() != 2) throw Error(ErrorKind::Config, "baseline_bounds needs two numbers");
                c.baseline_bounds = {b[0], b[1]};
            } else if (key == "baseline_fit") c.baseline_fit = v.get<std::vector<std::string>>();
            else if (key == "layers") c.layers = v.get<std::vector<std::size_t>>();
            else if (key == "neurons") c.neurons = v.get<std::vector<std::size_t>>();
            else if (key == "lrs") c.lrs = v.get<std::vector<double>>();
            else if (key == "steps") c.steps = v.get<std::vector<long>>();
            else if (key == "loss_threshold") c.loss_threshold = v.get<double>();
            else if (key == "hidden") c.hidden = v.get<std::vector<std::string>>();
            else if (key == "fix_known") c.fix_known = v.get<bool>();
            else if (key == "diseases") c.diseases = v.get<std::vector<std::string>>();
            else if (key == "csv_path") c.csv_path = v.get<std::string>();
            else if (key == "subsample_every") c.subsample_every = v.get<int>();
            else if (key == "train_cutoff") c.train_cutoff = v.get<double>();
            else throw Error(ErrorKind::Config, "unknown experiment config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad experiment config: ") + e.what());
    }
    return c;
}

ErrorSummary summarize_errors(std::vector<double> e) {
    if (e.empty()) throw Error(ErrorKind::Domain, "summarize_errors: no values");
    std::sort(e.begin(), e.end());
    const std::size_t n = e.size();
    const double median = n % 2 == 1 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
    return {e.front(), e.back(), median};
}

std::string code_version() { return DINNLAB_VERSION; }

ojson to_json(const ExperimentReport& r) {
    ojson j;
    j["experiment_id"] = r.experiment_id;
    j["provenance"] = {{"seed", r.seed}, {"code_version", code_version()}};
    j["config"] = r.config;
    auto& runs = j["runs"] = ojson::array();
    for (const auto& run : r.runs) {
        ojson e;
        e["label"] = run.label;
        e["key"] = run.key;
        e["report"] = to_json(run.report);
        if (!run.error.empty()) e["error"] = run.error;
        runs.push_back(std::move(e));
    }
    auto& tables = j["tables"] = ojson::array();
    for (const auto& t : r.tables) {
        ojson e;
        e["name"] = t.name;
        e["header"] = t.header;
        e["rows"] = ojson::array();
        for (const auto& row : t.rows) e["rows"].push_back(row);
        tables.push_back(std::move(e));
    }
    return j;
}

ojson timings_json(const ExperimentReport& r) {
    ojson j = ojson::array();
    for (const auto& run : r.runs) j.push_back({{"label", run.label}, {"wall_time_s", run.report.wall_time}});
    return j;
}

void write_table_csv(const std::string& path, const Table& t) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    csv::write_row(os, t.header);
    for (const auto& row : t.rows) {
        std::vector<std::string> cells;
        for (const auto& c : row) {
            if (c.is_null()) cells.emplace_back("");
            else if (c.is_string()) cells.push_back(c.get<std::string>());
            else if (c.is_boolean()) cells.emplace_back(c.get<bool>() ? "1" : "0");
            else if (c.is_number_integer()) cells.push_back(std::to_string(c.get<long long>()));
            else cells.push_back(fmt(c.get<double>()));
        }
        csv::write_row(os, cells);
    }
}

void write_outputs(const ExperimentReport& r, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir + "': " + ec.message());
    const std::filesystem::path base(dir);
    {
        std::ofstream os(base / "report.json");
        if (!os) throw Error(ErrorKind::Io, "cannot write report.json in '" + dir + "'");
        os << to_json(r).dump(2) << '\n';
    }
    {
        std::ofstream os(base / "timings.json");
        os << timings_json(r).dump(2) << '\n';
    }
    for (const auto& t : r.tables) write_table_csv((base / (t.name + ".csv")).string(), t);
    for (const auto& p : r.plots) write_plot_csv((base / ("plot_" + p.name + ".csv")).string(), p);
}

void write_plot_csv(const std::string& path, const PlotSeries& p) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    std::vector<std::string> header{"t"};
    for (const auto& c : p.truth.compartments) {
        header.push_back(c + "_true");
        header.push_back(c + "_pred");
    }
    csv::write_row(os, header);
    for (std::size_t i = 0; i < p.truth.size(); ++i) {
        std::vector<double> row{p.truth.times[i]};
        for (std::size_t c = 0; c < p.truth.compartments.size(); ++c) {
            row.push_back(p.truth.states[i][c]);
            row.push_back(i < p.prediction.size() ? p.prediction.states[i][c] : std::nan(""));
        }
        csv::write_numbers(os, row);
    }
}

ExperimentReport run_range_study(const ExperimentConfig& cfg) {
    const auto& m = registry_get(cfg.model);
    auto rep = start_report(cfg, "range");
    const auto data = clean_data(m, cfg.points);
    std::vector<Outcome> out(cfg.pcts.size());
    parallel_for(out.size(), cfg.threads, [&](std::size_t i) {
        TrainConfig tc = run_train_config(cfg);
        tc.param_range_pct = cfg.pcts[i];
        out[i] = train_run(m, data.ds, tc, data.truth);
    });
    Table t{"range", {"pct"}, {}};
    append_param_columns(t.header, m);
    append_error_columns(t.header, m);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<ojson> row{cfg.pcts[i]};
        append_param_cells(row, m, out[i].report);
        append_error_cells(row, m, out[i].report);
        t.rows.push_back(std::move(row));
        add_run(rep, "pct_" + fmt(cfg.pcts[i]), {{"pct", cfg.pcts[i]}}, std::move(out[i]), data.truth);
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

ExperimentReport run_noise_study(const ExperimentConfig& cfg) {
    const auto& m = registry_get(cfg.model);
    auto rep = start_report(cfg, "noise");
    const auto p = m.true_values();
    const auto clean = clean_data(m, cfg.points);
    std::vector<Outcome> out(cfg.noise_levels.size());
    parallel_for(out.size(), cfg.threads, [&](std::size_t i) {
        const NoiseSpec noise{cfg.noise_levels[i], cfg.seed + 1, cfg.noise_model};
        const auto ds = synthesize(m, p, m.default_y0, cfg.points, m.horizon, noise);
        out[i] = train_run(m, ds, run_train_config(cfg), clean.truth);
    });
    Table t{"noise", {"level"}, {}};
    append_param_columns(t.header, m);
    append_error_columns(t.header, m);
    t.header.push_back("max_error_nn");
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<ojson> row{cfg.noise_levels[i]};
        append_param_cells(row, m, out[i].report);
        append_error_cells(row, m, out[i].report);
        std::optional<double> worst;
        for (const auto& e : out[i].report.error_nn)
            if (e) worst = std::max(worst.value_or(0.0), *e);
        row.push_back(num_or_null(worst));
        t.rows.push_back(std::move(row));
        add_run(rep, "noise_" + fmt(cfg.noise_levels[i]), {{"level", cfg.noise_levels[i]}}, std::move(out[i]),
                clean.truth);
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

ExperimentReport run_data_study(const ExperimentConfig& cfg) {
    const auto& m = registry_get(cfg.model);
    auto rep = start_report(cfg, "data");
    const auto p = m.true_values();
    // Every method is scored against the same dense reference grid.
    const auto eval_grid = uniform_grid(0.0, m.horizon, std::max<std::size_t>(cfg.eval_points, 2));
    const Trajectory truth = integrate(m, p, m.default_y0, eval_grid);
    const auto free = m.learnable_names();
    if (cfg.baseline_x0.size() != free.size())
        throw Error(ErrorKind::Config, "baseline_x0 needs one value per learnable parameter");
    const Bounds bounds(free.size(), cfg.baseline_bounds);

    const std::vector<std::string> methods{"dinn", "nelder_mead", "gauss_newton"};
    const std::size_t cells = cfg.sizes.size() * methods.size();
    std::vector<Outcome> out(cells);
    parallel_for(cells, cfg.threads, [&](std::size_t i) {
        const std::size_t n = cfg.sizes[i / methods.size()];
        const auto& method = methods[i % methods.size()];
        const auto ds = synthesize(m, p, m.default_y0, n, m.horizon, {});
        if (method == "dinn") {
            out[i] = train_run(m, ds, run_train_config(cfg), truth);
            return;
        }
        const auto prob = make_problem(m, ds, free, cfg.baseline_x0, bounds, cfg.baseline_fit);
        try {
            const OptResult r = method == "nelder_mead" ? fit_nelder_mead(prob) : fit_gauss_newton(prob);
            out[i].report = baseline_report(prob, r, method, truth);
            out[i].prediction = integrate(m, prob.full_params(r.x), m.default_y0, truth.times);
        } catch (const StallError& e) {
            OptResult r;
            r.x = e.best_x();
            r.value = e.best_value();
            r.reason = e.what();
            out[i].report = baseline_report(prob, r, method, truth);
            out[i].error = std::string("stall: ") + e.what();
        } catch (const Error& e) {
            out[i].report.method = method;
            out[i].report.failure = e.what();
            out[i].error = std::string(dinnlab::to_string(e.kind())) + ": " + e.what();
        }
    });

    Table t{"data", {"points", "method"}, {}};
    append_param_columns(t.header, m);
    t.header.push_back("mean_error_pct");
    t.header.push_back("sse_truth");
    append_error_columns(t.header, m, false);
    for (std::size_t i = 0; i < cells; ++i) {
        const std::size_t n = cfg.sizes[i / methods.size()];
        const auto& method = methods[i % methods.size()];
        out[i].report.method = method;
        std::vector<ojson> row{n, method};
        append_param_cells(row, m, out[i].report);
        row.push_back(mean_param_error(out[i].report));
        row.push_back(num_or_null(out[i].report.sse_truth));
        append_error_cells(row, m, out[i].report, false);
        t.rows.push_back(std::move(row));
        add_run(rep, method + "_" + std::to_string(n), {{"points", n}, {"method", method}}, std::move(out[i]), truth);
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

ExperimentReport run_architecture_study(const ExperimentConfig& cfg) {
    const auto& m = registry_get(cfg.model);
    auto rep = start_report(cfg, "architecture");
    const auto data = clean_data(m, cfg.points);
    const std::size_t cells = cfg.layers.size() * cfg.neurons.size();
    std::vector<Outcome> out(cells);
    parallel_for(cells, cfg.threads, [&](std::size_t i) {
        TrainConfig tc = run_train_config(cfg);
        tc.hidden_layers = cfg.layers[i / cfg.neurons.size()];
        tc.width = cfg.neurons[i % cfg.neurons.size()];
        out[i] = train_run(m, data.ds, tc, data.truth);
    });
    Table t{"architecture", {"layers", "neurons"}, {}};
    append_error_columns(t.header, m);
    for (std::size_t i = 0; i < cells; ++i) {
        const auto L = cfg.layers[i / cfg.neurons.size()];
        const auto W = cfg.neurons[i % cfg.neurons.size()];
        std::vector<ojson> row{L, W};
        append_error_cells(row, m, out[i].report);
        t.rows.push_back(std::move(row));
        add_run(rep, "arch_" + std::to_string(L) + "x" + std::to_string(W), {{"layers", L}, {"neurons", W}},
                std::move(out[i]), data.truth);
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

ExperimentReport run_lr_study(const ExperimentConfig& cfg) {
    const auto& m = registry_get(cfg.model);
    auto rep = start_report(cfg, "lr");
    const auto data = clean_data(m, cfg.points);
    const std::size_t cells = cfg.lrs.size() * cfg.steps.size();
    std::vector<Outcome> out(cells);
    parallel_for(cells, cfg.threads, [&](std::size_t i) {
        TrainConfig tc = run_train_config(cfg);
        tc.lr_min = cfg.lrs[i / cfg.steps.size()];
        tc.step_size_up = cfg.steps[i % cfg.steps.size()];
        tc.loss_threshold = cfg.loss_threshold;
        out[i] = train_run(m, data.ds, tc, data.truth);
    });
    Table t{"lr", {"lr_min", "step_size_up", "iterations_to_threshold", "censored", "final_loss"}, {}};
    for (std::size_t i = 0; i < cells; ++i) {
        const double lr = cfg.lrs[i / cfg.steps.size()];
        const long step = cfg.steps[i % cfg.steps.size()];
        const auto& r = out[i].report;
        const bool censored = !r.threshold_iteration.has_value();
        t.rows.push_back({lr, step, censored ? ojson(nullptr) : ojson(*r.threshold_iteration), censored,
                          out[i].error.empty() ? ojson(r.final_loss) : ojson(nullptr)});
        add_run(rep, "lr_" + fmt(lr) + "_step_" + std::to_string(step), {{"lr_min", lr}, {"step_size_up", step}},
                std::move(out[i]), data.truth);
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

ExperimentReport run_missing_data(const ExperimentConfig& cfg) {
    const auto& m = registry_get(cfg.model);
    auto rep = start_report(cfg, "missing");
    const auto data = clean_data(m, cfg.points);
    const auto ds = mask_compartments(data.ds, cfg.hidden);
    TrainConfig tc = run_train_config(cfg);
    tc.fix_all = cfg.fix_known;
    auto o = train_run(m, ds, tc, data.truth);
    Table t{"missing", {"compartment", "hidden", "error_nn", "error_learnable"}, {}};
    for (std::size_t c = 0; c < m.dim(); ++c) {
        const bool hid = std::find(cfg.hidden.begin(), cfg.hidden.end(), m.compartments[c]) != cfg.hidden.end();
        auto cell = [&](const std::vector<std::optional<double>>& v) {
            return c < v.size() ? num_or_null(v[c]) : ojson(nullptr);
        };
        t.rows.push_back({m.compartments[c], hid, cell(o.report.error_nn), cell(o.report.error_learnable)});
    }
    add_run(rep, "missing", {{"hidden", cfg.hidden}, {"fix_known", cfg.fix_known}}, std::move(o), data.truth);
    rep.tables.push_back(std::move(t));
    return rep;
}

ExperimentReport run_disease_suite(const ExperimentConfig& cfg) {
    auto rep = start_report(cfg, "suite");
    std::vector<std::string> names = cfg.diseases;
    if (names.empty())
        for (const auto& n : registry_names())
            if (n != "sir") names.push_back(n);
    for (const auto& n : names) (void)registry_get(n);

    std::vector<Outcome> out(names.size());
    std::vector<Synthetic> data(names.size());
    parallel_for(names.size(), cfg.threads, [&](std::size_t i) {
        const auto& m = registry_get(names[i]);
        data[i] = clean_data(m, cfg.points);
        TrainConfig tc = run_train_config(cfg);
        tc.param_range_pct.reset();  // published search ranges
        out[i] = train_run(m, data[i].ds, tc, data[i].truth);
    });

    Table summary{"suite", {"disease", "parameters", "best", "worst", "median", "initial_loss", "final_loss"}, {}};
    Table per_param{"suite_params", {"disease", "parameter", "actual", "found", "error_pct"}, {}};
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& r = out[i].report;
        std::vector<ojson> row{names[i], r.param_errors.size()};
        if (!r.param_errors.empty() && out[i].error.empty()) {
            const auto s = summarize_errors(r.param_errors);
            row.insert(row.end(), {s.best, s.worst, s.median});
        } else {
            row.insert(row.end(), {nullptr, nullptr, nullptr});
        }
        row.push_back(r.loss_history.empty() ? ojson(nullptr) : ojson(r.loss_history.front().second));
        row.push_back(out[i].error.empty() ? ojson(r.final_loss) : ojson(nullptr));
        summary.rows.push_back(std::move(row));
        for (std::size_t k = 0; k < r.found_params.size(); ++k)
            per_param.rows.push_back(
                {names[i], r.found_params[k].first, r.true_params[k].second, r.found_params[k].second, r.param_errors[k]});
        add_run(rep, names[i], {{"disease", names[i]}}, std::move(out[i]), data[i].truth);
    }
    rep.tables.push_back(std::move(summary));
    rep.tables.push_back(std::move(per_param));
    return rep;
}

ExperimentReport run_real_forecast(const ExperimentConfig& cfg) {
    auto rep = start_report(cfg, "real");
    const auto split = ingest_real_csv(cfg.csv_path, cfg.subsample_every, cfg.train_cutoff);
    if (split.train.size() < 2) throw Error(ErrorKind::Ingestion, "real forecast: fewer than 2 training points");
    // The model's fixed N becomes the closed population of the first row.
    CompartmentModel m = registry_get("covid_sird");
    const auto& first = split.train.observations.front();
    const double population = std::accumulate(first.begin(), first.end(), 0.0);
    for (auto& p : m.params)
        if (p.name == "N") p.true_value = population;
    m.population = population;

    TrainConfig tc = run_train_config(cfg);
    Trajectory train_truth;
    train_truth.model_name = m.name;
    train_truth.compartments = m.compartments;
    train_truth.times = split.train.times;
    train_truth.states = split.train.observations;

    Outcome o;
    std::vector<std::optional<double>> holdout_nn(m.dim()), holdout_learnable(m.dim());
    Trajectory all = train_truth;
    for (std::size_t i = 0; i < split.holdout.size(); ++i) {
        all.times.push_back(split.holdout.times[i]);
        all.states.push_back(split.holdout.observations[i]);
    }
    try {
        auto res = train(m, split.train, tc, train_truth);
        o.report = std::move(res.report);
        o.prediction = res.model.predict(all.times);
        if (split.holdout.size() > 0) {
            Trajectory hold;
            hold.model_name = m.name;
            hold.compartments = m.compartments;
            hold.times = split.holdout.times;
            hold.states = split.holdout.observations;
            holdout_nn = relative_errors(res.model.predict(hold.times), hold);
            std::vector<double> grid{split.train.times.front()};
            grid.insert(grid.end(), hold.times.begin(), hold.times.end());
            auto regen = integrate(m, res.model.params(), first, grid);
            regen.times.erase(regen.times.begin());
            regen.states.erase(regen.states.begin());
            holdout_learnable = relative_errors(regen, hold);
        }
    } catch (const Error& e) {
        o.report.failure = e.what();
        o.error = std::string(dinnlab::to_string(e.kind())) + ": " + e.what();
    }

    Table errs{"real_holdout", {"compartment", "holdout_error_nn", "holdout_error_learnable"}, {}};
    for (std::size_t c = 0; c < m.dim(); ++c)
        errs.rows.push_back({m.compartments[c], num_or_null(holdout_nn[c]), num_or_null(holdout_learnable[c])});
    Table params{"real_params", {"parameter", "found", "reference"}, {}};
    for (const auto& [name, v] : o.report.found_params)
        params.rows.push_back({name, v, m.params[m.param_index(name)].true_value});
    add_run(rep, "real",
            {{"first_date", split.first_date},
             {"train_points", split.train.size()},
             {"holdout_points", split.holdout.size()},
             {"population", population}},
            std::move(o), all);
    rep.tables.push_back(std::move(errs));
    rep.tables.push_back(std::move(params));
    return rep;
}

std::vector<std::string> experiment_ids() {
    return {"range", "noise", "data", "architecture", "lr", "missing", "suite", "real"};
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.id == "range") return run_range_study(cfg);
    if (cfg.id == "noise") return run_noise_study(cfg);
    if (cfg.id == "data") return run_data_study(cfg);
    if (cfg.id == "architecture") return run_architecture_study(cfg);
    if (cfg.id == "lr") return run_lr_study(cfg);
    if (cfg.id == "missing") return run_missing_data(cfg);
    if (cfg.id == "suite") return run_disease_suite(cfg);
    if (cfg.id == "real") return run_real_forecast(cfg);
    std::string valid;
    for (const auto& id : experiment_ids()) valid += (valid.empty() ? "" : ", ") + id;
    throw Error(ErrorKind::UnknownName, "unknown experiment '" + cfg.id + "' (valid: " + valid + ")");
}

} // namespace dinnlab
