// dinn-lab: command line front end for data generation, training, baseline
// fits, experiments and the closed-form SIR summaries.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dinnlab/analytic.hpp"
#include "dinnlab/baselines.hpp"
#include "dinnlab/dataset.hpp"
#include "dinnlab/dinn.hpp"
#include "dinnlab/error.hpp"
#include "dinnlab/experiments.hpp"
#include "dinnlab/models.hpp"

namespace fs = std::filesystem;
using namespace dinnlab;
using ojson = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
    try {
        return nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Config, path + ": " + e.what());
    }
}

void write_json(const fs::path& path, const ojson& j) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    os << j.dump(2) << '\n';
}

fs::path out_dir(const Common& c) {
    fs::create_directories(c.out);
    return fs::path(c.out);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    try {
        return j.contains(key) ? j.at(key).get<T>() : fallback;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
    }
}

// Dataset section shared by generate, train and fit-baseline: either a CSV
// (`data`, optional `sidecar`) or synthetic settings.
struct DataSetup {
    Dataset ds;
    std::optional<Trajectory> truth;
};

DataSetup make_data(const CompartmentModel& m, const nlohmann::json& cfg, std::uint64_t seed) {
    DataSetup s;
    if (cfg.contains("data")) {
        s.ds = read_dataset_csv(cfg.at("data").get<std::string>(), m.name);
        if (cfg.contains("sidecar")) {
            std::ifstream in(cfg.at("sidecar").get<std::string>());
            if (!in) throw Error(ErrorKind::Io, "cannot open sidecar");
            s.ds = apply_sidecar(s.ds, nlohmann::json::parse(in));
        }
        return s;
    }
    const auto p = m.true_values();
    const auto points = get_or<std::size_t>(cfg, "points", 100);
    const auto horizon = get_or<double>(cfg, "horizon", m.horizon);
    NoiseSpec noise{get_or<double>(cfg, "noise", 0.0), seed + 1, NoiseModel::Multiplicative};
    if (get_or<std::string>(cfg, "noise_model", "multiplicative") == "additive") noise.model = NoiseModel::Additive;
    s.ds = synthesize(m, p, m.default_y0, points, horizon, noise);
    s.truth = integrate(m, p, m.default_y0, s.ds.times);
    const auto hidden = get_or<std::vector<std::string>>(cfg, "hidden", {});
    if (!hidden.empty()) s.ds = mask_compartments(s.ds, hidden);
    return s;
}

int cmd_models_list(bool as_json) {
    if (as_json) {
        auto arr = nlohmann::json::array();
        for (const auto& n : registry_names()) arr.push_back(to_json(registry_get(n)));
        std::cout << arr.dump(2) << '\n';
        return 0;
    }
    for (const auto& n : registry_names()) {
        const auto& m = registry_get(n);
        std::cout << n << "\t" << m.title << "\t" << m.dim() << " compartments, " << m.learnable_names().size()
                  << " learnable parameters\n";
    }
    return 0;
}

int cmd_generate(const Common& c) {
    const auto cfg = load_config(c.config_path);
    const auto& m = registry_get(get_or<std::string>(cfg, "model", "covid_sird"));
    const auto seed = c.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 0));
    const auto d = make_data(m, cfg, seed);
    const auto dir = out_dir(c);
    write_dataset_csv((dir / "dataset.csv").string(), d.ds);
    write_json(dir / "dataset.json", mask_sidecar(d.ds));
    if (d.truth) write_csv((dir / "truth.csv").string(), *d.truth);
    std::cout << "wrote " << d.ds.size() << " rows to " << (dir / "dataset.csv").string() << '\n';
    return 0;
}

int cmd_train(const Common& c) {
    const auto cfg = load_config(c.config_path);
    const auto& m = registry_get(get_or<std::string>(cfg, "model", "covid_sird"));
    TrainConfig tc = cfg.contains("train") ? train_config_from_json(cfg.at("train")) : TrainConfig{};
    if (c.seed) tc.seed = *c.seed;
    const auto d = make_data(m, cfg, tc.seed);
    auto res = train(m, d.ds, tc, d.truth);
    const auto dir = out_dir(c);
    ojson rep;
    rep["model"] = m.name;
    rep["config"] = to_json(tc);
    rep["fit"] = to_json(res.report);
    write_json(dir / "report.json", rep);
    write_json(dir / "checkpoint.json", checkpoint_json(res.model, tc));
    write_json(dir / "timings.json", {{"wall_time_s", res.report.wall_time}});
    {
        std::ofstream os(dir / "loss.csv");
        os << "iteration,loss\n";
        for (const auto& [it, l] : res.report.loss_history) os << it << ',' << l << '\n';
    }
    Trajectory reference;
    if (d.truth) {
        reference = *d.truth;
    } else {
        reference.model_name = m.name;
        reference.compartments = m.compartments;
        reference.times = d.ds.times;
        reference.states = d.ds.observations;
    }
    write_plot_csv((dir / "plot_fit.csv").string(), {"fit", reference, res.model.predict(reference.times)});
    for (const auto& [name, v] : res.report.found_params) std::cout << name << " = " << v << '\n';
    std::cout << "final loss " << res.report.final_loss << " after " << res.report.iterations << " iterations\n";
    return 0;
}

int cmd_fit_baseline(const Common& c) {
    const auto cfg = load_config(c.config_path);
    const auto& m = registry_get(get_or<std::string>(cfg, "model", "covid_sird"));
    const auto seed = c.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 0));
    const auto d = make_data(m, cfg, seed);
    const auto method = get_or<std::string>(cfg, "method", "nelder_mead");
    const auto free = get_or<std::vector<std::string>>(cfg, "params", m.learnable_names());
    const auto x0 = get_or<std::vector<double>>(cfg, "x0", std::vector<double>(free.size(), 0.1));
    const auto b = get_or<std::vector<double>>(cfg, "bounds", {0.0, 2.0});
    if (b.size() != 2) throw Error(ErrorKind::Config, "bounds needs two numbers");
    const auto prob = make_problem(m, d.ds, free, x0, Bounds(free.size(), {b[0], b[1]}),
                                   get_or<std::vector<std::string>>(cfg, "fit_compartments", {}));
    OptResult r;
    if (method == "nelder_mead") {
        r = fit_nelder_mead(prob);
    } else if (method == "gauss_newton") {
        GaussNewtonConfig gc;
        gc.damped = get_or<bool>(cfg, "damped", true);
        r = fit_gauss_newton(prob, gc);
    } else {
        throw Error(ErrorKind::Config, "unknown method '" + method + "' (expected nelder_mead or gauss_newton)");
    }
    const auto rep = baseline_report(prob, r, method, d.truth);
    const auto dir = out_dir(c);
    ojson j;
    j["model"] = m.name;
    j["fit"] = to_json(rep);
    j["evaluations"] = r.evaluations;
    j["stop_reason"] = r.reason;
    write_json(dir / "report.json", j);
    for (const auto& [name, v] : rep.found_params) std::cout << name << " = " << v << '\n';
    std::cout << "sse " << r.value << " (" << r.reason << ")\n";
    return 0;
}

int cmd_experiment(const Common& c, const std::string& id, bool full_scale, std::optional<unsigned> threads) {
    ExperimentConfig ec = experiment_config_from_json(load_config(c.config_path));
    ec.id = id;
    if (c.seed) ec.seed = *c.seed;
    if (full_scale) ec.full_scale = true;
    if (threads) ec.threads = *threads;
    const auto rep = run_experiment(ec);
    write_outputs(rep, out_dir(c).string());
    for (const auto& t : rep.tables) std::cout << "table " << t.name << ": " << t.rows.size() << " rows\n";
    std::cout << "wrote " << (fs::path(c.out) / "report.json").string() << '\n';
    return 0;
}

int cmd_analytic(const Common& c) {
    const auto cfg = load_config(c.config_path);
    const auto S0 = get_or<double>(cfg, "S0", 999.0);
    const auto I0 = get_or<double>(cfg, "I0", 1.0);
    const auto beta = get_or<double>(cfg, "beta", 0.002);
    const auto alpha = get_or<double>(cfg, "alpha", 0.5);
    const auto s = analytic::summarize(S0, I0, beta, alpha);
    nlohmann::json j = analytic::to_json(s);
    j["inputs"] = {{"S0", S0}, {"I0", I0}, {"beta", beta}, {"alpha", alpha}};
    const auto dir = out_dir(c);
    std::ofstream(dir / "report.json") << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
    return 0;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "JSON config file");
    sub->add_option("--seed", c.seed, "Random seed (overrides the config)");
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dinn-lab: disease-informed neural networks and classical baselines"};
    app.require_subcommand(1);
    Common common;

    auto* models = app.add_subcommand("models", "Model registry");
    auto* list = models->add_subcommand("list", "List registered models");
    bool as_json = false;
    list->add_flag("--json", as_json, "Print full model descriptions as JSON");
    models->require_subcommand(1);

    auto* generate = app.add_subcommand("generate", "Synthesize a dataset");
    add_common(generate, common);
    auto* trn = app.add_subcommand("train", "Train a DINN");
    add_common(trn, common);
    auto* fit = app.add_subcommand("fit-baseline", "Fit parameters with Nelder-Mead or Gauss-Newton");
    add_common(fit, common);
    auto* expt = app.add_subcommand("experiment", "Run a study");
    add_common(expt, common);
    std::string exp_id;
    bool full_scale = false;
    std::optional<unsigned> threads;
    expt->add_option("id", exp_id, "range|noise|data|architecture|lr|missing|suite|real")->required();
    expt->add_flag("--full-scale", full_scale, "Use the full-length iteration budget");
    expt->add_option("--threads", threads, "Concurrent runs (0: all cores)");
    auto* an = app.add_subcommand("analytic", "Closed-form SIR final size and peak");
    add_common(an, common);

    CLI11_PARSE(app, argc, argv);
    try {
        if (list->parsed()) return cmd_models_list(as_json);
        if (generate->parsed()) return cmd_generate(common);
        if (trn->parsed()) return cmd_train(common);
        if (fit->parsed()) return cmd_fit_baseline(common);
        if (expt->parsed()) return cmd_experiment(common, exp_id, full_scale, threads);
        if (an->parsed()) return cmd_analytic(common);
    } catch (const Error& e) {
        std::cerr << "dinn-lab: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "dinn-lab: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
