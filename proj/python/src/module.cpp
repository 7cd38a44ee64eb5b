#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "dinnlab/analytic.hpp"
#include "dinnlab/baselines.hpp"
#include "dinnlab/dataset.hpp"
#include "dinnlab/dinn.hpp"
#include "dinnlab/error.hpp"
#include "dinnlab/experiments.hpp"
#include "dinnlab/integrate.hpp"
#include "dinnlab/models.hpp"

namespace py = pybind11;
using namespace dinnlab;

namespace {

py::array_t<double> to_array(const std::vector<std::vector<double>>& rows) {
    const auto n = static_cast<py::ssize_t>(rows.size());
    const auto d = static_cast<py::ssize_t>(rows.empty() ? 0 : rows.front().size());
    py::array_t<double> out({n, d});
    auto v = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i)
        for (py::ssize_t j = 0; j < d; ++j) v(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return out;
}

std::vector<double> params_or_default(const CompartmentModel& m, const std::optional<std::vector<double>>& p) {
    if (!p) return m.true_values();
    if (p->size() != m.params.size()) throw Error(ErrorKind::Domain, "expected " + std::to_string(m.params.size()) + " parameters");
    return *p;
}

Dataset make_dataset(const CompartmentModel& m, std::size_t points, std::optional<double> horizon, double noise,
                     std::uint64_t seed, const std::vector<std::string>& hidden) {
    auto ds = synthesize(m, m.true_values(), m.default_y0, points, horizon.value_or(m.horizon),
                         {noise, seed, NoiseModel::Multiplicative});
    return hidden.empty() ? ds : mask_compartments(ds, hidden);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "dinnlab core bindings";

    static py::exception<Error> exc(m, "DinnlabError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(exc.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    m.attr("__version__") = code_version();

    m.def("model_names", [] { return registry_names(); });
    m.def("model_json", [](const std::string& name) { return to_json(registry_get(name)).dump(); });

    m.def(
        "integrate",
        [](const std::string& name, const std::vector<double>& times, std::optional<std::vector<double>> params,
           std::optional<std::vector<double>> y0) {
            const auto& mod = registry_get(name);
            const auto p = params_or_default(mod, params);
            const auto y = y0.value_or(mod.default_y0);
            Trajectory tr;
            {
                py::gil_scoped_release nogil;
                tr = integrate(mod, p, y, times);
            }
            return to_array(tr.states);
        },
        py::arg("model"), py::arg("times"), py::arg("params") = py::none(), py::arg("y0") = py::none());

    m.def(
        "rhs",
        [](const std::string& name, const std::vector<double>& y, std::optional<std::vector<double>> params, double t) {
            const auto& mod = registry_get(name);
            return rhs_eval(mod, t, y, params_or_default(mod, params));
        },
        py::arg("model"), py::arg("y"), py::arg("params") = py::none(), py::arg("t") = 0.0);

    m.def(
        "synthesize",
        [](const std::string& name, std::size_t points, std::optional<double> horizon, double noise, std::uint64_t seed) {
            const auto& mod = registry_get(name);
            const auto ds = make_dataset(mod, points, horizon, noise, seed, {});
            return py::make_tuple(ds.times, to_array(ds.observations));
        },
        py::arg("model"), py::arg("points") = 100, py::arg("horizon") = py::none(), py::arg("noise") = 0.0,
        py::arg("seed") = 0);

    m.def("final_size", &analytic::final_size, py::arg("S0"), py::arg("I0"), py::arg("beta"), py::arg("alpha"));
    m.def("i_max", &analytic::i_max, py::arg("S0"), py::arg("I0"), py::arg("beta"), py::arg("alpha"));
    m.def("ratio_from_final_size", &analytic::ratio_from_final_size, py::arg("S0"), py::arg("S_inf"), py::arg("N"));
    m.def("make_range", &make_range, py::arg("true_value"), py::arg("pct"));
    m.def("param_error", &param_error, py::arg("found"), py::arg("actual"));

    m.def(
        "train_json",
        [](const std::string& name, const std::string& cfg_json, std::size_t points, std::optional<double> horizon,
           double noise, const std::vector<std::string>& hidden) {
            const auto& mod = registry_get(name);
            const auto tc = train_config_from_json(nlohmann::json::parse(cfg_json));
            std::string out;
            {
                py::gil_scoped_release nogil;
                const auto ds = make_dataset(mod, points, horizon, noise, tc.seed + 1, hidden);
                const auto truth = integrate(mod, mod.true_values(), mod.default_y0, ds.times);
                const auto res = train(mod, ds, tc, truth);
                nlohmann::ordered_json j;
                j["model"] = mod.name;
                j["config"] = to_json(tc);
                j["fit"] = to_json(res.report);
                out = j.dump();
            }
            return out;
        },
        py::arg("model"), py::arg("config"), py::arg("points") = 100, py::arg("horizon") = py::none(),
        py::arg("noise") = 0.0, py::arg("hidden") = std::vector<std::string>{});

    m.def(
        "fit_baseline_json",
        [](const std::string& name, const std::string& method, std::size_t points, double noise, std::uint64_t seed,
           std::optional<std::vector<double>> x0, const std::vector<std::string>& fit_compartments) {
            const auto& mod = registry_get(name);
            std::string out;
            {
                py::gil_scoped_release nogil;
                const auto ds = make_dataset(mod, points, std::nullopt, noise, seed, {});
                const auto truth = integrate(mod, mod.true_values(), mod.default_y0, ds.times);
                const auto free = mod.learnable_names();
                const auto start = x0.value_or(std::vector<double>(free.size(), 0.1));
                const auto prob = make_problem(mod, ds, free, start, Bounds(free.size(), {0.0, 2.0}), fit_compartments);
                OptResult r;
                if (method == "nelder_mead") {
                    r = fit_nelder_mead(prob);
                } else if (method == "gauss_newton") {
                    r = fit_gauss_newton(prob);
                } else {
                    throw Error(ErrorKind::Config, "unknown method '" + method + "'");
                }
                out = to_json(baseline_report(prob, r, method, truth)).dump();
            }
            return out;
        },
        py::arg("model"), py::arg("method") = "gauss_newton", py::arg("points") = 100, py::arg("noise") = 0.0,
        py::arg("seed") = 0, py::arg("x0") = py::none(), py::arg("fit_compartments") = std::vector<std::string>{});

    m.def(
        "experiment_json",
        [](const std::string& id, const std::string& cfg_json) {
            auto cfg = experiment_config_from_json(nlohmann::json::parse(cfg_json));
            cfg.id = id;
            std::string out;
            {
                py::gil_scoped_release nogil;
                out = to_json(run_experiment(cfg)).dump();
            }
            return out;
        },
        py::arg("id"), py::arg("config") = "{}");

    m.def("experiment_ids", &experiment_ids);
}
