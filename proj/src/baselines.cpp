#include "dinnlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "dinnlab/error.hpp"

namespace dinnlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_bounds(const std::vector<double>& x0, const Bounds& bounds, const char* who) {
    if (bounds.size() != x0.size()) throw Error(ErrorKind::Domain, std::string(who) + ": bounds size mismatch");
    for (std::size_t i = 0; i < x0.size(); ++i) {
        if (!(bounds[i].first <= bounds[i].second))
            throw Error(ErrorKind::Domain, std::string(who) + ": lower bound above upper bound");
        if (!(x0[i] >= bounds[i].first && x0[i] <= bounds[i].second))
            throw Error(ErrorKind::Domain, std::string(who) + ": x0 outside bounds");
    }
}

void project(std::vector<double>& x, const Bounds& b) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], b[i].first, b[i].second);
}

double sum_squares(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

bool all_finite(const std::vector<double>& r) {
    return std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); });
}

} // namespace

OptResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                      const Bounds& bounds, const NelderMeadConfig& cfg) {
    check_bounds(x0, bounds, "nelder_mead");
    const std::size_t n = x0.size();
    OptResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : kInf;
    };

    std::vector<std::vector<double>> pts{x0};
    const double f0 = eval(x0);
    if (!std::isfinite(f0)) throw Error(ErrorKind::BadStart, "nelder_mead: objective not finite at x0");
    std::vector<double> vals{f0};
    for (std::size_t i = 0; i < n; ++i) {
        auto p = x0;
        p[i] = p[i] != 0.0 ? p[i] * (1.0 + cfg.rel_step) : cfg.zero_step;
        project(p, bounds);
        if (p[i] == x0[i]) p[i] = x0[i] - (p[i] != 0.0 ? p[i] * cfg.rel_step : cfg.zero_step);
        project(p, bounds);
        vals.push_back(eval(p));
        pts.push_back(std::move(p));
    }

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        std::vector<std::vector<double>> p2;
        std::vector<double> v2;
        for (auto k : order) {
            p2.push_back(pts[k]);
            v2.push_back(vals[k]);
        }
        pts = std::move(p2);
        vals = std::move(v2);
    };
    auto along = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = c[i] + t * (w[i] - c[i]);
        project(p, bounds);
        return p;
    };

    sort_simplex();
    for (; res.iterations < cfg.max_iterations; ++res.iterations) {
        double diameter = 0.0;
        for (std::size_t k = 1; k <= n; ++k)
            for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::abs(pts[k][i] - pts[0][i]));
        if (diameter < cfg.diameter_tol) {
            res.converged = true;
            res.reason = "simplex diameter";
            break;
        }
        if (std::isfinite(vals[n]) && vals[n] - vals[0] < cfg.spread_tol) {
            res.converged = true;
            res.reason = "objective spread";
            break;
        }

        std::vector<double> c(n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) c[i] += pts[k][i] / static_cast<double>(n);

        const auto xr = along(c, pts[n], -1.0);
        const double fr = eval(xr);
        if (fr < vals[0]) {
            const auto xe = along(c, pts[n], -2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if (fr < vals[n - 1]) {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            const bool outside = fr < vals[n];
            const auto xc = outside ? along(c, xr, 0.5) : along(c, pts[n], 0.5);
            const double fc = eval(xc);
            if (fc < (outside ? fr : vals[n])) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    pts[k] = along(pts[0], pts[k], 0.5);
                    vals[k] = eval(pts[k]);
                }
            }
        }
        sort_simplex();
    }
    if (!res.converged) res.reason = "iteration limit";
    res.x = pts[0];
    res.value = vals[0];
    return res;
}

OptResult gauss_newton(const ResidualFn& rfn, std::vector<double> x0, const Bounds& bounds,
                       const GaussNewtonConfig& cfg) {
    check_bounds(x0, bounds, "gauss_newton");
    const auto n = static_cast<Eigen::Index>(x0.size());
    OptResult res;
    auto eval = [&](const std::vector<double>& x, std::vector<double>& r) {
        ++res.evaluations;
        try {
            r = rfn(x);
        } catch (const Error&) {
            return kInf;
        }
        return all_finite(r) ? sum_squares(r) : kInf;
    };

    std::vector<double> x = std::move(x0), r;
    double fx = eval(x, r);
    if (!std::isfinite(fx)) throw Error(ErrorKind::BadStart, "gauss_newton: residuals not finite at x0");
    const auto m = static_cast<Eigen::Index>(r.size());
    double lambda = cfg.damped ? cfg.lambda0 : 0.0;
    double nu = 2.0;
    bool need_jacobian = true;
    Eigen::MatrixXd J(m, n);
    Eigen::VectorXd g(n);
    Eigen::MatrixXd A(n, n);
    std::vector<double> trial_r;

    for (; res.iterations < cfg.max_iterations; ++res.iterations) {
        if (need_jacobian) {
            for (Eigen::Index j = 0; j < n; ++j) {
                auto xp = x;
                const auto ju = static_cast<std::size_t>(j);
                double h = cfg.fd_rel_step * std::max(1.0, std::abs(x[ju]));
                // Step backwards at the upper bound so the probe stays feasible.
                if (xp[ju] + h > bounds[ju].second) h = -h;
                xp[ju] += h;
                std::vector<double> rp;
                if (!std::isfinite(eval(xp, rp)))
                    throw StallError("gauss_newton: Jacobian probe failed", x, fx);
                for (Eigen::Index i = 0; i < m; ++i)
                    J(i, j) = (rp[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)]) / h;
            }
            const Eigen::Map<const Eigen::VectorXd> rv(r.data(), m);
            g = J.transpose() * rv;
            A = J.transpose() * J;
            need_jacobian = false;
            if (2.0 * g.norm() < cfg.grad_tol) {
                res.converged = true;
                res.reason = "gradient norm";
                break;
            }
        }

        Eigen::MatrixXd M = A;
        M.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        Eigen::VectorXd delta;
        bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
        if (solved) {
            const Eigen::VectorXd D = ldlt.vectorD();
            solved = D.minCoeff() > 1e-14 * D.maxCoeff();
        }
        if (solved) {
            delta = ldlt.solve(-g);
            solved = delta.allFinite();
        }
        if (!solved) {
            if (!cfg.damped || lambda >= cfg.lambda_max)
                throw StallError("gauss_newton: singular normal equations", x, fx);
            lambda = std::max(lambda * nu, 1e-12);
            nu *= 2.0;
            continue;
        }

        std::vector<double> xt(x.size());
        for (Eigen::Index j = 0; j < n; ++j) xt[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] + delta(j);
        project(xt, bounds);
        double step = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) step = std::max(step, std::abs(xt[j] - x[j]));
        if (step < cfg.step_tol) {
            res.converged = true;
            res.reason = "step size";
            break;
        }
        Eigen::VectorXd d(n);
        for (Eigen::Index j = 0; j < n; ++j) d(j) = xt[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j)];
        const double ft = eval(xt, trial_r);

        if (!cfg.damped) {
            // Plain Gauss-Newton: halve the clipped step until the objective drops.
            double ftry = ft;
            std::vector<double> xtry = xt;
            for (int k = 0; k < 40 && !(ftry < fx); ++k) {
                for (std::size_t j = 0; j < x.size(); ++j) xtry[j] = x[j] + 0.5 * (xtry[j] - x[j]);
                ftry = eval(xtry, trial_r);
            }
            if (!(ftry < fx)) {
                res.reason = "no descent";
                break;
            }
            x = std::move(xtry);
            fx = ftry;
            r = trial_r;
            need_jacobian = true;
            continue;
        }

        // Gain ratio: actual reduction over the reduction the linear model predicts.
        const double predicted = -(2.0 * g.dot(d) + d.dot(A * d));
        const double rho = predicted > 0.0 ? (fx - ft) / predicted : -1.0;
        if (std::isfinite(ft) && ft < fx && rho > 0.0) {
            x = std::move(xt);
            fx = ft;
            r = trial_r;
            need_jacobian = true;
            lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;
        } else {
            if (lambda >= cfg.lambda_max) {
                res.reason = "damping limit";
                break;
            }
            lambda = std::min(cfg.lambda_max, std::max(lambda, 1e-12) * nu);
            nu *= 2.0;
        }
    }
    if (res.reason.empty()) res.reason = "iteration limit";
    res.x = std::move(x);
    res.value = fx;
    return res;
}

std::vector<double> LsqProblem::full_params(const std::vector<double>& x) const {
    auto p = model->true_values();
    for (std::size_t k = 0; k < free_params.size(); ++k) p[model->param_index(free_params[k])] = x[k];
    return p;
}

std::vector<double> LsqProblem::residuals(const std::vector<double>& x) const {
    const auto p = full_params(x);
    const auto traj = integrate(*model, p, y0, ds.times, integrator);
    std::vector<double> r;
    r.reserve(ds.observed_count());
    for (std::size_t c = 0; c < ds.dim(); ++c) {
        if (!fit_compartments.empty() &&
            std::find(fit_compartments.begin(), fit_compartments.end(), ds.compartments[c]) == fit_compartments.end())
            continue;
        const double s = ds.scale[c] > 0.0 ? ds.scale[c] : 1.0;
        if (ds.mask[c]) {
            for (std::size_t i = 0; i < ds.size(); ++i) r.push_back((traj.states[i][c] - ds.observations[i][c]) / s);
        } else if (ds.init_only[c]) {
            r.push_back((traj.states[0][c] - ds.observations[0][c]) / s);
        }
    }
    return r;
}

double LsqProblem::objective(const std::vector<double>& x) const {
    try {
        const auto r = residuals(x);
        return all_finite(r) ? sum_squares(r) : kInf;
    } catch (const Error&) {
        return kInf;
    }
}

LsqProblem make_problem(const CompartmentModel& model, const Dataset& ds, std::vector<std::string> free_params,
                        std::vector<double> x0, Bounds bounds, std::vector<std::string> fit_compartments) {
    if (ds.dim() != model.dim()) throw Error(ErrorKind::Domain, "make_problem: dataset does not match model");
    if (ds.size() < 1) throw Error(ErrorKind::Domain, "make_problem: empty dataset");
    if (free_params.size() != x0.size()) throw Error(ErrorKind::Domain, "make_problem: x0 size mismatch");
    for (const auto& name : free_params) (void)model.param_index(name);
    check_bounds(x0, bounds, "make_problem");
    LsqProblem prob;
    prob.model = &model;
    prob.ds = ds;
    prob.free_params = std::move(free_params);
    prob.x0 = std::move(x0);
    prob.bounds = std::move(bounds);
    prob.y0 = ds.observations.front();
    for (const auto& name : fit_compartments) (void)model.compartment_index(name);
    prob.fit_compartments = std::move(fit_compartments);
    return prob;
}

OptResult fit_nelder_mead(const LsqProblem& prob, const NelderMeadConfig& cfg) {
    return nelder_mead([&](const std::vector<double>& x) { return prob.objective(x); }, prob.x0, prob.bounds, cfg);
}

OptResult fit_gauss_newton(const LsqProblem& prob, const GaussNewtonConfig& cfg) {
    return gauss_newton([&](const std::vector<double>& x) { return prob.residuals(x); }, prob.x0, prob.bounds, cfg);
}

FitReport baseline_report(const LsqProblem& prob, const OptResult& res, const std::string& method,
                          const std::optional<Trajectory>& truth) {
    FitReport rep;
    rep.method = method;
    const auto& model = *prob.model;
    for (std::size_t k = 0; k < prob.free_params.size(); ++k) {
        const auto& spec = model.params[model.param_index(prob.free_params[k])];
        rep.found_params.emplace_back(spec.name, res.x[k]);
        rep.true_params.emplace_back(spec.name, spec.true_value);
        rep.param_errors.push_back(param_error(res.x[k], spec.true_value));
    }
    rep.iterations = res.iterations;
    rep.final_loss = res.value;
    if (!res.converged) rep.failure = res.reason;
    Trajectory reference;
    if (truth) {
        reference = *truth;
    } else {
        reference.model_name = prob.ds.model_name;
        reference.compartments = prob.ds.compartments;
        reference.times = prob.ds.times;
        reference.states = prob.ds.observations;
    }
    try {
        const auto regenerated = integrate(model, prob.full_params(res.x), reference.states.front(), reference.times);
        rep.error_learnable = relative_errors(regenerated, reference);
        double sse = 0.0;
        for (std::size_t i = 0; i < reference.size(); ++i)
            for (std::size_t c = 0; c < reference.compartments.size(); ++c) {
                const double d = regenerated.states[i][c] - reference.states[i][c];
                sse += d * d;
            }
        rep.sse_truth = sse;
    } catch (const Error& e) {
        rep.error_learnable.assign(model.dim(), std::nullopt);
        rep.failure = std::string("regeneration failed: ") + e.what();
    }
    return rep;
}

} // namespace dinnlab
