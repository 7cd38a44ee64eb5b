#pragma once

// Classical least-squares fits of ODE parameters: Nelder-Mead simplex and
// damped Gauss-Newton, both over trajectories from the adaptive integrator.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dinnlab/dataset.hpp"
#include "dinnlab/dinn.hpp"
#include "dinnlab/integrate.hpp"
#include "dinnlab/models.hpp"

namespace dinnlab {

using Bounds = std::vector<std::pair<double, double>>;

struct OptResult {
    std::vector<double> x;
    double value = 0.0;  // objective (sum of squares) at x
    long iterations = 0;
    long evaluations = 0;
    bool converged = false;
    std::string reason;
};

struct NelderMeadConfig {
    long max_iterations = 20000;
    double diameter_tol = 1e-10;
    double spread_tol = 1e-12;
    // Initial vertices: x0 with coordinate i scaled by (1 + rel_step), or
    // set to zero_step when it is 0.
    double rel_step = 0.05;
    double zero_step = 0.00025;
};

// Minimizes f inside the box; vertices are projected onto it. Throws BadStart
// if f(x0) is not finite. Non-finite trial values are treated as +inf.
OptResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                      const Bounds& bounds, const NelderMeadConfig& cfg = {});

struct GaussNewtonConfig {
    long max_iterations = 500;
    double grad_tol = 1e-10;
    double step_tol = 1e-12;
    bool damped = true;  // false: plain Gauss-Newton with step halving
    double lambda0 = 1e-3;
    double lambda_max = 1e16;
    double fd_rel_step = 1e-6;
};

using ResidualFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Least squares on r(x) with a forward-difference Jacobian (step
// fd_rel_step * max(1, |x_i|)); steps are clipped into the box. Throws BadStart
// if r(x0) is not finite and StallError when the damped normal equations stay
// singular at lambda_max.
OptResult gauss_newton(const ResidualFn& r, std::vector<double> x0, const Bounds& bounds,
                       const GaussNewtonConfig& cfg = {});

struct LsqProblem {
    const CompartmentModel* model = nullptr;
    Dataset ds;
    std::vector<std::string> free_params;
    std::vector<double> x0;
    Bounds bounds;
    // Initial state for integration; defaults to the first observation row.
    std::vector<double> y0;
    IntegratorConfig integrator{1e-10, 1e-12, 1000000, std::nullopt};
    // Compartments entering the objective; empty means every visible one.
    std::vector<std::string> fit_compartments;

    // Residuals (model - obs) / scale over the visible entries (init-only
    // compartments add their t0 entry). Throws what the integrator throws.
    std::vector<double> residuals(const std::vector<double>& x) const;
    // Sum of squared residuals; +inf when integration fails.
    double objective(const std::vector<double>& x) const;
    // Full parameter vector with the free slots replaced by x.
    std::vector<double> full_params(const std::vector<double>& x) const;
};

// Validates names, x0 inside the bounds and the dataset shape.
LsqProblem make_problem(const CompartmentModel& model, const Dataset& ds, std::vector<std::string> free_params,
                        std::vector<double> x0, Bounds bounds, std::vector<std::string> fit_compartments = {});

OptResult fit_nelder_mead(const LsqProblem& prob, const NelderMeadConfig& cfg = {});
OptResult fit_gauss_newton(const LsqProblem& prob, const GaussNewtonConfig& cfg = {});

// Baseline result in the DINN report schema. error_nn stays empty; the
// trajectory metrics come from re-integrating with the found parameters.
FitReport baseline_report(const LsqProblem& prob, const OptResult& res, const std::string& method,
                          const std::optional<Trajectory>& truth = std::nullopt);

} // namespace dinnlab
