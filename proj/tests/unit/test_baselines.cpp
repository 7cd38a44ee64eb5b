#include <doctest.h>

#include "dinnlab/baselines.hpp"
#include "dinnlab/error.hpp"

using namespace dinnlab;

TEST_CASE("Nelder-Mead finds the bottom of a quadratic bowl") {
    auto f = [](const std::vector<double>& x) {
        return (x[0] - 1.0) * (x[0] - 1.0) + 3.0 * (x[1] + 0.5) * (x[1] + 0.5) + 0.5 * x[0] * x[1];
    };
    const auto r = nelder_mead(f, {0.0, 0.0}, {{-5, 5}, {-5, 5}});
    // stationary point of the bowl
    const double x1 = (-3.0 - 0.5) / (12.0 - 0.25) * 2.0;
    const double x0 = 1.0 - 0.25 * x1;
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(x0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(x1).epsilon(1e-5));
}

TEST_CASE("Nelder-Mead stays in the box") {
    auto f = [](const std::vector<double>& x) { return (x[0] - 3.0) * (x[0] - 3.0); };
    const auto r = nelder_mead(f, {0.5}, {{0.0, 1.0}});
    CHECK(r.x[0] <= 1.0);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    auto nan_start = [](const std::vector<double>&) { return std::nan(""); };
    try {
        nelder_mead(nan_start, {0.5}, {{0.0, 1.0}});
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BadStart);
    }
}

TEST_CASE("Gauss-Newton solves a linear problem") {
    // r = A x - b with a unique least squares solution
    auto r = [](const std::vector<double>& x) {
        return std::vector<double>{x[0] + 2 * x[1] - 5, 3 * x[0] - x[1] - 1, x[0] + x[1] - 3};
    };
    for (bool damped : {true, false}) {
        GaussNewtonConfig cfg;
        cfg.damped = damped;
        const auto res = gauss_newton(r, {0.0, 0.0}, {{-10, 10}, {-10, 10}}, cfg);
        // normal equations: [[11, 0], [0, 6]] x = [11, 12]
        CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(res.x[1] == doctest::Approx(2.0).epsilon(1e-6));
    }
}

TEST_CASE("plain Gauss-Newton stalls on a rank-deficient Jacobian") {
    // only x0 + x1 enters the residual
    auto r = [](const std::vector<double>& x) {
        const double s = x[0] + x[1];
        return std::vector<double>{s - 1.0, 2.0 * s - 3.0};
    };
    GaussNewtonConfig cfg;
    cfg.damped = false;
    try {
        gauss_newton(r, {0.0, 0.0}, {{-5, 5}, {-5, 5}}, cfg);
        FAIL("expected stall");
    } catch (const StallError& e) {
        CHECK(e.kind() == ErrorKind::Stall);
        CHECK(e.best_x() == std::vector<double>{0.0, 0.0});
        CHECK(e.best_value() == doctest::Approx(10.0));
    }
    cfg.damped = true;
    const auto res = gauss_newton(r, {0.0, 0.0}, {{-5, 5}, {-5, 5}}, cfg);
    CHECK(res.x[0] + res.x[1] == doctest::Approx(1.4).epsilon(1e-6));
}

TEST_CASE("flat residual stops on the gradient test") {
    auto r = [](const std::vector<double>&) { return std::vector<double>{1.0, 2.0}; };
    const auto res = gauss_newton(r, {0.3}, {{0, 1}});
    CHECK(res.converged);
    CHECK(res.reason == "gradient norm");
}

TEST_CASE("both baselines recover SIRD from complete clean data") {
    const auto& m = registry_get("covid_sird");
    const auto ds = synthesize(m, m.true_values(), m.default_y0, 40, m.horizon, {});
    const auto truth = integrate(m, m.true_values(), m.default_y0, ds.times);
    const std::vector<std::string> free{"alpha", "beta", "gamma"};
    const auto prob = make_problem(m, ds, free, {0.1, 0.1, 0.1}, Bounds(3, {0.0, 2.0}));
    const auto gn = fit_gauss_newton(prob);
    CHECK(gn.x[0] == doctest::Approx(0.191).epsilon(1e-5));
    CHECK(gn.x[1] == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(gn.x[2] == doctest::Approx(0.0294).epsilon(1e-5));
    const auto nm = fit_nelder_mead(prob);
    CHECK(nm.x[0] == doctest::Approx(0.191).epsilon(1e-3));
    const auto rep = baseline_report(prob, gn, "gauss_newton", truth);
    CHECK(rep.method == "gauss_newton");
    CHECK(rep.error_nn.empty());
    CHECK(rep.found("beta") == doctest::Approx(0.05).epsilon(1e-5));
    REQUIRE(rep.sse_truth.has_value());
    CHECK(*rep.sse_truth < 1e-4);
}

TEST_CASE("problem validation") {
    const auto& m = registry_get("covid_sird");
    const auto ds = synthesize(m, m.true_values(), m.default_y0, 10, m.horizon, {});
    CHECK_THROWS_AS(make_problem(m, ds, {"zeta"}, {0.1}, Bounds(1, {0.0, 1.0})), Error);
    CHECK_THROWS_AS(make_problem(m, ds, {"alpha"}, {3.0}, Bounds(1, {0.0, 1.0})), Error);
    const auto p = make_problem(m, ds, {"alpha"}, {0.1}, Bounds(1, {0.0, 1.0}), {"I"});
    CHECK(p.residuals({0.191}).size() == ds.size());
    CHECK(p.full_params({0.3})[0] == 0.3);
}
