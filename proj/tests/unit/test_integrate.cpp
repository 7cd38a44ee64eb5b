#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "dinnlab/error.hpp"
#include "dinnlab/integrate.hpp"
#include "helpers.hpp"

using namespace dinnlab;

TEST_CASE("exponential decay") {
    RhsFn<double> f = [](double, std::span<const double> y, std::span<const double>, std::span<double> dy) {
        dy[0] = -y[0];
    };
    const std::vector<double> y0{1.0}, grid{0.0, 1.0};
    const auto out = integrate_system(f, {}, y0, grid);
    CHECK(out[1][0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("SIR without transmission decays linearly") {
    const auto& m = registry_get("sir");
    const std::vector<double> p{0.0, 0.1}, y0{990, 10, 0}, grid{0.0, 10.0};
    const auto tr = integrate(m, p, y0, grid);
    CHECK(tr.states[1][1] == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(1e-7));
    CHECK(final_state(m, p, y0, 0.0, 0.0) == y0);
}

TEST_CASE("SIRD agrees with fixed-step RK4") {
    const auto& m = registry_get("covid_sird");
    const auto p = m.true_values();
    const auto grid = uniform_grid(0.0, 500.0, 100);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    const auto tr = integrate(m, p, m.default_y0, grid, cfg);
    const auto ref = testutil::rk4(m, p, m.default_y0, grid, 1e-3);
    for (std::size_t c = 0; c < m.dim(); ++c) CHECK(testutil::column_rel(tr.states, ref, c) < 1e-6);
    const auto end = final_state(m, p, m.default_y0, 0.0, 500.0);
    CHECK(end[1] < 1e-10 * 1e3 + 1e-3);
}

TEST_CASE("closed models conserve along trajectories") {
    for (const auto& name : registry_names()) {
        const auto& m = registry_get(name);
        if (!m.closed) continue;
        CAPTURE(name);
        const auto tr = integrate(m, m.true_values(), m.default_y0, uniform_grid(0.0, m.horizon, 50));
        double total0 = 0.0;
        for (double v : m.default_y0) total0 += v;
        for (const auto& row : tr.states) {
            double s = 0.0;
            for (double v : row) s += v;
            CHECK(std::abs(s - total0) < 1e-6 * total0);
        }
    }
}

TEST_CASE("tighter tolerance stays within the coarser one") {
    const auto& m = registry_get("covid_sird");
    const auto grid = uniform_grid(0.0, m.horizon, 40);
    IntegratorConfig a, b;
    b.rel_tol = a.rel_tol / 2;
    b.abs_tol = a.abs_tol / 2;
    const auto ta = integrate(m, m.true_values(), m.default_y0, grid, a);
    const auto tb = integrate(m, m.true_values(), m.default_y0, grid, b);
    for (std::size_t c = 0; c < m.dim(); ++c) CHECK(testutil::column_rel(ta.states, tb.states, c) < 1e-6);
}

TEST_CASE("grid and step failures") {
    const auto& m = registry_get("covid_sird");
    const auto p = m.true_values();
    const std::vector<double> bad{0.0, 2.0, 1.0};
    CHECK_THROWS_AS(integrate(m, p, m.default_y0, bad), Error);
    IntegratorConfig tiny;
    tiny.max_steps = 2;
    const auto grid = uniform_grid(0.0, 500.0, 10);
    try {
        integrate(m, p, m.default_y0, grid, tiny);
        FAIL("expected failure");
    } catch (const IntegrationError& e) {
        CHECK(e.kind() == ErrorKind::IntegrationFailure);
        CHECK(e.last_good_time() >= 0.0);
        CHECK(e.last_good_time() < 500.0);
    }
    RhsFn<double> boom = [](double, std::span<const double> y, std::span<const double>, std::span<double> dy) {
        dy[0] = y[0] * y[0];
    };
    const std::vector<double> y0{1.0}, g{0.0, 2.0};
    try {
        integrate_system(boom, {}, y0, g);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK((e.kind() == ErrorKind::BlowUp || e.kind() == ErrorKind::IntegrationFailure));
    }
}

TEST_CASE("trajectory CSV round trip") {
    const auto& m = registry_get("covid_sird");
    const auto tr = integrate(m, m.true_values(), m.default_y0, uniform_grid(0.0, 100.0, 11));
    std::ostringstream os;
    write_csv(os, tr);
    CHECK(os.str().rfind("t,S,I,D,R\n", 0) == 0);
    const auto path = (std::filesystem::temp_directory_path() / "dinnlab_traj_rt.csv").string();
    write_csv(path, tr);
    const auto back = read_trajectory_csv(path);
    std::filesystem::remove(path);
    CHECK(back.times == tr.times);
    CHECK(back.states == tr.states);
    CHECK(back.compartments == tr.compartments);
}
