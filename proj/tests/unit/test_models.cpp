#include <doctest.h>

#include <numeric>

#include "dinnlab/error.hpp"
#include "dinnlab/models.hpp"

using namespace dinnlab;

TEST_CASE("SIRD derivative at the published start") {
    const auto& m = registry_get("covid_sird");
    const std::vector<double> y{990, 10, 0, 0};
    const auto dy = rhs_eval(m, 0.0, y, m.true_values());
    CHECK(dy[0] == doctest::Approx(-1.8909).epsilon(1e-12));
    CHECK(dy[1] == doctest::Approx(1.0969).epsilon(1e-12));
    CHECK(dy[2] == doctest::Approx(0.294).epsilon(1e-12));
    CHECK(dy[3] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("closed models conserve the total at their defaults") {
    for (const auto& name : registry_names()) {
        const auto& m = registry_get(name);
        if (!m.closed) continue;
        CAPTURE(name);
        const auto dy = rhs_eval(m, 0.0, m.default_y0, m.true_values());
        const double total = std::accumulate(m.default_y0.begin(), m.default_y0.end(), 0.0);
        CHECK(std::abs(std::accumulate(dy.begin(), dy.end(), 0.0)) < 1e-9 * std::max(1.0, total));
    }
}

TEST_CASE("registry entries are consistent") {
    CHECK(registry_names().size() >= 12);
    for (const auto& name : registry_names()) {
        const auto& m = registry_get(name);
        CAPTURE(name);
        CHECK(m.name == name);
        CHECK(m.default_y0.size() == m.dim());
        CHECK(m.horizon > 0.0);
        CHECK_FALSE(m.learnable_names().empty());
        const auto p = m.true_values();
        CHECK(p.size() == m.params.size());
        const auto dy = rhs_eval(m, 0.0, m.default_y0, p);
        for (double v : dy) CHECK(std::isfinite(v));
    }
}

TEST_CASE("tape rhs matches the double rhs") {
    for (const auto& name : registry_names()) {
        const auto& m = registry_get(name);
        const auto p = m.true_values();
        const auto dy = rhs_eval(m, 0.0, m.default_y0, p);
        ad::Tape tape;
        std::vector<ad::Var> yv, pv, dv(m.dim());
        for (double v : m.default_y0) yv.push_back(tape.variable(v));
        for (double v : p) pv.push_back(tape.variable(v));
        m.rhs_var(0.0, yv, pv, dv);
        for (std::size_t i = 0; i < m.dim(); ++i) CHECK(dv[i].value() == doctest::Approx(dy[i]).epsilon(1e-14));
    }
}

TEST_CASE("lookup and input errors") {
    auto kind_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    CHECK(kind_of([] { registry_get("lassa"); }) == ErrorKind::UnknownName);
    const auto& m = registry_get("covid_sird");
    CHECK(kind_of([&] { (void)m.param_index("delta"); }) == ErrorKind::UnknownName);
    CHECK(kind_of([&] { (void)m.compartment_index("X"); }) == ErrorKind::UnknownName);
    const std::vector<double> y{990, std::nan(""), 0, 0};
    CHECK(kind_of([&] { rhs_eval(m, 0.0, y, m.true_values()); }) == ErrorKind::NonFiniteInput);
}

TEST_CASE("model description serializes") {
    const auto j = to_json(registry_get("covid_sird"));
    CHECK(j.at("name") == "covid_sird");
    CHECK(j.at("compartments").size() == 4);
}
