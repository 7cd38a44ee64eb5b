#include <doctest.h>

#include <random>

#include "dinnlab/analytic.hpp"
#include "dinnlab/error.hpp"
#include "dinnlab/integrate.hpp"
#include "dinnlab/models.hpp"
#include "helpers.hpp"

using namespace dinnlab;

namespace {
double bisect_final_size(double S0, double I0, double ratio) {
    return testutil::bisect([&](double x) { return x - S0 * std::exp(-ratio * (S0 + I0 - x)); }, 1e-300, S0 * (1 - 1e-15));
}
} // namespace

TEST_CASE("final size") {
    CHECK(analytic::final_size(500.0, 0.0, 0.002, 0.5) == 500.0);
    const double s = analytic::final_size(999, 1, 0.002, 1.0);
    CHECK(s == doctest::Approx(bisect_final_size(999, 1, 0.002)).epsilon(1e-10));
    const auto& m = registry_get("sir");
    const std::vector<double> p{0.002, 0.5}, y0{999, 1, 0};
    const auto end = final_state(m, p, y0, 0.0, 1e4);
    CHECK(end[0] == doctest::Approx(analytic::final_size(999, 1, 0.002, 0.5)).epsilon(1e-4));
}

TEST_CASE("final size residual over random inputs") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> s0(100, 5000), i0(0.5, 50), ab(0.05, 2.0), r0(1.2, 8.0);
    for (int k = 0; k < 1000; ++k) {
        const double S0 = s0(rng), I0 = i0(rng), alpha = ab(rng);
        const double beta = r0(rng) * alpha / S0;
        const double s = analytic::final_size(S0, I0, beta, alpha);
        CHECK(std::abs(s - S0 * std::exp(-(beta / alpha) * (S0 + I0 - s))) < 1e-10 * S0);
    }
}

TEST_CASE("peak infected") {
    CHECK(analytic::i_max(250.0, 3.0, 0.002, 0.5) == doctest::Approx(3.0).epsilon(1e-12));
    const double a = analytic::i_max(999, 1, 0.002, 0.5), b = analytic::i_max(999, 2, 0.002, 0.5);
    CHECK(b - a == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(analytic::i_max(100, 1, 0.002, 0.5), Error);
    const auto& m = registry_get("sir");
    const std::vector<double> p{0.002, 0.5}, y0{999, 1, 0};
    const auto tr = integrate(m, p, y0, uniform_grid(0.0, 40.0, 40001));
    double peak = 0.0;
    for (const auto& row : tr.states) peak = std::max(peak, row[1]);
    CHECK(a == doctest::Approx(peak).epsilon(1e-3));
    CHECK(a >= peak * (1 - 1e-3));
}

TEST_CASE("ratio from final size") {
    const double s = analytic::final_size(999, 1, 0.002, 1.0);
    CHECK(analytic::ratio_from_final_size(999, s, 1000) == doctest::Approx(0.002).epsilon(1e-8));
    CHECK(analytic::ratio_from_final_size(999, bisect_final_size(999, 1, 0.002), 1000) ==
          doctest::Approx(0.002).epsilon(1e-8));
    CHECK(analytic::ratio_from_final_size(999, 999 * (1 - 1e-9), 1000) < 1e-6);
    CHECK_THROWS_AS(analytic::ratio_from_final_size(999, 999, 1000), Error);
}

TEST_CASE("crude rates") {
    auto r = analytic::crude_rates(1, 100, 1, 2);
    CHECK(r.beta == doctest::Approx(0.01));
    CHECK(r.alpha == doctest::Approx(0.5));
    r = analytic::crude_rates(10, 1000, 10, 5);
    CHECK(r.beta == doctest::Approx(0.001));
    CHECK(r.alpha == doctest::Approx(0.2));
    CHECK_THROWS_AS(analytic::crude_rates(1, 0, 1, 2), Error);
    const auto& m = registry_get("sir");
    const std::vector<double> p{r.beta, r.alpha}, y0{1000, 10, 0};
    CHECK(-rhs_eval(m, 0.0, y0, p)[0] == doctest::Approx(10.0));
}

TEST_CASE("summary serializes") {
    const auto s = analytic::summarize(999, 1, 0.002, 0.5);
    const auto j = analytic::to_json(s);
    CHECK(j.at("s_infinity").get<double>() == doctest::Approx(s.s_infinity));
    CHECK(s.ratio_beta_alpha == doctest::Approx(0.004));
}
