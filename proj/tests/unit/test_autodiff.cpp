#include <doctest.h>

#include <random>

#include "dinnlab/autodiff.hpp"
#include "dinnlab/network.hpp"

using namespace dinnlab;
using ad::Dual;
using ad::Var;

TEST_CASE("square of a leaf has gradient 2x") {
    ad::Tape tape;
    Var x = tape.variable(3.0);
    const std::vector<Var> leaves{x};
    CHECK(ad::gradient(x * x, leaves)[0] == doctest::Approx(6.0));
}

TEST_CASE("unused leaf gets zero gradient") {
    ad::Tape tape;
    Var x = tape.variable(2.0), y = tape.variable(5.0);
    const std::vector<Var> leaves{x, y};
    const auto g = ad::gradient(ad::exp(x) + x, leaves);
    CHECK(g[0] == doctest::Approx(std::exp(2.0) + 1.0));
    CHECK(g[1] == 0.0);
}

TEST_CASE("elementary partials") {
    ad::Tape tape;
    Var a = tape.variable(0.7), b = tape.variable(-1.3);
    const std::vector<Var> leaves{a, b};
    auto g = ad::gradient(a / b, leaves);
    CHECK(g[0] == doctest::Approx(1.0 / -1.3));
    CHECK(g[1] == doctest::Approx(-0.7 / (1.3 * 1.3)));
    g = ad::gradient(ad::tanh(a) * ad::log(a), leaves);
    const double th = std::tanh(0.7);
    CHECK(g[0] == doctest::Approx((1 - th * th) * std::log(0.7) + th / 0.7));
    g = ad::gradient(-a - b, leaves);
    CHECK(g[0] == -1.0);
    CHECK(g[1] == -1.0);
}

TEST_CASE("gradient is linear in the output") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    for (int k = 0; k < 50; ++k) {
        ad::Tape tape;
        std::vector<Var> x;
        for (int i = 0; i < 4; ++i) x.push_back(tape.variable(u(rng)));
        Var f = ad::tanh(x[0] * x[1]) + ad::exp(x[2]) / x[3];
        Var g = x[0] * x[0] * x[3] - ad::log(x[1] + x[2]);
        const double a = u(rng), b = -u(rng);
        const auto gf = ad::gradient(f, x), gg = ad::gradient(g, x);
        const auto gc = ad::gradient(Var(a) * f + Var(b) * g, x);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(gc[i] - (a * gf[i] + b * gg[i])) < 1e-12);
    }
}

TEST_CASE("seeded adjoints of several outputs") {
    ad::Tape tape;
    Var x = tape.variable(1.5), y = tape.variable(2.0);
    const std::vector<Var> outs{x * y, x + y};
    const std::vector<double> seeds{2.0, -1.0};
    const auto adj = tape.adjoints(outs, seeds);
    CHECK(adj[static_cast<std::size_t>(x.index())] == doctest::Approx(2.0 * 2.0 - 1.0));
    CHECK(adj[static_cast<std::size_t>(y.index())] == doctest::Approx(2.0 * 1.5 - 1.0));
}

TEST_CASE("dual numbers follow the product and chain rules") {
    const Dual<double> u(2.0, 3.0), v(-1.0, 0.5);
    const auto p = u * v;
    CHECK(p.value == -2.0);
    CHECK(p.tangent == doctest::Approx(3.0 * -1.0 + 2.0 * 0.5));
    const auto q = u / v;
    CHECK(q.tangent == doctest::Approx((3.0 * -1.0 - 2.0 * 0.5) / 1.0));
    const auto t = ad::tanh(u);
    CHECK(t.tangent == doctest::Approx((1 - std::tanh(2.0) * std::tanh(2.0)) * 3.0));
    CHECK(ad::relu(Dual<double>(0.0, 4.0)).tangent == 0.0);
    CHECK(ad::relu(Dual<double>(-1.0, 4.0)).tangent == 0.0);
    CHECK(ad::relu(Dual<double>(0.5, 4.0)).tangent == 4.0);
}

TEST_CASE("forward tangent equals the reverse derivative with respect to the input") {
    for (auto act : {Activation::Tanh, Activation::Relu}) {
        std::mt19937_64 rng(21);
        const Mlp net = Mlp::make(1, 3, 6, 1, act, rng);
        const auto flat = net.flatten();
        for (double t : {-0.7, 0.1, 0.45, 0.9}) {
            ad::Tape tape;
            Var x = tape.variable(t);
            std::vector<Var> w(flat.begin(), flat.end());
            const auto out = forward_dual<Var>(net, w, Dual<Var>(x, Var(1.0)));
            const std::vector<Var> leaves{x};
            const double reverse = ad::gradient(out[0].value, leaves)[0];
            CHECK(std::abs(out[0].tangent.value() - reverse) < 1e-12);
        }
    }
}

TEST_CASE("identical inputs give bit-identical gradients") {
    auto run = [] {
        ad::Tape tape;
        Var a = tape.variable(0.3), b = tape.variable(1.7);
        Var f = ad::tanh(a * b) * ad::exp(a - b) + a / b;
        const std::vector<Var> leaves{a, b};
        return ad::gradient(f, leaves);
    };
    CHECK(run() == run());
}
