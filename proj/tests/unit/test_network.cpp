#include <doctest.h>

#include <random>

#include "dinnlab/network.hpp"

using namespace dinnlab;

TEST_CASE("layout and flatten round trip") {
    std::mt19937_64 rng(1);
    Mlp net = Mlp::make(1, 3, 5, 4, Activation::Tanh, rng);
    CHECK(net.hidden_layers() == 3);
    CHECK(net.width() == 5);
    CHECK(net.outputs() == 4);
    CHECK(net.parameter_count() == (1 * 5 + 5) + 2 * (5 * 5 + 5) + (5 * 4 + 4));
    auto flat = net.flatten();
    CHECK(flat.size() == net.parameter_count());
    flat[0] = 0.123;
    net.assign(flat);
    CHECK(net.layers[0].weight(0, 0) == 0.123);
    CHECK(net.flatten() == flat);
    CHECK(activation_from_string(to_string(Activation::Relu)) == Activation::Relu);
    CHECK(activation_from_string("tanh") == Activation::Tanh);
    CHECK_THROWS(activation_from_string("sigmoid"));
}

TEST_CASE("time derivative matches central differences") {
    for (auto act : {Activation::Tanh, Activation::Relu}) {
        std::mt19937_64 rng(8);
        const Mlp net = Mlp::make(1, 2, 7, 3, act, rng);
        for (double t : {-0.31, 0.2, 0.77}) {
            const auto td = forward_with_time_derivative(net, t);
            const double h = 1e-6;
            const Eigen::VectorXd fd = (net.forward(t + h) - net.forward(t - h)) / (2 * h);
            const Eigen::VectorXd v = net.forward(t);
            for (int k = 0; k < 3; ++k) {
                CHECK(td.outputs[static_cast<std::size_t>(k)] == doctest::Approx(v(k)).epsilon(1e-14));
                CHECK(std::abs(td.d_dt[static_cast<std::size_t>(k)] - fd(k)) < 1e-7);
            }
        }
    }
}

TEST_CASE("batched pass agrees with the scalar pass") {
    std::mt19937_64 rng(2);
    const Mlp net = Mlp::make(1, 3, 6, 2, Activation::Tanh, rng);
    Eigen::RowVectorXd in(4);
    in << 0.0, 0.25, 0.5, 1.0;
    BatchForward fw;
    batch_forward(net, in, fw);
    for (int i = 0; i < 4; ++i) {
        const auto td = forward_with_time_derivative(net, in(i));
        for (int k = 0; k < 2; ++k) {
            CHECK(fw.out(k, i) == doctest::Approx(td.outputs[static_cast<std::size_t>(k)]).epsilon(1e-13));
            CHECK(fw.out_dot(k, i) == doctest::Approx(td.d_dt[static_cast<std::size_t>(k)]).epsilon(1e-13));
        }
    }
}

TEST_CASE("batched reverse sweep matches finite differences") {
    std::mt19937_64 rng(4);
    Mlp net = Mlp::make(1, 2, 4, 2, Activation::Tanh, rng);
    Eigen::RowVectorXd in(3);
    in << 0.1, 0.4, 0.9;
    Eigen::MatrixXd wa(2, 3), wd(2, 3);
    wa << 0.3, -1.0, 0.5, 2.0, 0.1, -0.4;
    wd << -0.7, 0.2, 1.1, 0.6, -0.3, 0.9;
    auto objective = [&](const Mlp& n) {
        BatchForward f;
        batch_forward(n, in, f);
        return (wa.array() * f.out.array()).sum() + (wd.array() * f.out_dot.array()).sum();
    };
    BatchForward fw;
    batch_forward(net, in, fw);
    std::vector<double> grad(net.parameter_count());
    batch_backward(net, fw, wa, wd, grad);
    const auto flat = net.flatten();
    for (std::size_t j = 0; j < flat.size(); ++j) {
        auto p = flat, m = flat;
        const double h = 1e-6 * std::max(1.0, std::abs(flat[j]));
        p[j] += h;
        m[j] -= h;
        Mlp np = net, nm = net;
        np.assign(p);
        nm.assign(m);
        CHECK(std::abs(grad[j] - (objective(np) - objective(nm)) / (2 * h)) < 1e-6);
    }
}

TEST_CASE("construction is deterministic in the generator") {
    std::mt19937_64 a(9), b(9);
    CHECK(Mlp::make(1, 2, 3, 1, Activation::Relu, a).flatten() == Mlp::make(1, 2, 3, 1, Activation::Relu, b).flatten());
}
