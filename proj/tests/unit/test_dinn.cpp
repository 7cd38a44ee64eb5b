#include <doctest.h>

#include <random>

#include "dinnlab/dataset.hpp"
#include "dinnlab/dinn.hpp"
#include "dinnlab/error.hpp"

using namespace dinnlab;

namespace {

TrainConfig small_cfg() {
    TrainConfig c;
    c.iterations = 200;
    c.hidden_layers = 2;
    c.width = 6;
    c.activation = Activation::Tanh;
    c.log_every = 50;
    return c;
}

Dataset sird_data(std::size_t n = 12) {
    const auto& m = registry_get("covid_sird");
    return synthesize(m, m.true_values(), m.default_y0, n, m.horizon, {});
}

} // namespace

TEST_CASE("range construction") {
    auto r = make_range(0.1, 100);
    CHECK(r.first == doctest::Approx(-0.2));
    CHECK(r.second == doctest::Approx(0.2));
    r = make_range(0.1, 1000);
    CHECK(r.first == doctest::Approx(-2.0));
    CHECK(r.second == doctest::Approx(2.0));
    r = make_range(0.1, 0);
    CHECK(r.first == 0.1);
    CHECK(r.second == 0.1);
}

TEST_CASE("constrain and unconstrain") {
    CHECK(constrain(0.0, -1.0, 3.0) == doctest::Approx(1.0));
    CHECK(constrain(50.0, -1.0, 3.0) == doctest::Approx(3.0));
    CHECK(unconstrain(constrain(0.37, -2.0, 5.0), -2.0, 5.0) == doctest::Approx(0.37));
    CHECK_THROWS_AS(constrain(0.0, 1.0, 1.0), Error);
}

TEST_CASE("parameter error") {
    CHECK(param_error(0.1932, 0.191) == doctest::Approx(1.1518).epsilon(1e-3));
    CHECK(param_error(0.25, 0.0) == doctest::Approx(0.25));
    CHECK(param_error(0.191, 0.191) == 0.0);
}

TEST_CASE("cyclic schedule") {
    LrSchedule s{1e-4, 1e-2, 0.5, 10, DecayBasis::Cycle};
    CHECK(s.at(0) == doctest::Approx(1e-4));
    CHECK(s.at(10) == doctest::Approx(1e-2));
    CHECK(s.at(20) == doctest::Approx(1e-4));
    CHECK(s.at(30) == doctest::Approx(1e-4 + 0.5 * (1e-2 - 1e-4)));
    for (long k = 0; k < 200; ++k) {
        CHECK(s.at(k) >= 1e-4 - 1e-18);
        CHECK(s.at(k) <= 1e-2 + 1e-18);
    }
    s.basis = DecayBasis::Iteration;
    CHECK(s.at(10) == doctest::Approx(1e-4 + std::pow(0.5, 10) * (1e-2 - 1e-4)));
}

TEST_CASE("train config JSON") {
    TrainConfig c = small_cfg();
    c.param_range_pct = 1000;
    c.fixed = {"gamma"};
    const auto back = train_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"iterationz", 3}}), Error);
}

TEST_CASE("a network that already solves the system has zero loss") {
    const auto& m = registry_get("sir");
    const std::vector<double> p{0.0, 0.0}, y0{500.0, 10.0, 5.0};
    const auto ds = synthesize(m, p, y0, 10, 10.0, {});
    TrainConfig cfg = small_cfg();
    cfg.fix_all = true;
    std::mt19937_64 rng(0);
    DinnModel dm = init_model(m, ds, cfg, rng);
    dm.base_params = p;
    auto flat = dm.net.flatten();
    std::fill(flat.begin(), flat.end(), 0.0);
    for (std::size_t k = 0; k < 3; ++k) flat[flat.size() - 3 + k] = y0[k] / dm.comp_scale[k];
    dm.net.assign(flat);
    DinnLoss loss(m, ds, dm);
    CHECK(loss.evaluate(dm).total() < 1e-10);
    CHECK(tape_loss(m, ds, dm).total() < 1e-10);
}

TEST_CASE("doubling the residuals adds three times the residual term") {
    const auto& m = registry_get("covid_sird");
    const auto ds = sird_data();
    std::mt19937_64 rng(5);
    const DinnModel dm = init_model(m, ds, small_cfg(), rng);
    DinnLoss loss(m, ds, dm);
    const auto before = loss.evaluate(dm);
    loss.set_residual_factor(2.0);
    const auto after = loss.evaluate(dm);
    CHECK(after.data == before.data);
    CHECK(after.total() - before.total() == doctest::Approx(3.0 * before.residual).epsilon(1e-12));
}

TEST_CASE("batched and tape gradients agree and match finite differences") {
    const auto& m = registry_get("covid_sird");
    const auto ds = mask_compartments(sird_data(6), {"R"});
    std::mt19937_64 rng(11);
    const DinnModel dm = init_model(m, ds, small_cfg(), rng);
    DinnLoss loss(m, ds, dm);
    std::vector<double> g(dm.trainable_count()), gt;
    const double l = loss.evaluate(dm, g).total();
    CHECK(tape_loss(m, ds, dm, &gt).total() == doctest::Approx(l).epsilon(1e-13));
    REQUIRE(gt.size() == g.size());
    const auto nflat = dm.net.parameter_count();
    for (std::size_t j = 0; j < g.size(); ++j) {
        CHECK(std::abs(g[j] - gt[j]) < 1e-9 * std::max(1.0, std::abs(gt[j])));
        DinnModel a = dm, b = dm;
        double h = 0.0;
        if (j < nflat) {
            auto fa = dm.net.flatten(), fb = fa;
            h = 1e-6 * std::max(1.0, std::abs(fa[j]));
            fa[j] += h;
            fb[j] -= h;
            a.net.assign(fa);
            b.net.assign(fb);
        } else {
            h = 1e-6 * std::max(1.0, std::abs(dm.raw[j - nflat]));
            a.raw[j - nflat] += h;
            b.raw[j - nflat] -= h;
        }
        const double fd = (loss.evaluate(a).total() - loss.evaluate(b).total()) / (2 * h);
        CHECK(std::abs(fd - g[j]) < 1e-4 * std::max(1.0, std::abs(g[j])));
    }
}

TEST_CASE("initial model respects fixed parameters and ranges") {
    const auto& m = registry_get("covid_sird");
    const auto ds = sird_data();
    TrainConfig cfg = small_cfg();
    cfg.fixed = {"beta"};
    cfg.param_range_pct = 1000;
    std::mt19937_64 rng(0);
    const auto dm = init_model(m, ds, cfg, rng);
    CHECK(dm.learnable_names == std::vector<std::string>{"alpha", "gamma"});
    CHECK(dm.params()[m.param_index("beta")] == 0.05);
    CHECK(dm.lo[0] == doctest::Approx(-2 * 1.91));
    CHECK(dm.time_scale == ds.times.back());
}

TEST_CASE("zero iterations return the initial state") {
    const auto& m = registry_get("covid_sird");
    const auto ds = sird_data();
    TrainConfig cfg = small_cfg();
    cfg.iterations = 0;
    const auto r = train(m, ds, cfg);
    CHECK(r.report.iterations == 0);
    std::mt19937_64 rng(cfg.seed);
    const auto init = init_model(m, ds, cfg, rng);
    CHECK(r.model.raw == init.raw);
    CHECK(r.model.net.flatten() == init.net.flatten());
}

TEST_CASE("training lowers the loss and is deterministic") {
    const auto& m = registry_get("covid_sird");
    const auto ds = sird_data();
    const auto cfg = small_cfg();
    const auto a = train(m, ds, cfg);
    const auto b = train(m, ds, cfg);
    CHECK(to_json(a.report) == to_json(b.report));
    CHECK(a.model.raw == b.model.raw);
    CHECK(a.report.loss_history.size() >= 2);
    CHECK(a.report.final_loss < a.report.loss_history.front().second);
    CHECK(a.report.found_params.size() == 3);
    CHECK(a.report.error_nn.size() == 4);
}

TEST_CASE("loss threshold stops early") {
    const auto& m = registry_get("covid_sird");
    TrainConfig cfg = small_cfg();
    cfg.loss_threshold = 1e9;
    const auto r = train(m, sird_data(), cfg);
    REQUIRE(r.report.threshold_iteration.has_value());
    CHECK(*r.report.threshold_iteration == 0);
    CHECK(r.report.iterations <= 1);
}

TEST_CASE("non-finite data diverges") {
    const auto& m = registry_get("covid_sird");
    auto ds = sird_data();
    ds.observations[3][1] = std::nan("");
    try {
        train(m, ds, small_cfg());
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
    }
}

TEST_CASE("relative errors") {
    const auto& m = registry_get("covid_sird");
    const auto truth = integrate(m, m.true_values(), m.default_y0, uniform_grid(0, 100, 30));
    auto pred = truth;
    for (auto& row : pred.states)
        for (auto& v : row) v *= 1.1;
    const auto e = relative_errors(pred, truth);
    for (std::size_t c = 0; c < 4; ++c) {
        REQUIRE(e[c].has_value());
        CHECK(*e[c] == doctest::Approx(0.1).epsilon(1e-12));
    }
    auto zero = truth;
    for (auto& row : zero.states) row[2] = 0.0;
    CHECK_FALSE(relative_errors(pred, zero)[2].has_value());
    const auto el = error_learnable(m, m.true_values(), m.default_y0, truth);
    for (const auto& v : el) CHECK(*v < 1e-6);
}

TEST_CASE("checkpoint round trip") {
    const auto& m = registry_get("covid_sird");
    const auto cfg = small_cfg();
    const auto r = train(m, sird_data(), cfg);
    const auto back = model_from_checkpoint(nlohmann::json::parse(checkpoint_json(r.model, cfg).dump()));
    CHECK(back.params() == r.model.params());
    const auto grid = uniform_grid(0, 160, 7);
    CHECK(back.predict(grid).states == r.model.predict(grid).states);
    CHECK_THROWS_AS(model_from_checkpoint(nlohmann::json{{"format", "other"}}), Error);
}
