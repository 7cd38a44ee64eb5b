#include "dinnlab/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dinnlab/csv.hpp"
#include "dinnlab/error.hpp"

namespace dinnlab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat (error weights), b_hat being the embedded 4th-order solution.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// PI controller exponents (Hairer & Wanner, DOPRI5 defaults).
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

using Vec = std::vector<double>;

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double error_norm(const Vec& y, const Vec& y_new, const Vec& err, const IntegratorConfig& cfg) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
}

class Stepper {
public:
    Stepper(const RhsFn<double>& rhs, std::span<const double> params, std::size_t n)
        : rhs_(rhs), params_(params), k_(7, Vec(n)), tmp_(n) {}

    void eval(double t, const Vec& y, Vec& out) {
        rhs_(t, std::span<const double>(y), params_, std::span<double>(out));
        ++evals_;
    }

    // One trial step from (t, y) with f0 = f(t, y). Fills y_new, err and f_new (FSAL).
    void step(double t, const Vec& y, const Vec& f0, double h, Vec& y_new, Vec& err, Vec& f_new) {
        const std::size_t n = y.size();
        auto stage = [&](double ct, auto&& combine, Vec& kout) {
            for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * combine(i);
            eval(t + ct * h, tmp_, kout);
        };
        stage(c2, [&](std::size_t i) { return a21 * f0[i]; }, k_[1]);
        stage(c3, [&](std::size_t i) { return a31 * f0[i] + a32 * k_[1][i]; }, k_[2]);
        stage(c4, [&](std::size_t i) { return a41 * f0[i] + a42 * k_[1][i] + a43 * k_[2][i]; }, k_[3]);
        stage(c5, [&](std::size_t i) { return a51 * f0[i] + a52 * k_[1][i] + a53 * k_[2][i] + a54 * k_[3][i]; },
              k_[4]);
        stage(1.0,
              [&](std::size_t i) {
                  return a61 * f0[i] + a62 * k_[1][i] + a63 * k_[2][i] + a64 * k_[3][i] + a65 * k_[4][i];
              },
              k_[5]);
        for (std::size_t i = 0; i < n; ++i)
            y_new[i] = y[i] + h * (b1 * f0[i] + b3 * k_[2][i] + b4 * k_[3][i] + b5 * k_[4][i] + b6 * k_[5][i]);
        eval(t + h, y_new, f_new);
        for (std::size_t i = 0; i < n; ++i)
            err[i] = h * (e1 * f0[i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] + e6 * k_[5][i] +
                          e7 * f_new[i]);
    }

    long evals() const noexcept { return evals_; }

private:
    const RhsFn<double>& rhs_;
    std::span<const double> params_;
    std::vector<Vec> k_;
    Vec tmp_;
    long evals_ = 0;
};

// Hairer's starting step heuristic.
double initial_step(Stepper& st, double t0, const Vec& y0, const Vec& f0, double span, const IntegratorConfig& cfg) {
    const std::size_t n = y0.size();
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y0[i]);
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n));
    d1 = std::sqrt(d1 / static_cast<double>(n));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    Vec y1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h0 * f0[i];
    st.eval(t0 + h0, y1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y0[i]);
        const double r = (f1[i] - f0[i]) / sc;
        d2 += r * r;
    }
    d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, span});
}

} // namespace

std::vector<double> Trajectory::column(std::size_t c) const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& row : states) out.push_back(row.at(c));
    return out;
}

std::vector<std::vector<double>> integrate_system(const RhsFn<double>& rhs, std::span<const double> params,
                                                  std::span<const double> y0_in, std::span<const double> grid,
                                                  const IntegratorConfig& cfg) {
    if (grid.empty()) throw Error(ErrorKind::Domain, "integrate: empty output grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw Error(ErrorKind::Domain, "integrate: grid must be strictly increasing");
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0) || cfg.max_steps <= 0)
        throw Error(ErrorKind::Config, "integrate: tolerances and max_steps must be positive");

    const std::size_t n = y0_in.size();
    Vec y(y0_in.begin(), y0_in.end());
    if (!all_finite(y)) throw Error(ErrorKind::NonFiniteInput, "integrate: non-finite initial state");

    std::vector<Vec> out;
    out.reserve(grid.size());
    out.push_back(y);
    if (grid.size() == 1) return out;

    Stepper st(rhs, params, n);
    double t = grid.front();
    const double t_end = grid.back();
    Vec f(n), y_new(n), f_new(n), err(n);
    st.eval(t, y, f);
    if (!all_finite(f)) throw IntegrationError(ErrorKind::BlowUp, "integrate: non-finite derivative at start", t);

    double h = cfg.initial_step ? *cfg.initial_step : initial_step(st, t, y, f, t_end - t, cfg);
    double err_prev = 1e-4;
    bool rejected_last = false;
    std::size_t next = 1;
    long steps = 0;

    while (next < grid.size()) {
        if (++steps > cfg.max_steps)
            throw IntegrationError(ErrorKind::IntegrationFailure,
                                   "integrate: step budget exhausted at t=" + std::to_string(t), t);
        h = std::min(h, t_end - t);
        st.step(t, y, f, h, y_new, err, f_new);
        const double en = error_norm(y, y_new, err, cfg);
        if (!std::isfinite(en) || !all_finite(y_new)) {
            h *= kMinFactor;
            rejected_last = true;
            if (h < 1e-14 * std::max(1.0, std::abs(t)))
                throw IntegrationError(ErrorKind::BlowUp, "integrate: state became non-finite near t=" +
                                                              std::to_string(t), t);
            continue;
        }
        if (en <= 1.0) {
            const double t_new = t + h;
            // Cubic Hermite on [t, t_new] for every grid point passed.
            while (next < grid.size() && grid[next] <= t_new) {
                const double s = (grid[next] - t) / h;
                const double s2 = s * s, s3 = s2 * s;
                const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
                const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
                Vec row(n);
                if (next == grid.size() - 1) {
                    row = y_new;
                } else {
                    for (std::size_t i = 0; i < n; ++i)
                        row[i] = h00 * y[i] + h10 * h * f[i] + h01 * y_new[i] + h11 * h * f_new[i];
                }
                out.push_back(std::move(row));
                ++next;
            }
            double factor = kSafety * std::pow(en, -kAlpha) * std::pow(err_prev, kBeta);
            if (en == 0.0) factor = kMaxFactor;
            factor = std::clamp(factor, kMinFactor, kMaxFactor);
            if (rejected_last) factor = std::min(factor, 1.0);
            err_prev = std::max(en, 1e-4);
            t = t_new;
            y.swap(y_new);
            f.swap(f_new);
            if (!all_finite(f))
                throw IntegrationError(ErrorKind::BlowUp, "integrate: non-finite derivative at t=" + std::to_string(t),
                                       t);
            h *= factor;
            rejected_last = false;
        } else {
            const double factor = std::max(kMinFactor, kSafety * std::pow(en, -kAlpha));
            h *= factor;
            rejected_last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationError(ErrorKind::IntegrationFailure,
                                   "integrate: step size underflow at t=" + std::to_string(t), t);
    }
    return out;
}

Trajectory integrate(const CompartmentModel& model, std::span<const double> params, std::span<const double> y0,
                     std::span<const double> grid, const IntegratorConfig& cfg) {
    if (y0.size() != model.dim() || params.size() != model.params.size())
        throw Error(ErrorKind::Domain, "integrate: state/parameter size mismatch for model '" + model.name + "'");
    Trajectory traj;
    traj.model_name = model.name;
    traj.compartments = model.compartments;
    traj.times.assign(grid.begin(), grid.end());
    traj.states = integrate_system(model.rhs, params, y0, grid, cfg);
    return traj;
}

std::vector<double> final_state(const CompartmentModel& model, std::span<const double> params,
                                std::span<const double> y0, double t0, double t_end, const IntegratorConfig& cfg) {
    if (t_end == t0) return {y0.begin(), y0.end()};
    if (t_end < t0) throw Error(ErrorKind::Domain, "final_state: backward integration is not supported");
    const double grid[2] = {t0, t_end};
    return integrate(model, params, y0, grid, cfg).states.back();
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
    if (n < 2) return {t0};
    std::vector<double> g(n);
    const double dt = (t1 - t0) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = t0 + dt * static_cast<double>(i);
    g.back() = t1;
    return g;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
    std::vector<std::string> header{"t"};
    header.insert(header.end(), traj.compartments.begin(), traj.compartments.end());
    csv::write_row(os, header);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<double> row{traj.times[i]};
        row.insert(row.end(), traj.states[i].begin(), traj.states[i].end());
        csv::write_numbers(os, row);
    }
}

void write_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    write_csv(os, traj);
}

Trajectory read_trajectory_csv(const std::string& path) {
    const auto table = csv::read_numeric(path);
    if (table.header.empty() || table.header.front() != "t")
        throw Error(ErrorKind::Ingestion, path + ": expected header starting with 't'");
    Trajectory traj;
    traj.compartments.assign(table.header.begin() + 1, table.header.end());
    for (const auto& row : table.rows) {
        traj.times.push_back(row.front());
        traj.states.emplace_back(row.begin() + 1, row.end());
    }
    return traj;
}

} // namespace dinnlab
