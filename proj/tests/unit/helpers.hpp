#pragma once

#include <cmath>
#include <vector>

#include "dinnlab/models.hpp"

namespace testutil {

// Fixed-step RK4 landing on every grid point; the reference for the adaptive solver.
inline std::vector<std::vector<double>> rk4(const dinnlab::CompartmentModel& m, const std::vector<double>& p,
                                            std::vector<double> y, const std::vector<double>& grid, double h) {
    const std::size_t n = y.size();
    std::vector<std::vector<double>> out{y};
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double span = grid[g] - grid[g - 1];
        const long steps = std::max(1L, std::lround(std::ceil(span / h - 1e-9)));
        const double dt = span / static_cast<double>(steps);
        for (long s = 0; s < steps; ++s) {
            const double t = grid[g - 1] + static_cast<double>(s) * dt;
            m.rhs(t, y, p, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
            m.rhs(t + 0.5 * dt, tmp, p, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
            m.rhs(t + 0.5 * dt, tmp, p, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
            m.rhs(t + dt, tmp, p, k4);
            for (std::size_t i = 0; i < n; ++i) y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push_back(y);
    }
    return out;
}

// Largest |a - b| over a column divided by the largest |b|.
inline double column_rel(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                         std::size_t c) {
    double diff = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i][c] - b[i][c]));
        mag = std::max(mag, std::abs(b[i][c]));
    }
    return mag > 0.0 ? diff / mag : diff;
}

// Bisection root of f on [lo, hi] assuming a sign change.
template <class F>
double bisect(F f, double lo, double hi, double tol = 1e-13) {
    double flo = f(lo);
    for (int i = 0; i < 400 && hi - lo > tol * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace testutil
