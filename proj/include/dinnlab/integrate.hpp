#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dinnlab/models.hpp"

namespace dinnlab {

// Time grid plus one row of compartment values per grid point.
struct Trajectory {
    std::string model_name;
    std::vector<std::string> compartments;
    std::vector<double> times;
    std::vector<std::vector<double>> states;

    std::size_t size() const noexcept { return times.size(); }
    std::vector<double> column(std::size_t c) const;
};

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    long max_steps = 1'000'000;
    std::optional<double> initial_step;  // chosen automatically when empty
};

// Dormand-Prince 5(4) with PI step control and cubic Hermite dense output.
// The grid must be non-empty and strictly increasing; grid[0] is the start time.
std::vector<std::vector<double>> integrate_system(const RhsFn<double>& rhs, std::span<const double> params,
                                                  std::span<const double> y0, std::span<const double> grid,
                                                  const IntegratorConfig& cfg = {});

Trajectory integrate(const CompartmentModel& model, std::span<const double> params, std::span<const double> y0,
                     std::span<const double> grid, const IntegratorConfig& cfg = {});

std::vector<double> final_state(const CompartmentModel& model, std::span<const double> params,
                                std::span<const double> y0, double t0, double t_end,
                                const IntegratorConfig& cfg = {});

// n points evenly spaced over [t0, t1], both ends included.
std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

// CSV with header `t,<compartments...>`, 17 significant digits.
void write_csv(std::ostream& os, const Trajectory& traj);
void write_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

} // namespace dinnlab
