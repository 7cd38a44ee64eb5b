#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dinnlab/integrate.hpp"
#include "dinnlab/models.hpp"

namespace dinnlab {

// Training data for one model: a time grid, observations (rows per time),
// and per-compartment visibility.
//
// A compartment with mask == false and init_only == true is known only at the
// first time point. scale[c] is the largest |observation| over the rows in
// which compartment c is visible.
struct Dataset {
    std::string model_name;
    std::vector<std::string> compartments;
    std::vector<double> times;
    std::vector<std::vector<double>> observations;
    std::vector<bool> mask;
    std::vector<bool> init_only;
    std::vector<double> scale;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dim() const noexcept { return compartments.size(); }
    std::vector<std::string> hidden() const;
    // Number of visible (time, compartment) entries.
    std::size_t observed_count() const;
};

enum class NoiseModel {
    Multiplicative,  // x (1 + level z)
    Additive,        // x + level max|x| z
};

struct NoiseSpec {
    double level = 0.0;
    std::uint64_t seed = 0;
    NoiseModel model = NoiseModel::Multiplicative;
};

// Recomputes scale from the visible entries.
void refresh_scale(Dataset& ds);

Dataset from_trajectory(const Trajectory& traj);

// Integrates on a uniform grid of n_points over [0, horizon] and perturbs every
// entry with independent Gaussian noise; noisy values below zero are clamped.
Dataset synthesize(const CompartmentModel& model, std::span<const double> p_true, std::span<const double> y0,
                   std::size_t n_points, double horizon, const NoiseSpec& noise, const IntegratorConfig& cfg = {});

Dataset mask_compartments(const Dataset& ds, const std::vector<std::string>& hidden);

struct RealDataSplit {
    Dataset train;
    Dataset holdout;
    std::string first_date;
};

// CSV `date,S,I,D,R` with ISO dates (strictly increasing) and cumulative counts.
// Time is days since the first row. Train keeps rows with t <= train_cutoff and
// t a multiple of subsample_every; holdout is every row with t > train_cutoff.
RealDataSplit ingest_real_csv(const std::string& path, int subsample_every, double train_cutoff);

void write_dataset_csv(const std::string& path, const Dataset& ds);
// Sidecar carrying the hidden/init-only compartments.
nlohmann::json mask_sidecar(const Dataset& ds);
Dataset read_dataset_csv(const std::string& path, const std::string& model_name);
// Applies a sidecar written by mask_sidecar.
Dataset apply_sidecar(const Dataset& ds, const nlohmann::json& sidecar);

} // namespace dinnlab
