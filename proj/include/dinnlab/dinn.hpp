#pragma once

// Disease-informed network: an MLP t -> compartments trained jointly with the
// unknown ODE parameters so that it fits the data and satisfies the ODE.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dinnlab/dataset.hpp"
#include "dinnlab/integrate.hpp"
#include "dinnlab/models.hpp"
#include "dinnlab/network.hpp"

namespace dinnlab {

// lo + (hi - lo) (tanh(raw) + 1) / 2. Throws Domain when lo >= hi.
double constrain(double raw, double lo, double hi);
// Inverse of constrain for values strictly inside (lo, hi).
double unconstrain(double value, double lo, double hi);

// Symmetric search band around zero scaled from the true value: 100% gives
// (-2|v|, 2|v|) and every further factor of ten widens it tenfold. 0% gives
// the degenerate (v, v), meaning the parameter is held fixed.
std::pair<double, double> make_range(double true_value, double pct);

// 100 |found - actual| / |actual|, or |found - actual| when actual == 0.
double param_error(double found, double actual);

enum class DecayBasis {
    Cycle,      // amplitude scaled by gamma^k during cycle k (k from 0)
    Iteration,  // amplitude scaled by gamma^step
};

// Triangular cyclic learning rate with exponentially shrinking amplitude.
struct LrSchedule {
    double lr_min = 1e-6;
    double lr_max = 1e-3;
    double gamma = 0.85;
    long step_size_up = 1000;
    DecayBasis basis = DecayBasis::Cycle;

    double at(long step) const;
};

struct TrainConfig {
    long iterations = 10000;
    double lr_min = 1e-6;
    double lr_max = 1e-3;
    double gamma = 0.85;
    long step_size_up = 1000;
    DecayBasis decay = DecayBasis::Cycle;
    std::uint64_t seed = 0;
    // When set, every learnable range is rebuilt by make_range(true_value, pct).
    std::optional<double> param_range_pct;
    std::size_t hidden_layers = 4;
    std::size_t width = 20;
    Activation activation = Activation::Relu;
    // Raw parameters start uniform on (-h, h).
    double raw_init_halfwidth = 0.5;
    long log_every = 1000;
    // Stop once total loss drops below this (0 disables).
    double loss_threshold = 0.0;
    // Learnable parameters to hold at their published value.
    std::vector<std::string> fixed;
    bool fix_all = false;

    LrSchedule schedule() const { return {lr_min, lr_max, gamma, step_size_up, decay}; }
};

nlohmann::ordered_json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct DinnModel {
    std::string model_name;
    Mlp net;
    double time_scale = 1.0;
    std::vector<double> comp_scale;
    // Full parameter vector with fixed values; learnable slots are overwritten.
    std::vector<double> base_params;
    std::vector<std::size_t> learnable;  // indices into base_params
    std::vector<std::string> learnable_names;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> raw;

    std::vector<double> params() const;
    double param(std::size_t k) const { return constrain(raw[k], lo[k], hi[k]); }
    std::size_t trainable_count() const { return net.parameter_count() + raw.size(); }

    // Denormalized prediction on arbitrary times.
    Trajectory predict(std::span<const double> times) const;
};

// Builds the network and parameter block for a dataset. Deterministic in rng.
DinnModel init_model(const CompartmentModel& model, const Dataset& ds, const TrainConfig& cfg, std::mt19937_64& rng);

nlohmann::ordered_json checkpoint_json(const DinnModel& m, const TrainConfig& cfg);
DinnModel model_from_checkpoint(const nlohmann::json& j);

struct LossParts {
    double data = 0.0;
    double residual = 0.0;
    double total() const { return data + residual; }
};

// Full-batch loss over the dataset grid, in normalized units:
//   sum_c mean_i (u_ic - obs_ic / s_c)^2   (visible entries; t0 only for init-only)
// + sum_c mean_i (du_ic/dt~ - (T / s_c) f_c(s * u_i, p))^2
// with u the network output, s the compartment scales and T the time scale.
// Gradients use a batched value/tangent forward pass and its hand-written
// reverse sweep; the rhs vector-Jacobian product comes from the tape.
class DinnLoss {
public:
    DinnLoss(const CompartmentModel& model, const Dataset& ds, const DinnModel& shape);

    // grad (optional) is laid out as [network flat..., raw...].
    LossParts evaluate(const DinnModel& m, std::span<double> grad = {});

    // Residual scale factor applied to every residual (testing hook).
    void set_residual_factor(double f) { residual_factor_ = f; }

private:
    const CompartmentModel& model_;
    std::vector<double> times_;
    Eigen::RowVectorXd inputs_;
    Eigen::MatrixXd target_;  // normalized observations, dim x batch
    std::vector<bool> mask_;
    std::vector<bool> init_only_;
    BatchForward fw_;
    ad::Tape tape_;
    double residual_factor_ = 1.0;
};

// Same loss and gradient recorded end-to-end on the scalar tape with dual
// numbers over tape variables. Slow; used to cross-check DinnLoss.
LossParts tape_loss(const CompartmentModel& model, const Dataset& ds, const DinnModel& m,
                    std::vector<double>* grad = nullptr);

// Denormalized residuals d(y_k)/dt - f_k(y, p) at each time (rows per time).
std::vector<std::vector<double>> residuals(const CompartmentModel& model, const DinnModel& m,
                                           std::span<const double> times);

// Per compartment ||pred - truth||_2 / ||truth||_2; empty when the truth norm is 0.
std::vector<std::optional<double>> relative_errors(const Trajectory& pred, const Trajectory& truth);
std::vector<std::optional<double>> error_nn(const DinnModel& m, const Trajectory& truth);
std::vector<std::optional<double>> error_learnable(const CompartmentModel& model, std::span<const double> params,
                                                   std::span<const double> y0, const Trajectory& truth,
                                                   const IntegratorConfig& cfg = {});

struct FitReport {
    std::string method = "dinn";
    std::vector<std::pair<std::string, double>> found_params;
    std::vector<std::pair<std::string, double>> true_params;
    std::vector<double> param_errors;  // percentage, see param_error
    std::vector<std::optional<double>> error_nn;
    std::vector<std::optional<double>> error_learnable;
    std::vector<std::pair<long, double>> loss_history;
    long iterations = 0;
    double final_loss = 0.0;
    // First iteration whose loss fell below the configured threshold.
    std::optional<long> threshold_iteration;
    bool diverged = false;
    std::string failure;
    // Sum of squared differences between the re-integrated trajectory and truth.
    std::optional<double> sse_truth;
    double wall_time = 0.0;  // seconds; informational, not serialized by default

    double found(const std::string& name) const;
};

nlohmann::ordered_json to_json(const FitReport& r, bool with_timing = false);

struct TrainResult {
    DinnModel model;
    FitReport report;
};

// Full-batch Adam on (network weights, raw parameters) under the cyclic
// schedule. `truth` (optional) is the noiseless reference used for the error
// metrics; without it they are measured against the dataset itself.
// Throws Divergence when the loss becomes non-finite.
TrainResult train(const CompartmentModel& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::optional<Trajectory>& truth = std::nullopt);

// Fills parameter errors and error metrics of a report from a trained model.
void score(FitReport& report, const CompartmentModel& model, const DinnModel& m,
           const std::optional<Trajectory>& truth, const Dataset& ds);

} // namespace dinnlab
