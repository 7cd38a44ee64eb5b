#pragma once

// Fully connected network t -> compartments, plus the scalar forward pass that
// propagates d/dt alongside the value.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dinnlab/autodiff.hpp"

namespace dinnlab {

enum class Activation { Relu, Tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

// `hidden_layers` hidden layers of `width` neurons, activation between them,
// identity at the output.
struct Mlp {
    std::vector<Layer> layers;
    Activation activation = Activation::Relu;

    static Mlp make(std::size_t inputs, std::size_t hidden_layers, std::size_t width, std::size_t outputs,
                    Activation act, std::mt19937_64& rng);

    std::size_t inputs() const { return static_cast<std::size_t>(layers.front().weight.cols()); }
    std::size_t outputs() const { return static_cast<std::size_t>(layers.back().weight.rows()); }
    std::size_t hidden_layers() const { return layers.size() - 1; }
    std::size_t width() const { return layers.size() > 1 ? static_cast<std::size_t>(layers.front().weight.rows()) : 0; }

    // Flat layout: for each layer, weight row-major then bias.
    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    // Plain forward pass on one input.
    Eigen::VectorXd forward(double t) const;
};

namespace detail {
inline double act_value(Activation a, double x) { return a == Activation::Relu ? ad::relu(x) : std::tanh(x); }
} // namespace detail

// Network output and its exact derivative with respect to the scalar input, for
// any scalar type T (double, ad::Var). `flat` holds the parameters in Mlp's
// flat layout; `shape` supplies only the layer sizes and activation.
template <class T>
std::vector<ad::Dual<T>> forward_dual(const Mlp& shape, std::span<const T> flat, const ad::Dual<T>& input) {
    using D = ad::Dual<T>;
    std::vector<D> h{input};
    std::size_t offset = 0;
    for (std::size_t l = 0; l < shape.layers.size(); ++l) {
        const auto rows = static_cast<std::size_t>(shape.layers[l].weight.rows());
        const auto cols = static_cast<std::size_t>(shape.layers[l].weight.cols());
        const std::size_t bias_at = offset + rows * cols;
        std::vector<D> z(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            T value = flat[bias_at + r];
            T tangent(0.0);
            for (std::size_t c = 0; c < cols; ++c) {
                const T& w = flat[offset + r * cols + c];
                value = value + w * h[c].value;
                tangent = tangent + w * h[c].tangent;
            }
            z[r] = D(value, tangent);
        }
        offset = bias_at + rows;
        if (l + 1 < shape.layers.size()) {
            for (auto& v : z) v = shape.activation == Activation::Relu ? ad::relu(v) : ad::tanh(v);
        }
        h = std::move(z);
    }
    return h;
}

struct TimeDerivative {
    std::vector<double> outputs;
    std::vector<double> d_dt;
};

// Outputs and d(outputs)/d(input) at one input value via dual numbers.
TimeDerivative forward_with_time_derivative(const Mlp& net, double t);

// Batched value and input-tangent pass over a row of inputs, keeping what the
// reverse sweep needs.
struct BatchForward {
    std::vector<Eigen::MatrixXd> pre;      // z_l, (width x batch)
    std::vector<Eigen::MatrixXd> pre_dot;  // dz_l/dt
    std::vector<Eigen::MatrixXd> post;     // h_l (post[0] is the input row)
    std::vector<Eigen::MatrixXd> post_dot;
    Eigen::MatrixXd out;      // outputs x batch
    Eigen::MatrixXd out_dot;  // outputs x batch
};

void batch_forward(const Mlp& net, const Eigen::RowVectorXd& inputs, BatchForward& fw);

// Reverse sweep through both value and tangent channels given adjoints of
// `out` and `out_dot`; writes gradients in Mlp's flat layout.
void batch_backward(const Mlp& net, const BatchForward& fw, const Eigen::MatrixXd& out_adj,
                    const Eigen::MatrixXd& out_dot_adj, std::span<double> grad_flat);

} // namespace dinnlab
