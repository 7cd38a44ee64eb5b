#include "dinnlab/network.hpp"

#include <cmath>

#include "dinnlab/error.hpp"

namespace dinnlab {

namespace {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
} // namespace

const char* to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw Error(ErrorKind::Config, "unknown activation '" + s + "' (expected relu or tanh)");
}

Mlp Mlp::make(std::size_t inputs, std::size_t hidden_layers, std::size_t width, std::size_t outputs, Activation act,
              std::mt19937_64& rng) {
    if (inputs == 0 || outputs == 0 || (hidden_layers > 0 && width == 0))
        throw Error(ErrorKind::Config, "Mlp::make: layer sizes must be positive");
    Mlp net;
    net.activation = act;
    std::size_t fan_in = inputs;
    for (std::size_t l = 0; l <= hidden_layers; ++l) {
        const std::size_t fan_out = l == hidden_layers ? outputs : width;
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        Layer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd(fan_out)};
        // Row-major draw order so the flat layout matches the stream.
        for (std::size_t r = 0; r < fan_out; ++r)
            for (std::size_t c = 0; c < fan_in; ++c) layer.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = u(rng);
        for (std::size_t r = 0; r < fan_out; ++r) layer.bias(static_cast<Eigen::Index>(r)) = u(rng);
        net.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return net;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
    }
    return flat;
}

void Mlp::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw Error(ErrorKind::Domain, "Mlp::assign: size mismatch");
    std::size_t k = 0;
    for (auto& l : layers) {
        l.weight = Eigen::Map<const RowMajor>(flat.data() + k, l.weight.rows(), l.weight.cols());
        k += static_cast<std::size_t>(l.weight.size());
        l.bias = Eigen::Map<const Eigen::VectorXd>(flat.data() + k, l.bias.size());
        k += static_cast<std::size_t>(l.bias.size());
    }
}

Eigen::VectorXd Mlp::forward(double t) const {
    Eigen::VectorXd h = Eigen::VectorXd::Constant(1, t);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::VectorXd z = layers[l].weight * h + layers[l].bias;
        if (l + 1 < layers.size()) z = z.unaryExpr([a = activation](double x) { return detail::act_value(a, x); });
        h = std::move(z);
    }
    return h;
}

TimeDerivative forward_with_time_derivative(const Mlp& net, double t) {
    const auto flat = net.flatten();
    const auto out = forward_dual<double>(net, flat, ad::Dual<double>(t, 1.0));
    TimeDerivative td;
    for (const auto& d : out) {
        td.outputs.push_back(d.value);
        td.d_dt.push_back(d.tangent);
    }
    return td;
}

void batch_forward(const Mlp& net, const Eigen::RowVectorXd& inputs, BatchForward& fw) {
    const std::size_t L = net.layers.size();
    const Eigen::Index B = inputs.size();
    fw.pre.resize(L);
    fw.pre_dot.resize(L);
    fw.post.resize(L);
    fw.post_dot.resize(L);
    fw.post[0] = inputs;
    fw.post_dot[0] = Eigen::RowVectorXd::Ones(B);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = net.layers[l];
        fw.pre[l].noalias() = layer.weight * fw.post[l];
        fw.pre[l].colwise() += layer.bias;
        fw.pre_dot[l].noalias() = layer.weight * fw.post_dot[l];
        if (l + 1 < L) {
            if (net.activation == Activation::Relu) {
                fw.post[l + 1] = fw.pre[l].cwiseMax(0.0);
                fw.post_dot[l + 1] = (fw.pre[l].array() > 0.0).select(fw.pre_dot[l], 0.0);
            } else {
                fw.post[l + 1] = fw.pre[l].array().tanh();
                fw.post_dot[l + 1] = (1.0 - fw.post[l + 1].array().square()) * fw.pre_dot[l].array();
            }
        }
    }
    fw.out = fw.pre[L - 1];
    fw.out_dot = fw.pre_dot[L - 1];
}

void batch_backward(const Mlp& net, const BatchForward& fw, const Eigen::MatrixXd& out_adj,
                    const Eigen::MatrixXd& out_dot_adj, std::span<double> grad_flat) {
    const std::size_t L = net.layers.size();
    // Offsets of each layer's block in the flat layout.
    std::vector<std::size_t> offset(L);
    std::size_t k = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offset[l] = k;
        k += static_cast<std::size_t>(net.layers[l].weight.size() + net.layers[l].bias.size());
    }
    Eigen::MatrixXd z_adj = out_adj;
    Eigen::MatrixXd zdot_adj = out_dot_adj;
    Eigen::MatrixXd h_adj, hdot_adj;
    for (std::size_t l = L; l-- > 0;) {
        const auto& layer = net.layers[l];
        RowMajor dW = z_adj * fw.post[l].transpose();
        dW.noalias() += zdot_adj * fw.post_dot[l].transpose();
        Eigen::Map<RowMajor>(grad_flat.data() + offset[l], layer.weight.rows(), layer.weight.cols()) = dW;
        Eigen::Map<Eigen::VectorXd>(grad_flat.data() + offset[l] + layer.weight.size(), layer.bias.size()) =
            z_adj.rowwise().sum();
        if (l == 0) break;
        h_adj.noalias() = layer.weight.transpose() * z_adj;
        hdot_adj.noalias() = layer.weight.transpose() * zdot_adj;
        const Eigen::MatrixXd& z = fw.pre[l - 1];
        if (net.activation == Activation::Relu) {
            z_adj = (z.array() > 0.0).select(h_adj, 0.0);
            zdot_adj = (z.array() > 0.0).select(hdot_adj, 0.0);
        } else {
            const Eigen::ArrayXXd th = fw.post[l].array();
            const Eigen::ArrayXXd slope = 1.0 - th.square();
            const Eigen::ArrayXXd curvature = -2.0 * th * slope;
            z_adj = (h_adj.array() * slope + hdot_adj.array() * curvature * fw.pre_dot[l - 1].array()).matrix();
            zdot_adj = (hdot_adj.array() * slope).matrix();
        }
    }
}

} // namespace dinnlab
