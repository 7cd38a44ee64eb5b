#include "dinnlab/autodiff.hpp"

#include <cassert>

namespace dinnlab::ad {

Var Tape::variable(double value) {
    const auto idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({-1, -1, 0.0, 0.0});
    return Var(this, idx, value);
}

Var Tape::record(double value, const Var& a, double d_a, const Var& b, double d_b) {
    const std::int32_t ia = a.tape() == this ? a.index() : -1;
    const std::int32_t ib = b.tape() == this ? b.index() : -1;
    if (ia < 0 && ib < 0) return Var(value);
    const auto idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({ia, ib, ia < 0 ? 0.0 : d_a, ib < 0 ? 0.0 : d_b});
    return Var(this, idx, value);
}

Var Tape::record(double value, const Var& a, double d_a) {
    if (a.tape() != this || a.index() < 0) return Var(value);
    const auto idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({a.index(), -1, d_a, 0.0});
    return Var(this, idx, value);
}

void Tape::sweep(std::vector<double>& adj) const {
    for (std::size_t k = nodes_.size(); k-- > 0;) {
        const double g = adj[k];
        if (g == 0.0) continue;
        const Node& n = nodes_[k];
        if (n.lhs >= 0) adj[static_cast<std::size_t>(n.lhs)] += g * n.d_lhs;
        if (n.rhs >= 0) adj[static_cast<std::size_t>(n.rhs)] += g * n.d_rhs;
    }
}

std::vector<double> Tape::adjoints(const Var& output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (output.tape() == this && output.index() >= 0) {
        adj[static_cast<std::size_t>(output.index())] = 1.0;
        sweep(adj);
    }
    return adj;
}

std::vector<double> Tape::adjoints(std::span<const Var> outputs, std::span<const double> seeds) const {
    assert(outputs.size() == seeds.size());
    std::vector<double> adj(nodes_.size(), 0.0);
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i].tape() == this && outputs[i].index() >= 0)
            adj[static_cast<std::size_t>(outputs[i].index())] += seeds[i];
    }
    sweep(adj);
    return adj;
}

std::vector<double> gradient(const Var& output, std::span<const Var> leaves) {
    std::vector<double> grad(leaves.size(), 0.0);
    if (!output.tape()) return grad;
    const auto adj = output.tape()->adjoints(output);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].tape() == output.tape() && leaves[i].index() >= 0)
            grad[i] = adj[static_cast<std::size_t>(leaves[i].index())];
    }
    return grad;
}

} // namespace dinnlab::ad
