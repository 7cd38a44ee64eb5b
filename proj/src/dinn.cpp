#include "dinnlab/dinn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dinnlab/error.hpp"

namespace dinnlab {

double constrain(double raw, double lo, double hi) {
    if (!(lo < hi)) throw Error(ErrorKind::Domain, "constrain: need lo < hi");
    return lo + (hi - lo) * (std::tanh(raw) + 1.0) / 2.0;
}

double unconstrain(double value, double lo, double hi) {
    if (!(lo < hi)) throw Error(ErrorKind::Domain, "unconstrain: need lo < hi");
    if (!(value > lo && value < hi)) throw Error(ErrorKind::Domain, "unconstrain: value outside (lo, hi)");
    return std::atanh(2.0 * (value - lo) / (hi - lo) - 1.0);
}

std::pair<double, double> make_range(double true_value, double pct) {
    if (!(pct >= 0.0)) throw Error(ErrorKind::Domain, "make_range: pct must be >= 0");
    if (pct == 0.0) return {true_value, true_value};
    const double w = 2.0 * std::abs(true_value) * pct / 100.0;
    return {-w, w};
}

double param_error(double found, double actual) {
    if (actual == 0.0) return std::abs(found - actual);
    return 100.0 * std::abs(found - actual) / std::abs(actual);
}

double LrSchedule::at(long step) const {
    const double s = static_cast<double>(step);
    const double half = static_cast<double>(step_size_up);
    const double cycle = std::floor(1.0 + s / (2.0 * half));
    const double x = std::abs(s / half - 2.0 * cycle + 1.0);
    const double exponent = basis == DecayBasis::Cycle ? cycle - 1.0 : s;
    return lr_min + (lr_max - lr_min) * std::max(0.0, 1.0 - x) * std::pow(gamma, exponent);
}

namespace {

const char* to_string(DecayBasis b) { return b == DecayBasis::Cycle ? "cycle" : "iteration"; }

DecayBasis decay_from_string(const std::string& s) {
    if (s == "cycle") return DecayBasis::Cycle;
    if (s == "iteration") return DecayBasis::Iteration;
    throw Error(ErrorKind::Config, "unknown decay basis '" + s + "' (expected cycle or iteration)");
}

nlohmann::json optional_list(const std::vector<std::optional<double>>& v) {
    auto arr = nlohmann::json::array();
    for (const auto& e : v) arr.push_back(e ? nlohmann::json(*e) : nlohmann::json(nullptr));
    return arr;
}

} // namespace

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["iterations"] = cfg.iterations;
    j["lr_min"] = cfg.lr_min;
    j["lr_max"] = cfg.lr_max;
    j["gamma"] = cfg.gamma;
    j["step_size_up"] = cfg.step_size_up;
    j["decay"] = to_string(cfg.decay);
    j["seed"] = cfg.seed;
    j["param_range_pct"] = cfg.param_range_pct ? nlohmann::ordered_json(*cfg.param_range_pct) : nullptr;
    j["hidden_layers"] = cfg.hidden_layers;
    j["width"] = cfg.width;
    j["activation"] = to_string(cfg.activation);
    j["raw_init_halfwidth"] = cfg.raw_init_halfwidth;
    j["log_every"] = cfg.log_every;
    j["loss_threshold"] = cfg.loss_threshold;
    j["fixed"] = cfg.fixed;
    j["fix_all"] = cfg.fix_all;
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "train config must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "iterations") c.iterations = v.get<long>();
        else if (key == "lr_min") c.lr_min = v.get<double>();
        else if (key == "lr_max") c.lr_max = v.get<double>();
        else if (key == "gamma") c.gamma = v.get<double>();
        else if (key == "step_size_up") c.step_size_up = v.get<long>();
        else if (key == "decay") c.decay = decay_from_string(v.get<std::string>());
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "param_range_pct") c.param_range_pct = v.is_null() ? std::nullopt : std::optional(v.get<double>());
        else if (key == "hidden_layers") c.hidden_layers = v.get<std::size_t>();
        else if (key == "width") c.width = v.get<std::size_t>();
        else if (key == "activation") c.activation = activation_from_string(v.get<std::string>());
        else if (key == "raw_init_halfwidth") c.raw_init_halfwidth = v.get<double>();
        else if (key == "log_every") c.log_every = v.get<long>();
        else if (key == "loss_threshold") c.loss_threshold = v.get<double>();
        else if (key == "fixed") c.fixed = v.get<std::vector<std::string>>();
        else if (key == "fix_all") c.fix_all = v.get<bool>();
        else throw Error(ErrorKind::Config, "unknown train config key '" + key + "'");
    }
    if (c.iterations < 0) throw Error(ErrorKind::Config, "iterations must be >= 0");
    if (!(c.lr_min <= c.lr_max)) throw Error(ErrorKind::Config, "lr_min must not exceed lr_max");
    if (c.step_size_up <= 0) throw Error(ErrorKind::Config, "step_size_up must be positive");
    return c;
}

std::vector<double> DinnModel::params() const {
    std::vector<double> p = base_params;
    for (std::size_t k = 0; k < learnable.size(); ++k) p[learnable[k]] = param(k);
    return p;
}

Trajectory DinnModel::predict(std::span<const double> times) const {
    Trajectory t;
    t.model_name = model_name;
    const auto& m = registry_get(model_name);
    t.compartments = m.compartments;
    t.times.assign(times.begin(), times.end());
    for (double tt : times) {
        const Eigen::VectorXd u = net.forward(tt / time_scale);
        std::vector<double> row(comp_scale.size());
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = comp_scale[c] * u(static_cast<Eigen::Index>(c));
        t.states.push_back(std::move(row));
    }
    return t;
}

DinnModel init_model(const CompartmentModel& model, const Dataset& ds, const TrainConfig& cfg, std::mt19937_64& rng) {
    if (ds.dim() != model.dim()) throw Error(ErrorKind::Domain, "init_model: dataset does not match model");
    if (ds.size() < 2) throw Error(ErrorKind::Domain, "init_model: need at least 2 time points");
    DinnModel m;
    m.model_name = model.name;
    m.net = Mlp::make(1, cfg.hidden_layers, cfg.width, model.dim(), cfg.activation, rng);
    m.time_scale = ds.times.back() > 0.0 ? ds.times.back() : 1.0;

    double fallback = 0.0;
    for (std::size_t c = 0; c < ds.dim(); ++c)
        if (ds.mask[c]) fallback = std::max(fallback, ds.scale[c]);
    if (fallback <= 0.0) fallback = 1.0;
    m.comp_scale.resize(ds.dim());
    for (std::size_t c = 0; c < ds.dim(); ++c) {
        // Hidden compartments are only pinned at t0, so use the largest visible scale.
        const bool usable = ds.mask[c] && ds.scale[c] > 0.0;
        m.comp_scale[c] = usable ? ds.scale[c] : std::max(fallback, ds.init_only[c] ? ds.scale[c] : 0.0);
    }

    m.base_params = model.true_values();
    for (const auto& f : cfg.fixed) (void)model.param_index(f);
    std::uniform_real_distribution<double> u(-cfg.raw_init_halfwidth, cfg.raw_init_halfwidth);
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        const auto& spec = model.params[i];
        if (spec.known || cfg.fix_all) continue;
        if (std::find(cfg.fixed.begin(), cfg.fixed.end(), spec.name) != cfg.fixed.end()) continue;
        auto [lo, hi] = cfg.param_range_pct ? make_range(spec.true_value, *cfg.param_range_pct)
                                            : std::pair{spec.search_lo, spec.search_hi};
        if (!(lo < hi)) continue;  // degenerate band: held at the published value
        m.learnable.push_back(i);
        m.learnable_names.push_back(spec.name);
        m.lo.push_back(lo);
        m.hi.push_back(hi);
        m.raw.push_back(cfg.raw_init_halfwidth > 0.0 ? u(rng) : 0.0);
    }
    return m;
}

nlohmann::ordered_json checkpoint_json(const DinnModel& m, const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["format"] = "dinnlab-checkpoint";
    j["version"] = 1;
    j["model"] = m.model_name;
    j["activation"] = to_string(m.net.activation);
    auto& layers = j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : m.net.layers) {
        nlohmann::ordered_json e;
        e["rows"] = l.weight.rows();
        e["cols"] = l.weight.cols();
        std::vector<double> w;
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
        e["weight"] = w;
        e["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back(std::move(e));
    }
    j["time_scale"] = m.time_scale;
    j["comp_scale"] = m.comp_scale;
    j["base_params"] = m.base_params;
    j["learnable"] = m.learnable;
    j["learnable_names"] = m.learnable_names;
    j["lo"] = m.lo;
    j["hi"] = m.hi;
    j["raw"] = m.raw;
    j["config"] = to_json(cfg);
    j["seed"] = cfg.seed;
    return j;
}

DinnModel model_from_checkpoint(const nlohmann::json& j) {
    if (j.value("format", "") != "dinnlab-checkpoint" || j.value("version", 0) != 1)
        throw Error(ErrorKind::Config, "not a version-1 dinnlab checkpoint");
    DinnModel m;
    m.model_name = j.at("model").get<std::string>();
    m.net.activation = activation_from_string(j.at("activation").get<std::string>());
    for (const auto& e : j.at("layers")) {
        const auto rows = e.at("rows").get<Eigen::Index>();
        const auto cols = e.at("cols").get<Eigen::Index>();
        const auto w = e.at("weight").get<std::vector<double>>();
        const auto b = e.at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
            throw Error(ErrorKind::Config, "checkpoint layer shape mismatch");
        Layer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
        for (Eigen::Index r = 0; r < rows; ++r) l.bias(r) = b[static_cast<std::size_t>(r)];
        m.net.layers.push_back(std::move(l));
    }
    for (std::size_t l = 1; l < m.net.layers.size(); ++l)
        if (m.net.layers[l].weight.cols() != m.net.layers[l - 1].weight.rows())
            throw Error(ErrorKind::Config, "checkpoint layers do not chain");
    m.time_scale = j.at("time_scale").get<double>();
    m.comp_scale = j.at("comp_scale").get<std::vector<double>>();
    m.base_params = j.at("base_params").get<std::vector<double>>();
    m.learnable = j.at("learnable").get<std::vector<std::size_t>>();
    m.learnable_names = j.at("learnable_names").get<std::vector<std::string>>();
    m.lo = j.at("lo").get<std::vector<double>>();
    m.hi = j.at("hi").get<std::vector<double>>();
    m.raw = j.at("raw").get<std::vector<double>>();
    return m;
}

DinnLoss::DinnLoss(const CompartmentModel& model, const Dataset& ds, const DinnModel& shape)
    : model_(model), times_(ds.times), mask_(ds.mask), init_only_(ds.init_only) {
    const auto B = static_cast<Eigen::Index>(ds.size());
    const auto D = static_cast<Eigen::Index>(ds.dim());
    inputs_.resize(B);
    target_.resize(D, B);
    for (Eigen::Index i = 0; i < B; ++i) {
        inputs_(i) = ds.times[static_cast<std::size_t>(i)] / shape.time_scale;
        for (Eigen::Index c = 0; c < D; ++c)
            target_(c, i) = ds.observations[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] /
                            shape.comp_scale[static_cast<std::size_t>(c)];
    }
    tape_.reserve(256);
}

LossParts DinnLoss::evaluate(const DinnModel& m, std::span<double> grad) {
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != m.trainable_count())
        throw Error(ErrorKind::Domain, "DinnLoss::evaluate: gradient buffer size mismatch");
    batch_forward(m.net, inputs_, fw_);
    const Eigen::Index B = inputs_.size();
    const Eigen::Index D = target_.rows();
    const double inv_b = 1.0 / static_cast<double>(B);
    const double T = m.time_scale;

    LossParts parts;
    Eigen::MatrixXd out_adj = Eigen::MatrixXd::Zero(D, B);
    Eigen::MatrixXd dot_adj = Eigen::MatrixXd::Zero(D, B);

    for (Eigen::Index c = 0; c < D; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        if (mask_[cu]) {
            for (Eigen::Index i = 0; i < B; ++i) {
                const double e = fw_.out(c, i) - target_(c, i);
                parts.data += e * e * inv_b;
                out_adj(c, i) += 2.0 * e * inv_b;
            }
        } else if (init_only_[cu]) {
            const double e = fw_.out(c, 0) - target_(c, 0);
            parts.data += e * e;
            out_adj(c, 0) += 2.0 * e;
        }
    }

    const std::vector<double> p = m.params();
    const std::size_t P = p.size();
    std::vector<double> p_adj(P, 0.0);
    std::vector<ad::Var> y(static_cast<std::size_t>(D)), pv(P), dy(static_cast<std::size_t>(D));
    std::vector<double> seeds(static_cast<std::size_t>(D));
    for (Eigen::Index i = 0; i < B; ++i) {
        tape_.clear();
        for (Eigen::Index c = 0; c < D; ++c)
            y[static_cast<std::size_t>(c)] = tape_.variable(m.comp_scale[static_cast<std::size_t>(c)] * fw_.out(c, i));
        for (std::size_t k = 0; k < P; ++k) pv[k] = tape_.variable(p[k]);
        model_.rhs_var(times_[static_cast<std::size_t>(i)], y, pv, dy);
        for (Eigen::Index c = 0; c < D; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            const double factor = T / m.comp_scale[cu];
            const double r = residual_factor_ * (fw_.out_dot(c, i) - factor * dy[cu].value());
            parts.residual += r * r * inv_b;
            const double g = 2.0 * r * inv_b * residual_factor_;
            dot_adj(c, i) += g;
            seeds[cu] = -g * factor;
        }
        if (!want_grad) continue;
        const auto adj = tape_.adjoints(dy, seeds);
        for (Eigen::Index c = 0; c < D; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            const auto idx = static_cast<std::size_t>(y[cu].index());
            out_adj(c, i) += adj[idx] * m.comp_scale[cu];
        }
        for (std::size_t k = 0; k < P; ++k) p_adj[k] += adj[static_cast<std::size_t>(pv[k].index())];
    }

    if (want_grad) {
        const std::size_t nw = m.net.parameter_count();
        batch_backward(m.net, fw_, out_adj, dot_adj, grad.subspan(0, nw));
        for (std::size_t k = 0; k < m.raw.size(); ++k) {
            const double th = std::tanh(m.raw[k]);
            grad[nw + k] = p_adj[m.learnable[k]] * (m.hi[k] - m.lo[k]) * 0.5 * (1.0 - th * th);
        }
    }
    return parts;
}

LossParts tape_loss(const CompartmentModel& model, const Dataset& ds, const DinnModel& m, std::vector<double>* grad) {
    using ad::Dual;
    using ad::Var;
    ad::Tape tape;
    const auto flat = m.net.flatten();
    std::vector<Var> leaves;
    leaves.reserve(flat.size() + m.raw.size());
    for (double w : flat) leaves.push_back(tape.variable(w));
    std::vector<Var> raw;
    for (double r : m.raw) raw.push_back(tape.variable(r));
    leaves.insert(leaves.end(), raw.begin(), raw.end());

    std::vector<Var> p(m.base_params.begin(), m.base_params.end());
    for (std::size_t k = 0; k < m.raw.size(); ++k)
        p[m.learnable[k]] = Var(m.lo[k]) + Var(m.hi[k] - m.lo[k]) * (ad::tanh(raw[k]) + Var(1.0)) / Var(2.0);

    const std::span<const Var> wflat(leaves.data(), flat.size());
    const std::size_t B = ds.size(), D = ds.dim();
    const double T = m.time_scale;
    Var data(0.0), residual(0.0);
    const Var inv_b(1.0 / static_cast<double>(B));
    std::vector<Var> y(D), dy(D);
    for (std::size_t i = 0; i < B; ++i) {
        const auto out = forward_dual<Var>(m.net, wflat, Dual<Var>(Var(ds.times[i] / T), Var(1.0)));
        for (std::size_t c = 0; c < D; ++c) {
            const Var target(ds.observations[i][c] / m.comp_scale[c]);
            if (ds.mask[c]) {
                const Var e = out[c].value - target;
                data = data + e * e * inv_b;
            } else if (ds.init_only[c] && i == 0) {
                const Var e = out[c].value - target;
                data = data + e * e;
            }
            y[c] = Var(m.comp_scale[c]) * out[c].value;
        }
        model.rhs_var(ds.times[i], y, p, dy);
        for (std::size_t c = 0; c < D; ++c) {
            const Var r = out[c].tangent - Var(T / m.comp_scale[c]) * dy[c];
            residual = residual + r * r * inv_b;
        }
    }
    const Var total = data + residual;
    if (grad) *grad = ad::gradient(total, leaves);
    return {data.value(), residual.value()};
}

std::vector<std::vector<double>> residuals(const CompartmentModel& model, const DinnModel& m,
                                           std::span<const double> times) {
    const auto flat = m.net.flatten();
    const auto p = m.params();
    std::vector<std::vector<double>> out;
    const std::size_t D = model.dim();
    std::vector<double> y(D), dy(D);
    for (double t : times) {
        const auto o = forward_dual<double>(m.net, flat, ad::Dual<double>(t / m.time_scale, 1.0));
        std::vector<double> r(D);
        for (std::size_t c = 0; c < D; ++c) y[c] = m.comp_scale[c] * o[c].value;
        model.rhs(t, y, p, dy);
        for (std::size_t c = 0; c < D; ++c) r[c] = m.comp_scale[c] * o[c].tangent / m.time_scale - dy[c];
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::optional<double>> relative_errors(const Trajectory& pred, const Trajectory& truth) {
    if (pred.size() != truth.size() || pred.compartments.size() != truth.compartments.size())
        throw Error(ErrorKind::Domain, "relative_errors: shape mismatch");
    const std::size_t D = truth.compartments.size();
    std::vector<std::optional<double>> err(D);
    for (std::size_t c = 0; c < D; ++c) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double d = pred.states[i][c] - truth.states[i][c];
            num += d * d;
            den += truth.states[i][c] * truth.states[i][c];
        }
        if (den > 0.0) err[c] = std::sqrt(num) / std::sqrt(den);
    }
    return err;
}

std::vector<std::optional<double>> error_nn(const DinnModel& m, const Trajectory& truth) {
    return relative_errors(m.predict(truth.times), truth);
}

std::vector<std::optional<double>> error_learnable(const CompartmentModel& model, std::span<const double> params,
                                                   std::span<const double> y0, const Trajectory& truth,
                                                   const IntegratorConfig& cfg) {
    return relative_errors(integrate(model, params, y0, truth.times, cfg), truth);
}

double FitReport::found(const std::string& name) const {
    for (const auto& [k, v] : found_params)
        if (k == name) return v;
    throw Error(ErrorKind::UnknownName, "report has no parameter '" + name + "'");
}

nlohmann::ordered_json to_json(const FitReport& r, bool with_timing) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    auto& params = j["params"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < r.found_params.size(); ++k) {
        nlohmann::ordered_json e;
        e["name"] = r.found_params[k].first;
        e["found"] = r.found_params[k].second;
        if (k < r.true_params.size()) e["actual"] = r.true_params[k].second;
        if (k < r.param_errors.size()) e["error_pct"] = r.param_errors[k];
        params.push_back(std::move(e));
    }
    j["error_nn"] = optional_list(r.error_nn);
    j["error_learnable"] = optional_list(r.error_learnable);
    j["iterations"] = r.iterations;
    j["final_loss"] = r.final_loss;
    j["threshold_iteration"] = r.threshold_iteration ? nlohmann::ordered_json(*r.threshold_iteration) : nullptr;
    j["sse_truth"] = r.sse_truth ? nlohmann::ordered_json(*r.sse_truth) : nullptr;
    j["diverged"] = r.diverged;
    if (!r.failure.empty()) j["failure"] = r.failure;
    auto& hist = j["loss_history"] = nlohmann::ordered_json::array();
    for (const auto& [it, l] : r.loss_history) hist.push_back({it, l});
    if (with_timing) j["wall_time"] = r.wall_time;
    return j;
}

void score(FitReport& report, const CompartmentModel& model, const DinnModel& m, const std::optional<Trajectory>& truth,
           const Dataset& ds) {
    const auto p = m.params();
    report.found_params.clear();
    report.true_params.clear();
    report.param_errors.clear();
    for (std::size_t k = 0; k < m.learnable.size(); ++k) {
        const auto& spec = model.params[m.learnable[k]];
        report.found_params.emplace_back(spec.name, p[m.learnable[k]]);
        report.true_params.emplace_back(spec.name, spec.true_value);
        report.param_errors.push_back(param_error(p[m.learnable[k]], spec.true_value));
    }
    Trajectory reference;
    if (truth) {
        reference = *truth;
    } else {
        reference.model_name = ds.model_name;
        reference.compartments = ds.compartments;
        reference.times = ds.times;
        reference.states = ds.observations;
    }
    report.error_nn = error_nn(m, reference);
    if (!truth) {
        for (std::size_t c = 0; c < ds.dim(); ++c)
            if (!ds.mask[c]) report.error_nn[c].reset();
    }
    try {
        const auto regenerated = integrate(model, p, reference.states.front(), reference.times);
        report.error_learnable = relative_errors(regenerated, reference);
        if (!truth) {
            for (std::size_t c = 0; c < ds.dim(); ++c)
                if (!ds.mask[c]) report.error_learnable[c].reset();
        }
        double sse = 0.0;
        for (std::size_t i = 0; i < reference.size(); ++i)
            for (std::size_t c = 0; c < ds.dim(); ++c) {
                const double d = regenerated.states[i][c] - reference.states[i][c];
                sse += d * d;
            }
        report.sse_truth = sse;
    } catch (const Error& e) {
        report.error_learnable.assign(ds.dim(), std::nullopt);
        report.failure = std::string("regeneration failed: ") + e.what();
    }
}

TrainResult train(const CompartmentModel& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::optional<Trajectory>& truth) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.iterations < 0) throw Error(ErrorKind::Config, "train: iterations must be >= 0");
    if (!(cfg.lr_min <= cfg.lr_max)) throw Error(ErrorKind::Config, "train: lr_min must not exceed lr_max");
    std::mt19937_64 rng(cfg.seed);
    TrainResult res{init_model(model, ds, cfg, rng), {}};
    DinnModel& m = res.model;
    FitReport& rep = res.report;

    DinnLoss loss(model, ds, m);
    const LrSchedule sched = cfg.schedule();
    const std::size_t nw = m.net.parameter_count();
    const std::size_t n = m.trainable_count();
    std::vector<double> theta = m.net.flatten();
    theta.insert(theta.end(), m.raw.begin(), m.raw.end());
    std::vector<double> grad(n), mom(n, 0.0), vel(n, 0.0);
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    constexpr double kRawClamp = 12.0;
    double b1t = 1.0, b2t = 1.0;

    LossParts parts;
    long it = 0;
    for (; it < cfg.iterations; ++it) {
        parts = loss.evaluate(m, grad);
        const double l = parts.total();
        if (!std::isfinite(l)) {
            rep.diverged = true;
            throw Error(ErrorKind::Divergence, "train: non-finite loss at iteration " + std::to_string(it));
        }
        if (cfg.log_every > 0 && it % cfg.log_every == 0) rep.loss_history.emplace_back(it, l);
        if (cfg.loss_threshold > 0.0 && l < cfg.loss_threshold) {
            rep.threshold_iteration = it;
            break;
        }
        const double lr = sched.at(it);
        b1t *= b1;
        b2t *= b2;
        for (std::size_t k = 0; k < n; ++k) {
            mom[k] = b1 * mom[k] + (1.0 - b1) * grad[k];
            vel[k] = b2 * vel[k] + (1.0 - b2) * grad[k] * grad[k];
            const double mh = mom[k] / (1.0 - b1t);
            const double vh = vel[k] / (1.0 - b2t);
            theta[k] -= lr * mh / (std::sqrt(vh) + eps);
        }
        for (std::size_t k = nw; k < n; ++k) theta[k] = std::clamp(theta[k], -kRawClamp, kRawClamp);
        m.net.assign(std::span<const double>(theta.data(), nw));
        std::copy(theta.begin() + static_cast<std::ptrdiff_t>(nw), theta.end(), m.raw.begin());
    }
    if (!rep.threshold_iteration) parts = loss.evaluate(m);
    rep.iterations = it;
    rep.final_loss = parts.total();
    if (!std::isfinite(rep.final_loss)) {
        rep.diverged = true;
        throw Error(ErrorKind::Divergence, "train: non-finite loss at iteration " + std::to_string(it));
    }
    if (rep.loss_history.empty() || rep.loss_history.back().first != it) rep.loss_history.emplace_back(it, rep.final_loss);
    score(rep, model, m, truth, ds);
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

} // namespace dinnlab
