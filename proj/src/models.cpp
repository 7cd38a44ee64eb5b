#include "dinnlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "dinnlab/error.hpp"

namespace dinnlab {

namespace {

// Each system is a functor templated on the scalar so the same source feeds
// plain evaluation (double) and tape recording (ad::Var). Parameter order
// matches the ParamSpec list built in the registry below.

struct Sir {
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& I = y[1];
        const T& beta = p[0];
        const T& alpha = p[1];
        dy[0] = -(beta * S * I);
        dy[1] = beta * S * I - alpha * I;
        dy[2] = alpha * I;
    }
};

struct CovidSird {
    // y = (S, I, D, R)
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& I = y[1];
        const T& alpha = p[0];
        const T& beta = p[1];
        const T& gamma = p[2];
        const T& N = p[3];
        T infection = (alpha / N) * S * I;
        dy[0] = -infection;
        dy[1] = infection - beta * I - gamma * I;
        dy[2] = gamma * I;
        dy[3] = beta * I;
    }
};

struct Hiv {
    // y = (T, I, V); the k1 V T loss sits inside the logistic bracket as printed.
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& Tc = y[0];
        const T& I = y[1];
        const T& V = y[2];
        const T& s = p[0];
        const T& mu_T = p[1];
        const T& mu_I = p[2];
        const T& mu_b = p[3];
        const T& mu_V = p[4];
        const T& r = p[5];
        const T& N = p[6];
        const T& T_max = p[7];
        const T& k1 = p[8];
        const T& k1p = p[9];
        dy[0] = s - mu_T * Tc + r * Tc * (T(1.0) - (Tc + I) / T_max - k1 * V * Tc);
        dy[1] = k1p * V * Tc - mu_I * I;
        dy[2] = N * mu_b * I - k1 * V * Tc - mu_V * V;
    }
};

struct Smallpox {
    // y = (S, En, Ei, Ci, I, Q, U, V)
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& En = y[1];
        const T& Ei = y[2];
        const T& Ci = y[3];
        const T& I = y[4];
        const T& Q = y[5];
        const T& chi1 = p[0];
        const T& chi2 = p[1];
        const T& eps1 = p[2];
        const T& eps2 = p[3];
        const T& rho = p[4];
        const T& theta = p[5];
        const T& alpha = p[6];
        const T& gamma = p[7];
        const T& beta = p[8];
        const T& phi = p[9];
        T SI = S * I;
        T one(1.0);
        dy[0] = chi1 * (one - eps1) * Ci - beta * (phi + rho - phi * rho) * SI;
        dy[1] = beta * phi * (one - rho) * SI - alpha * En;
        dy[2] = beta * phi * rho * SI - (chi1 * eps2 + alpha * (one - eps2)) * Ei;
        dy[3] = beta * rho * (one - phi) * SI - chi1 * Ci;
        dy[4] = alpha * (one - theta) * En - (theta + gamma) * I;
        dy[5] = alpha * (one - eps2) * Ei + theta * (alpha * En + I) - chi2 * Q;
        dy[6] = gamma * I + chi2 * Q;
        dy[7] = chi1 * (eps2 * Ei + eps1 * Ci);
    }
};

struct Tuberculosis {
    // y = (S, L, I, T); N is the running total S + L + I + T.
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& L = y[1];
        const T& I = y[2];
        const T& Tr = y[3];
        const T& delta = p[0];
        const T& beta = p[1];
        const T& c = p[2];
        const T& mu = p[3];
        const T& k = p[4];
        const T& r1 = p[5];
        const T& r2 = p[6];
        const T& beta_p = p[7];
        const T& d = p[8];
        T N = S + L + I + Tr;
        T infection = beta * c * S * I / N;
        T reinfection = beta_p * c * Tr / N;
        dy[0] = delta - infection - mu * S;
        dy[1] = infection - (mu + k + r1) * L + reinfection;
        dy[2] = k * L - (mu + d) * I - r2 * I;
        dy[3] = r1 * L + r2 * I - reinfection - mu * Tr;
    }
};

struct Pneumonia {
    // y = (S, V, C, I, R); k and tau (p[2], p[4]) are table-only.
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& V = y[1];
        const T& C = y[2];
        const T& I = y[3];
        const T& R = y[4];
        const T& pi = p[0];
        const T& lambda = p[1];
        const T& eps = p[3];
        const T& phi = p[5];
        const T& chi = p[6];
        const T& pv = p[7];
        const T& theta = p[8];
        const T& mu = p[9];
        const T& alpha = p[10];
        const T& rho = p[11];
        const T& beta = p[12];
        const T& eta = p[13];
        const T& q = p[14];
        const T& delta = p[15];
        T one(1.0);
        dy[0] = (one - pv) * pi + phi * V + delta * R - (mu + lambda + theta) * S;
        dy[1] = pv * pi + theta * S - (mu + eps * lambda + phi) * V;
        dy[2] = rho * lambda * S + rho * eps * lambda * V + (one - q) * eta * I - (mu + beta + chi) * C;
        dy[3] = (one - rho) * lambda * S + (one - rho) * eps * lambda * V + chi * C - (mu + alpha + eta) * I;
        dy[4] = beta * C + q * eta * I - (mu + delta) * R;
    }
};

struct Ebola {
    // y = (S, E, I, H, F, R)
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& E = y[1];
        const T& I = y[2];
        const T& H = y[3];
        const T& F = y[4];
        const T& beta1 = p[0];
        const T& beta_h = p[1];
        const T& beta_f = p[2];
        const T& alpha = p[3];
        const T& gamma_h = p[4];
        const T& theta1 = p[5];
        const T& gamma_i = p[6];
        const T& delta1 = p[7];
        const T& gamma_d = p[8];
        const T& delta2 = p[9];
        const T& gamma_f = p[10];
        const T& gamma_ih = p[11];
        const T& gamma_dh = p[12];
        const T& N = p[13];
        T one(1.0);
        T force = (one / N) * (beta1 * S * I + beta_h * S * H + beta_f * S * F);
        dy[0] = -force;
        dy[1] = force - alpha * E;
        dy[2] = alpha * E -
                (gamma_h * theta1 + gamma_i * (one - theta1) * (one - delta1) + gamma_d * (one - theta1) * delta1) * I;
        dy[3] = gamma_h * theta1 * I - (gamma_dh * delta2 + gamma_ih * (one - delta2)) * H;
        dy[4] = gamma_d * (one - theta1) * delta1 * I + gamma_dh * delta2 * H - gamma_f * F;
        dy[5] = gamma_i * (one - theta1) * (one - delta1) * I + gamma_ih * (one - delta2) * H + gamma_f * F;
    }
};

struct Dengue {
    // y = (Sh, Eh, Ih, Rh, Sv, Ev, Iv); lambda_v (p[3]) is table-only.
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& Sh = y[0];
        const T& Eh = y[1];
        const T& Ih = y[2];
        const T& Rh = y[3];
        const T& Sv = y[4];
        const T& Ev = y[5];
        const T& Iv = y[6];
        const T& pi_h = p[0];
        const T& pi_v = p[1];
        const T& lambda_h = p[2];
        const T& delta_h = p[4];
        const T& delta_v = p[5];
        const T& mu_h = p[6];
        const T& mu_v = p[7];
        const T& sigma_h = p[8];
        const T& sigma_v = p[9];
        const T& tau_h = p[10];
        dy[0] = pi_h - lambda_h * Sh - mu_h * Sh;
        dy[1] = lambda_h * Sh - (sigma_h * mu_h) * Eh;
        dy[2] = sigma_h * Eh - (tau_h + mu_h + delta_h) * Ih;
        dy[3] = tau_h * Ih - mu_h * Rh;
        dy[4] = pi_v - delta_v * Sv - mu_v * Sv;
        dy[5] = delta_v * Sv - (sigma_v + mu_v) * Ev;
        dy[6] = sigma_v * Ev - (mu_v + delta_v) * Iv;
    }
};

struct Anthrax {
    // y = (S, I, A, C)
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& I = y[1];
        const T& A = y[2];
        const T& C = y[3];
        const T& r = p[0];
        const T& mu = p[1];
        const T& kappa = p[2];
        const T& eta_a = p[3];
        const T& eta_c = p[4];
        const T& eta_i = p[5];
        const T& tau = p[6];
        const T& gamma = p[7];
        const T& delta = p[8];
        const T& K = p[9];
        const T& beta = p[10];
        const T& sigma = p[11];
        T total = S + I;
        T contact = eta_i * (S * I) / total;
        dy[0] = r * total * (T(1.0) - total / K) - eta_a * A * S - eta_c * S * C - contact - mu * S + tau * I;
        dy[1] = eta_a * A * S + eta_c * S * C + (contact - (gamma + mu + tau)) * I;
        dy[2] = -(sigma * A) + beta * C;
        dy[3] = (gamma + mu) * I - delta * total * C - kappa * C;
    }
};

struct Polio {
    // y = (Sc, Sa, Ic, Ia, Rc, Ra); N, Nc, Na are running class totals.
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& Sc = y[0];
        const T& Sa = y[1];
        const T& Ic = y[2];
        const T& Ia = y[3];
        const T& Rc = y[4];
        const T& Ra = y[5];
        const T& mu = p[0];
        const T& alpha = p[1];
        const T& gamma_a = p[2];
        const T& gamma_c = p[3];
        const T& beta_aa = p[4];
        const T& beta_cc = p[5];
        const T& beta_ac = p[6];
        const T& beta_ca = p[7];
        T Nc = Sc + Ic + Rc;
        T Na = Sa + Ia + Ra;
        T N = Nc + Na;
        dy[0] = mu * N - (alpha + mu + (beta_cc / Nc) * Ic + (beta_ca / Nc) * Ia) * Sc;
        dy[1] = alpha * Sc - (mu + (beta_aa / Na) * Ia + (beta_ac / Na) * Ic) * Sa;
        dy[2] = ((beta_cc / Nc) * Ic + (beta_ca / Nc) * Ia) * Sc - (gamma_c + alpha + mu) * Ic;
        dy[3] = ((beta_ac / Na) * Ic + (beta_aa / Na) * Ia) * Sa - (gamma_a + mu) * Ia + alpha * Ic;
        dy[4] = gamma_c * Ic - mu * Rc - alpha * Rc;
        dy[5] = gamma_a * Ia - mu * Ra + alpha * Rc;
    }
};

struct Measles {
    // y = (S, E, I); the E outflow is the printed product mu*sigma.
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& S = y[0];
        const T& E = y[1];
        const T& I = y[2];
        const T& mu = p[0];
        const T& beta = p[1];
        const T& gamma = p[2];
        const T& sigma = p[3];
        const T& N = p[4];
        T infection = (beta * S * I) / N;
        dy[0] = mu * (N - S) - infection;
        dy[1] = infection - (mu * sigma) * E;
        dy[2] = sigma * E - (mu + gamma) * I;
    }
};

struct Zika {
    // y = (Sh, Eh, Ih1, Ih2, Ah, Rh, Sv, Ev, Iv); m (p[8]) is table-only.
    // Signs and the missing Sv factor in dEv follow the printed system.
    template <class T>
    void operator()(const T* y, const T* p, T* dy) const {
        const T& Sh = y[0];
        const T& Eh = y[1];
        const T& Ih1 = y[2];
        const T& Ih2 = y[3];
        const T& Ah = y[4];
        const T& Sv = y[6];
        const T& Ev = y[7];
        const T& Iv = y[8];
        const T& a = p[0];
        const T& b = p[1];
        const T& c = p[2];
        const T& eta = p[3];
        const T& beta = p[4];
        const T& kappa = p[5];
        const T& tau = p[6];
        const T& theta = p[7];
        const T& V_h = p[9];
        const T& V_v = p[10];
        const T& gamma_h1 = p[11];
        const T& gamma_h2 = p[12];
        const T& gamma_h = p[13];
        const T& mu_v = p[14];
        const T& Nh = p[15];
        const T& Nv = p[16];
        T one(1.0);
        T vector_force = a * b * (Iv / Nh) * Sh;
        T human_force = beta * ((kappa * Eh + Ih1 + tau * Ih2) / Nh) * Sh;
        T vector_infection = a * c * ((eta * Eh + Ih1) / Nh);
        dy[0] = -vector_force - human_force;
        dy[1] = theta * (-vector_force - human_force) - V_h * Eh;
        dy[2] = V_h * Eh - gamma_h1 * Ih1;
        dy[3] = gamma_h1 * Ih1 - gamma_h2 * Ih2;
        dy[4] = (one - theta) * (vector_force - human_force) - gamma_h * Ah;
        dy[5] = gamma_h2 * Ih2 + gamma_h * Ah;
        dy[6] = mu_v * Nv - vector_infection * Sv - mu_v * Sv;
        dy[7] = vector_infection - (V_v + mu_v) * Ev;
        dy[8] = V_v * Ev - mu_v * Iv;
    }
};

template <class F>
void bind_rhs(CompartmentModel& m, F f) {
    m.rhs = [f](double, std::span<const double> y, std::span<const double> p, std::span<double> dy) {
        f(y.data(), p.data(), dy.data());
    };
    m.rhs_var = [f](double, std::span<const ad::Var> y, std::span<const ad::Var> p, std::span<ad::Var> dy) {
        f(y.data(), p.data(), dy.data());
    };
}

// Table row: value and range as printed. Reversed bounds are reordered; a
// value outside its printed range is kept and flagged.
ParamSpec row(std::string name, double value, double lo, double hi, std::string note = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.true_value = value;
    p.search_lo = std::min(lo, hi);
    p.search_hi = std::max(lo, hi);
    p.known = false;
    p.from_table = true;
    p.note = std::move(note);
    if (lo > hi) p.note += (p.note.empty() ? "" : "; ") + std::string("printed range reversed");
    p.range_flagged = !(value >= p.search_lo && value <= p.search_hi);
    if (p.range_flagged) p.note += (p.note.empty() ? "" : "; ") + std::string("value outside printed range");
    return p;
}

// Table row whose parameter never enters the printed equations.
ParamSpec table_only(std::string name, double value, double lo, double hi) {
    ParamSpec p = row(std::move(name), value, lo, hi, "not used by the printed equations");
    p.known = true;
    return p;
}

// Constant the equations need that no table lists.
ParamSpec constant(std::string name, double value, std::string note) {
    ParamSpec p;
    p.name = std::move(name);
    p.true_value = value;
    p.search_lo = value;
    p.search_hi = value;
    p.known = true;
    p.from_table = false;
    p.note = std::move(note);
    return p;
}

// Symmetric band (-2|v|, 2|v|), the 100% construction, for systems without a table.
ParamSpec banded(std::string name, double value) {
    const double w = 2.0 * std::abs(value);
    return row(std::move(name), value, -w, w, "no published table; 100% band");
}

std::map<std::string, CompartmentModel, std::less<>> build_registry() {
    std::map<std::string, CompartmentModel, std::less<>> reg;

    {
        CompartmentModel m;
        m.name = "sir";
        m.title = "Kermack-McKendrick SIR";
        m.compartments = {"S", "I", "R"};
        m.params = {banded("beta", 0.002), banded("alpha", 0.5)};
        m.default_y0 = {999.0, 1.0, 0.0};
        m.population = 1000.0;
        m.horizon = 40.0;
        m.closed = true;
        bind_rhs(m, Sir{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "covid_sird";
        m.title = "COVID-19 SIRD";
        m.compartments = {"S", "I", "D", "R"};
        m.params = {row("alpha", 0.191, -1.0, 1.0), row("beta", 0.05, -1.0, 1.0), row("gamma", 0.0294, -1.0, 1.0),
                    constant("N", 1000.0, "total population")};
        m.default_y0 = {990.0, 10.0, 0.0, 0.0};
        m.population = 1000.0;
        m.horizon = 160.0;
        m.closed = true;
        bind_rhs(m, CovidSird{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "hiv";
        m.title = "HIV T-cell / virion dynamics";
        m.compartments = {"T", "I", "V"};
        m.params = {row("s", 10.0, 9.9, 10.1),
                    row("mu_T", 0.02, 0.018, 0.022),
                    row("mu_I", 0.26, 0.255, 0.265),
                    row("mu_b", 0.24, 0.235, 0.245),
                    row("mu_V", 2.4, 2.5, 2.3),
                    row("r", 0.03, 0.029, 0.031),
                    row("N", 250.0, 247.5, 252.5),
                    row("T_max", 1500.0, 1485.0, 1515.0),
                    row("k1", 2.4e-4, 2.3e-4, 2.6e-4, "printed as 2.4*10e-5"),
                    row("k1_prime", 2e-4, 1.9e-4, 2.1e-4, "printed as 2*10e-5")};
        m.default_y0 = {1000.0, 0.0, 1.0};
        m.horizon = 60.0;
        bind_rhs(m, Hiv{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "smallpox";
        m.title = "Smallpox with vaccination and quarantine";
        m.compartments = {"S", "En", "Ei", "Ci", "I", "Q", "U", "V"};
        m.params = {row("chi1", 0.06, 0.054, 0.066),
                    row("chi2", 0.04, 0.036, 0.044),
                    row("eps1", 0.975, 0.86, 1.04),
                    row("eps2", 0.3, 0.27, 0.33),
                    row("rho", 0.975, 0.86, 1.04),
                    row("theta", 0.95, 0.86, 1.04),
                    row("alpha", 0.068, 0.061, 0.075),
                    row("gamma", 0.11, 0.10, 0.12),
                    constant("beta", 3e-3, "transmission rate; not tabulated"),
                    constant("phi", 0.5, "tracing fraction; not tabulated")};
        m.default_y0 = {990.0, 0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0};
        m.population = 1000.0;
        m.horizon = 100.0;
        m.closed = true;
        bind_rhs(m, Smallpox{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "tuberculosis";
        m.title = "Tuberculosis SLIT";
        m.compartments = {"S", "L", "I", "T"};
        m.params = {row("delta", 500.0, 480.0, 520.0), row("beta", 13.0, 9.0, 15.0),   row("c", 1.0, -1.0, 3.0),
                    row("mu", 0.143, 0.1, 0.3),        row("k", 0.5, 0.0, 1.0),        row("r1", 2.0, 1.0, 3.0),
                    row("r2", 1.0, -1.0, 3.0),         row("beta_prime", 13.0, 9.0, 15.0), row("d", 0.0, -0.4, 0.4)};
        m.default_y0 = {3000.0, 100.0, 50.0, 0.0};
        m.horizon = 20.0;
        bind_rhs(m, Tuberculosis{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "pneumonia";
        m.title = "Pneumonia with vaccination and carriers";
        m.compartments = {"S", "V", "C", "I", "R"};
        m.params = {row("pi", 0.01, 0.0099, 0.011),    row("lambda", 0.1, 0.099, 0.11),
                    table_only("k", 0.5, 0.49, 0.51),  row("epsilon", 0.002, 0.001, 0.003),
                    table_only("tau", 0.89, 0.87, 0.91), row("phi", 0.0025, 0.0023, 0.0027),
                    row("chi", 0.001, 0.0009, 0.0011), row("p", 0.2, 0.19, 0.21),
                    row("theta", 0.008, 0.0075, 0.0085), row("mu", 0.01, 0.009, 0.011),
                    row("alpha", 0.057, 0.056, 0.058), row("rho", 0.05, 0.049, 0.051),
                    row("beta", 0.0115, 0.0105, 0.0125), row("eta", 0.2, 0.19, 0.21),
                    row("q", 0.5, 0.49, 0.51),         row("delta", 0.1, 0.09, 0.11)};
        m.default_y0 = {0.7, 0.1, 0.1, 0.1, 0.0};
        m.horizon = 100.0;
        bind_rhs(m, Pneumonia{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "ebola";
        m.title = "Ebola SEIHFR";
        m.compartments = {"S", "E", "I", "H", "F", "R"};
        m.params = {row("beta1", 3.532, 3.5, 3.56),
                    row("beta_h", 0.012, 0.011, 0.013),
                    row("beta_f", 0.462, 0.455, 0.465),
                    row("alpha", 1.0 / 12.0, 0.072, 0.088),
                    row("gamma_h", 1.0 / 4.2, 0.22, 0.28),
                    row("theta1", 0.65, 0.643, 0.657),
                    row("gamma_i", 0.1, 0.099, 0.11),
                    row("delta1", 0.47, 0.465, 0.475),
                    row("gamma_d", 1.0 / 8.0, 0.118, 0.122),
                    row("delta2", 0.42, 0.415, 0.425),
                    row("gamma_f", 0.5, 0.45, 0.55),
                    row("gamma_ih", 0.082, 0.081, 0.083),
                    row("gamma_dh", 0.07, 0.069, 0.071),
                    constant("N", 1000.0, "total population")};
        m.default_y0 = {990.0, 0.0, 10.0, 0.0, 0.0, 0.0};
        m.population = 1000.0;
        m.horizon = 60.0;
        m.closed = true;
        bind_rhs(m, Ebola{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "dengue";
        m.title = "Dengue host-vector";
        m.compartments = {"Sh", "Eh", "Ih", "Rh", "Sv", "Ev", "Iv"};
        m.params = {row("pi_h", 10.0, 9.9, 10.1),       row("pi_v", 30.0, 29.7, 30.3),
                    row("lambda_h", 0.055, 0.054, 0.056), table_only("lambda_v", 0.05, 0.049, 0.051),
                    row("delta_h", 0.99, 0.9, 1.1),       row("delta_v", 0.057, 0.056, 0.058),
                    row("mu_h", 0.0195, 0.0194, 0.0196),  row("mu_v", 0.016, 0.015, 0.017),
                    row("sigma_h", 0.53, 0.52, 0.54),     row("sigma_v", 0.2, 0.19, 0.21),
                    row("tau_h", 0.1, 0.05, 0.15)};
        m.default_y0 = {100.0, 10.0, 5.0, 0.0, 1000.0, 50.0, 20.0};
        m.horizon = 100.0;
        bind_rhs(m, Dengue{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "anthrax";
        m.title = "Anthrax in animal populations";
        m.compartments = {"S", "I", "A", "C"};
        m.params = {row("r", 1.0 / 300.0, 0.003, 0.0036),
                    row("mu", 1.0 / 600.0, 0.0014, 0.0018),
                    row("kappa", 0.1, 0.99, 0.11),
                    row("eta_a", 0.5, 0.49, 0.51),
                    row("eta_c", 0.1, 0.09, 0.11),
                    row("eta_i", 0.01, 0.09, 0.011),
                    row("tau", 0.1, 0.09, 0.11),
                    row("gamma", 1.0 / 7.0, 0.13, 0.15),
                    row("delta", 1.0 / 64.0, 0.03, 0.07),
                    row("K", 100.0, 98.0, 102.0),
                    row("beta", 0.02, 0.0018, 0.0022),
                    row("sigma", 0.1, 0.09, 0.11)};
        m.default_y0 = {50.0, 5.0, 10.0, 5.0};
        m.horizon = 100.0;
        bind_rhs(m, Anthrax{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "polio";
        m.title = "Polio with child and adult classes";
        m.compartments = {"Sc", "Sa", "Ic", "Ia", "Rc", "Ra"};
        m.params = {row("mu", 0.02, 0.018, 0.022),        row("alpha", 0.5, 0.495, 0.505),
                    row("gamma_a", 18.0, 17.9, 18.1),     row("gamma_c", 36.0, 35.8, 36.2),
                    row("beta_aa", 40.0, 39.0, 41.0),     row("beta_cc", 90.0, 89.0, 91.0),
                    row("beta_ac", 0.0, -0.001, 0.001),   row("beta_ca", 0.0, -0.001, 0.001)};
        m.default_y0 = {200.0, 700.0, 10.0, 10.0, 40.0, 40.0};
        m.population = 1000.0;
        m.horizon = 2.0;
        m.closed = true;
        bind_rhs(m, Polio{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "measles";
        m.title = "Measles SEI";
        m.compartments = {"S", "E", "I"};
        m.params = {row("mu", 0.02, 0.01, 0.03), row("beta", 0.28, 0.27, 0.37, "tabulated as beta_1"),
                    row("gamma", 100.0, 97.0, 103.0), row("sigma", 35.84, 33.0, 37.0),
                    constant("N", 1000.0, "total population")};
        m.default_y0 = {900.0, 50.0, 50.0};
        m.population = 1000.0;
        m.horizon = 10.0;
        bind_rhs(m, Measles{});
        reg.emplace(m.name, std::move(m));
    }
    {
        CompartmentModel m;
        m.name = "zika";
        m.title = "Zika with sexual and vector transmission";
        m.compartments = {"Sh", "Eh", "Ih1", "Ih2", "Ah", "Rh", "Sv", "Ev", "Iv"};
        m.params = {row("a", 0.5, 0.49, 0.51),
                    row("b", 0.4, 0.39, 0.41),
                    row("c", 0.5, 0.49, 0.51),
                    row("eta", 0.1, 0.09, 0.11),
                    row("beta", 0.05, 0.0495, 0.0505),
                    row("kappa", 0.6, 0.594, 0.606),
                    row("tau", 0.3, 0.27, 0.33),
                    row("theta", 18.0, 17.8, 18.2, "lower bound printed as 0.17.8"),
                    table_only("m", 5.0, 4.5, 5.5),
                    row("V_h", 1.0 / 5.0, 0.198, 0.202),
                    row("V_v", 10.0, 9.9, 10.1),
                    row("gamma_h1", 1.0 / 5.0, 0.18, 0.22),
                    row("gamma_h2", 1.0 / 64.0, 0.045, 0.055),
                    row("gamma_h", 1.0 / 7.0, 0.139, 0.141),
                    row("mu_v", 1.0 / 14.0, 0.063, 0.077),
                    constant("Nh", 1000.0, "human population"),
                    constant("Nv", 2000.0, "vector population")};
        m.default_y0 = {990.0, 0.0, 10.0, 0.0, 0.0, 0.0, 2000.0, 0.0, 10.0};
        m.population = 1000.0;
        m.horizon = 30.0;
        bind_rhs(m, Zika{});
        reg.emplace(m.name, std::move(m));
    }
    return reg;
}

const std::map<std::string, CompartmentModel, std::less<>>& registry() {
    static const auto reg = build_registry();
    return reg;
}

} // namespace

std::size_t CompartmentModel::compartment_index(std::string_view c) const {
    auto it = std::find(compartments.begin(), compartments.end(), c);
    if (it == compartments.end())
        throw Error(ErrorKind::UnknownName, "model '" + name + "' has no compartment '" + std::string(c) + "'");
    return static_cast<std::size_t>(it - compartments.begin());
}

std::size_t CompartmentModel::param_index(std::string_view p) const {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].name == p) return i;
    throw Error(ErrorKind::UnknownName, "model '" + name + "' has no parameter '" + std::string(p) + "'");
}

std::vector<double> CompartmentModel::true_values() const {
    std::vector<double> v;
    v.reserve(params.size());
    for (const auto& p : params) v.push_back(p.true_value);
    return v;
}

std::vector<std::string> CompartmentModel::param_names() const {
    std::vector<std::string> v;
    for (const auto& p : params) v.push_back(p.name);
    return v;
}

std::vector<std::string> CompartmentModel::learnable_names() const {
    std::vector<std::string> v;
    for (const auto& p : params)
        if (!p.known) v.push_back(p.name);
    return v;
}

std::vector<double> rhs_eval(const CompartmentModel& model, double t, std::span<const double> y,
                             std::span<const double> p) {
    if (y.size() != model.dim() || p.size() != model.params.size())
        throw Error(ErrorKind::Domain, "rhs_eval: state/parameter size mismatch for model '" + model.name + "'");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::isfinite(t) || !std::all_of(y.begin(), y.end(), finite) || !std::all_of(p.begin(), p.end(), finite))
        throw Error(ErrorKind::NonFiniteInput, "rhs_eval: non-finite input for model '" + model.name + "'");
    std::vector<double> dy(model.dim(), 0.0);
    model.rhs(t, y, p, dy);
    return dy;
}

const CompartmentModel& registry_get(std::string_view name) {
    const auto& reg = registry();
    auto it = reg.find(name);
    if (it == reg.end()) {
        std::string msg = "unknown model '" + std::string(name) + "'; valid names:";
        for (const auto& n : registry_names()) msg += " " + n;
        throw Error(ErrorKind::UnknownName, msg);
    }
    return it->second;
}

const std::vector<std::string>& registry_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : registry()) v.push_back(k);
        return v;
    }();
    return names;
}

nlohmann::json to_json(const CompartmentModel& model) {
    nlohmann::json j;
    j["name"] = model.name;
    j["title"] = model.title;
    j["compartments"] = model.compartments;
    j["default_y0"] = model.default_y0;
    j["horizon"] = model.horizon;
    j["closed"] = model.closed;
    if (model.population > 0.0) j["population"] = model.population;
    auto& params = j["params"] = nlohmann::json::array();
    for (const auto& p : model.params) {
        nlohmann::json e{{"name", p.name},       {"value", p.true_value}, {"lo", p.search_lo},
                         {"hi", p.search_hi},     {"known", p.known},      {"from_table", p.from_table},
                         {"range_flagged", p.range_flagged}};
        if (!p.note.empty()) e["note"] = p.note;
        params.push_back(std::move(e));
    }
    return j;
}

} // namespace dinnlab
