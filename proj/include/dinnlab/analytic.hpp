#pragma once

// Closed-form quantities of the plain SIR epidemic
//   dS/dt = -beta S I,  dI/dt = beta S I - alpha I,  dR/dt = alpha I
// and the back-of-envelope rate estimators built on them.

#include <json.hpp>

namespace dinnlab::analytic {

struct SirSummary {
    double s_infinity = 0.0;
    double i_max = 0.0;
    double ratio_beta_alpha = 0.0;
};

struct Rates {
    double beta = 0.0;
    double alpha = 0.0;
};

// Limiting susceptible count S_inf = S0 exp(-(beta/alpha)(S0 + I0 - S_inf)).
// Damped fixed-point iteration seeded at S0, bisection on (0, S0] as fallback.
double final_size(double S0, double I0, double beta, double alpha);

// Peak infected count, reached when S = alpha/beta. Requires S0 >= alpha/beta;
// below the threshold I only declines and a Domain error is thrown.
double i_max(double S0, double I0, double beta, double alpha);

// beta/alpha = ln(S0/S_inf) / (N - S_inf), for 0 < S_inf < S0 <= N.
double ratio_from_final_size(double S0, double S_inf, double N);

// One index case infecting n others a day gives beta = n/(S0 I0); removal
// within d days gives alpha = 1/d.
Rates crude_rates(double n, double S0, double I0, double d);

SirSummary summarize(double S0, double I0, double beta, double alpha);

nlohmann::json to_json(const SirSummary& s);

} // namespace dinnlab::analytic
