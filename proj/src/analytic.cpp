#include "dinnlab/analytic.hpp"

#include <cmath>
#include <limits>

#include "dinnlab/error.hpp"

namespace dinnlab::analytic {

namespace {

constexpr int kFixedPointCap = 20000;
constexpr int kBisectionCap = 400;

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::Domain, what);
}

} // namespace

double final_size(double S0, double I0, double beta, double alpha) {
    require(std::isfinite(S0) && std::isfinite(I0) && std::isfinite(beta) && std::isfinite(alpha),
            "final_size: non-finite input");
    require(S0 > 0.0 && I0 >= 0.0 && alpha > 0.0 && beta > 0.0,
            "final_size: need S0 > 0, I0 >= 0, alpha > 0, beta > 0");
    const double r = beta / alpha;
    const double total = S0 + I0;
    auto map = [&](double x) { return S0 * std::exp(-r * (total - x)); };
    const double tol = 1e-12 * S0;

    double x = S0;
    for (int k = 0; k < kFixedPointCap; ++k) {
        const double next = 0.5 * x + 0.5 * map(x);
        const double dx = next - x;
        x = next;
        if (std::abs(dx) < tol) break;
    }
    if (std::abs(x - map(x)) <= 1e-10 * S0 && x > 0.0 && x <= S0) return x;

    // f(x) = x - map(x) is negative at 0 and non-negative at S0.
    double lo = 0.0, hi = S0;
    if (hi - map(hi) < 0.0) throw Error(ErrorKind::NumericFailure, "final_size: no root bracketed on (0, S0]");
    for (int k = 0; k < kBisectionCap && hi - lo > tol * 1e-3; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid - map(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    x = 0.5 * (lo + hi);
    if (!(std::abs(x - map(x)) <= 1e-10 * S0))
        throw Error(ErrorKind::NumericFailure, "final_size: did not converge");
    return x;
}

double i_max(double S0, double I0, double beta, double alpha) {
    require(S0 > 0.0 && I0 >= 0.0 && alpha > 0.0 && beta > 0.0, "i_max: need S0 > 0, I0 >= 0, alpha > 0, beta > 0");
    const double threshold = alpha / beta;
    if (S0 < threshold) throw Error(ErrorKind::Domain, "i_max: S0 below alpha/beta, infected count only declines");
    // -rho + rho ln(rho) + I0 + S0 - rho ln(S0), grouped so S0 == rho gives I0 exactly.
    return I0 + (S0 - threshold) - threshold * std::log(S0 / threshold);
}

double ratio_from_final_size(double S0, double S_inf, double N) {
    require(S_inf > 0.0, "ratio_from_final_size: S_inf must be positive");
    require(S_inf < S0, "ratio_from_final_size: S_inf must be below S0");
    require(S0 <= N, "ratio_from_final_size: S0 must not exceed N");
    return std::log(S0 / S_inf) / (N - S_inf);
}

Rates crude_rates(double n, double S0, double I0, double d) {
    require(n > 0.0 && d > 0.0, "crude_rates: need n > 0 and d > 0");
    require(S0 != 0.0 && I0 != 0.0, "crude_rates: S0 and I0 must be non-zero");
    return {n / (S0 * I0), 1.0 / d};
}

SirSummary summarize(double S0, double I0, double beta, double alpha) {
    SirSummary s;
    s.s_infinity = final_size(S0, I0, beta, alpha);
    s.i_max = S0 >= alpha / beta ? i_max(S0, I0, beta, alpha) : I0;
    s.ratio_beta_alpha = beta / alpha;
    return s;
}

nlohmann::json to_json(const SirSummary& s) {
    return {{"s_infinity", s.s_infinity}, {"i_max", s.i_max}, {"ratio_beta_alpha", s.ratio_beta_alpha}};
}

} // namespace dinnlab::analytic
