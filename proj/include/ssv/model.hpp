#pragma once

#include <cmath>
#include <string>

#include "ssv/errors.hpp"
#include "ssv/params.hpp"

namespace ssv {

struct DriftRates {
    double ds = 0.0;
    double dp = 0.0;
    double dv = 0.0;
};

struct DiffusionRates {
    double gs = 0.0;
    double gp = 0.0;
    double gv = 0.0;
};

/// Instantaneous drift of (S, P, V). Pure; callers are expected to have
/// validated params, but non-finite state or an exp overflow is always caught.
inline DriftRates drift(const ProcessState& x, const SsvParams& p) {
    if (!x.finite()) throw overflow_error("drift: non-finite state");
    DriftRates d;
    d.ds = p.lambda_s * (p.mu_s - x.s);
    const double dev = x.s - p.mu_s;
    d.dv = p.mu_v + p.beta_v * dev * dev - p.gamma_v * x.v;
    d.dp = p.mu_p - 0.5 * std::exp(x.v);
    if (!std::isfinite(d.dp))
        throw overflow_error("drift: dp overflow in exp(v) at v = " + std::to_string(x.v));
    return d;
}

/// Instantaneous diffusion coefficients of (S, P, V); the price loading is
/// exp(V/2), the spot volatility.
inline DiffusionRates diffusion(const ProcessState& x, const SsvParams& p) {
    if (!x.finite()) throw overflow_error("diffusion: non-finite state");
    DiffusionRates g;
    g.gs = p.sigma_s;
    g.gv = p.sigma_v;
    g.gp = std::exp(0.5 * x.v);
    if (!std::isfinite(g.gp))
        throw overflow_error("diffusion: gp overflow in exp(v/2) at v = " + std::to_string(x.v));
    return g;
}

/// The value of mu_p under which the price drift balances half the stationary
/// variance level: exp(mu_v/gamma_v + sigma_s^2/(2 lambda_s)) / 2. Useful as a
/// diagnostic for whether an estimated mu_p is consistent with stationarity of
/// the variance equation.
inline double stationary_mu_p(const SsvParams& p) {
    p.validate();
    return 0.5 * std::exp(p.mu_v / p.gamma_v + p.sigma_s * p.sigma_s / (2.0 * p.lambda_s));
}

}  // namespace ssv
