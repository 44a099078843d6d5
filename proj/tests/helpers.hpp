#pragma once

#include <random>

#include <ssv/params.hpp>

namespace test {

/// The full-sample reference parameter estimates used as the anchor point
/// throughout the suite.
inline ssv::SsvParams table_params() {
    ssv::SsvParams p;
    p.lambda_s = 37.76;
    p.mu_s = 0.203;
    p.sigma_s = 0.916;
    p.mu_p = 0.0388;
    p.mu_v = -0.148;
    p.gamma_v = 0.049;
    p.beta_v = 1.86;
    p.sigma_v = 0.379;
    p.rho_pv = -0.89;
    p.rho_sv = -0.025;
    return p;
}

/// Random valid parameter set away from the closed-form resonance surfaces
/// (gamma = 2 lambda, gamma = lambda, gamma = lambda/2).
inline ssv::SsvParams random_params(std::mt19937_64& eng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ssv::SsvParams p;
    for (;;) {
        p.lambda_s = 0.5 + 6.0 * u(eng);
        p.gamma_v = 0.05 + 3.0 * u(eng);
        const double g = p.gamma_v, l = p.lambda_s;
        if (std::abs(g - 2 * l) > 0.05 * (g + 2 * l) && std::abs(g - l) > 0.05 * (g + l) &&
            std::abs(2 * g - l) > 0.05 * (2 * g + l))
            break;
    }
    p.mu_s = -0.5 + u(eng);
    p.sigma_s = 0.2 + 1.5 * u(eng);
    p.mu_p = -0.1 + 0.2 * u(eng);
    p.mu_v = -0.5 + 0.4 * u(eng);
    p.beta_v = 2.5 * u(eng);
    p.sigma_v = 0.1 + 0.6 * u(eng);
    p.rho_pv = -0.95 + 1.9 * u(eng);
    p.rho_sv = -0.95 + 1.9 * u(eng);
    return p;
}

}  // namespace test
