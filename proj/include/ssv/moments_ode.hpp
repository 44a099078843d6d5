#pragma once

// Numerical fallback for the conditional moments: the same moment recursion
// the closed forms come from, integrated as an 8-dimensional linear ODE
// system with an adaptive Runge-Kutta stepper. Works on and off the
// resonance surfaces where the closed forms blow up, at the cost of speed.

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "ssv/errors.hpp"
#include "ssv/moments.hpp"
#include "ssv/params.hpp"

namespace ssv {

namespace detail {

using MomentVector = std::array<double, 8>;

// State layout: (E[S], E[S^2], E[S^3], E[S^4], E[V], E[SV], E[S^2 V], E[V^2]).
struct MomentOdeSystem {
    SsvParams p;

    void operator()(const MomentVector& y, MomentVector& dy, double /*t*/) const {
        const double lam = p.lambda_s, mu = p.mu_s, sig2 = p.sigma_s * p.sigma_s;
        const double gam = p.gamma_v, muv = p.mu_v, beta = p.beta_v;
        const double sv2 = p.sigma_v * p.sigma_v;
        const double cs = p.sigma_s * p.sigma_v * p.rho_sv;
        dy[0] = lam * (mu - y[0]);
        dy[1] = 2.0 * lam * mu * y[0] - 2.0 * lam * y[1] + sig2;
        dy[2] = 3.0 * lam * mu * y[1] - 3.0 * lam * y[2] + 3.0 * sig2 * y[0];
        dy[3] = 4.0 * lam * mu * y[2] - 4.0 * lam * y[3] + 6.0 * sig2 * y[1];
        dy[4] = muv + beta * (y[1] - 2.0 * mu * y[0] + mu * mu) - gam * y[4];
        dy[5] = lam * mu * y[4] + cs + (muv + beta * mu * mu) * y[0] - 2.0 * beta * mu * y[1] +
                beta * y[2] - (gam + lam) * y[5];
        dy[6] = 2.0 * cs * y[0] + (muv + beta * mu * mu) * y[1] - 2.0 * mu * beta * y[2] +
                beta * y[3] + 2.0 * lam * mu * y[5] + sig2 * y[4] - (gam + 2.0 * lam) * y[6];
        dy[7] = 2.0 * (muv + beta * mu * mu) * y[4] - 4.0 * beta * mu * y[5] + 2.0 * beta * y[6] +
                sv2 - 2.0 * gam * y[7];
    }
};

}  // namespace detail

/// Conditional moments by direct numerical integration of the moment ODEs.
/// Independent of the closed forms (shares only the drift coefficients), so
/// it serves as an oracle for them and as the fallback near resonance.
inline MomentReport moments_by_ode(const MomentRequest& req, double tol = 1e-10) {
    req.validate();
    namespace odeint = boost::numeric::odeint;

    detail::MomentVector y = {req.s0,
                              req.s0 * req.s0,
                              req.s0 * req.s0 * req.s0,
                              req.s0 * req.s0 * req.s0 * req.s0,
                              req.v0,
                              req.s0 * req.v0,
                              req.s0 * req.s0 * req.v0,
                              req.v0 * req.v0};
    if (req.t > 0.0) {
        auto stepper = odeint::make_controlled(tol, tol,
                                               odeint::runge_kutta_dopri5<detail::MomentVector>());
        const double dt0 = std::min(req.t, 1e-3 / std::max(1.0, req.params.lambda_s));
        odeint::integrate_adaptive(stepper, detail::MomentOdeSystem{req.params}, y, 0.0, req.t,
                                   dt0);
    }
    for (double yi : y)
        if (!std::isfinite(yi))
            throw overflow_error("moments_by_ode: non-finite moment during integration");

    MomentReport r;
    r.e_s = y[0];
    r.e_s2 = y[1];
    r.e_s3 = y[2];
    r.e_s4 = y[3];
    r.e_v = y[4];
    r.e_sv = y[5];
    r.e_s2v = y[6];
    r.e_v2 = y[7];
    r.var_s = r.e_s2 - r.e_s * r.e_s;
    r.var_v = r.e_v2 - r.e_v * r.e_v;
    r.cov_sv = r.e_sv - r.e_s * r.e_v;
    const double vv = r.var_s * r.var_v;
    r.rho_sv_t = vv > 0.0 ? r.cov_sv / std::sqrt(vv) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

}  // namespace ssv
