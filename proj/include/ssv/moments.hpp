#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ssv/errors.hpp"
#include "ssv/exppoly.hpp"
#include "ssv/params.hpp"

namespace ssv {

/// A conditional-moment query: moments of (S_t, V_t) given S_0 = s0, V_0 = v0.
struct MomentRequest {
    SsvParams params;
    double s0 = 0.0;
    double v0 = 0.0;
    double t = 0.0;

    void validate() const {
        params.validate();
        if (!std::isfinite(s0) || !std::isfinite(v0))
            throw config_error("MomentRequest: initial state must be finite");
        if (!std::isfinite(t) || t < 0.0) throw config_error("MomentRequest: t must be >= 0");
    }
};

struct MomentReport {
    double e_s = 0.0;
    double e_s2 = 0.0;
    double e_s3 = 0.0;
    double e_s4 = 0.0;
    double e_v = 0.0;
    double e_sv = 0.0;
    double e_s2v = 0.0;
    double e_v2 = 0.0;
    double var_s = 0.0;
    double var_v = 0.0;
    double cov_sv = 0.0;
    double rho_sv_t = 0.0;
};

/// The six bracketed terms of the Var(V_t) closed form, in their raw unreduced
/// shape (each term carries its growing exponential). Var(V_t) equals
/// (-a + b - c - d + e + f) * exp(-2(gamma_v + 2 lambda_s) t) / denom with
/// denom = 2 gamma_v lambda_s^2 (gamma_v - 2 lambda_s)^2 (gamma_v - lambda_s)
///         (2 gamma_v - lambda_s) (gamma_v + lambda_s) (gamma_v + 2 lambda_s).
/// Useful for testing the transcription term by term; note the raw exponentials
/// overflow for large t (lambda_s t greater than ~175), where the assembled
/// var_v from theorem1_report remains finite because it folds the prefactor in.
struct AppendixTerms {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0, f = 0.0;
};

namespace detail {

/// Relative distance check against the singular surfaces of the closed-form
/// denominators: gamma_v = 2 lambda_s, gamma_v = lambda_s, gamma_v = lambda_s/2.
inline void check_theorem_resonance(const SsvParams& p, double tol = 1e-6) {
    const double lam = p.lambda_s, gam = p.gamma_v;
    if (std::abs(gam - 2.0 * lam) <= tol * (gam + 2.0 * lam))
        throw resonance_error("gamma_v - 2*lambda_s");
    if (std::abs(gam - lam) <= tol * (gam + lam)) throw resonance_error("gamma_v - lambda_s");
    if (std::abs(2.0 * gam - lam) <= tol * (2.0 * gam + lam))
        throw resonance_error("2*gamma_v - lambda_s");
}

/// All conditional moments through (S^4, V^2) as exponential polynomials,
/// built by integrating the moment recursion analytically. Each integrand is a
/// linear combination of lower moments, hence itself an exponential polynomial,
/// and every integral is of the form int_0^t exp(kappa(u-t)) f(u) du.
struct ChainMoments {
    double lambda = 0.0, gamma = 0.0;
    ExpPoly m1, m2, m3, m4, ev, esv, es2v, ev2;

    static ChainMoments build(const MomentRequest& req) {
        const SsvParams& p = req.params;
        const double lam = p.lambda_s, gam = p.gamma_v;
        const double mu = p.mu_s, sig = p.sigma_s;
        const double muv = p.mu_v, beta = p.beta_v, sigv = p.sigma_v, rho = p.rho_sv;
        const double sbar2 = sig * sig / (2.0 * lam);
        const double d0 = req.s0 - mu;

        ChainMoments c;
        c.lambda = lam;
        c.gamma = gam;

        c.m1 = ExpPoly(mu) + ExpPoly::term(1, 0, d0);
        ExpPoly var_s = ExpPoly(sbar2) + ExpPoly::term(2, 0, -sbar2);
        c.m2 = var_s + c.m1 * c.m1;
        c.m3 = c.m1 * c.m1 * c.m1 + 3.0 * (c.m1 * var_s);
        c.m4 = c.m1 * c.m1 * c.m1 * c.m1 + 6.0 * (c.m1 * c.m1 * var_s) + 3.0 * (var_s * var_s);

        // E[(S - mu)^2], the forcing term of the variance drift
        ExpPoly x = c.m2 + (-2.0 * mu) * c.m1 + ExpPoly(mu * mu);

        ExpPoly ev_integrand = ExpPoly(muv) + beta * x;
        c.ev = ExpPoly::term(0, 1, req.v0) + ev_integrand.integrate_decay(0, 1, lam, gam);

        ExpPoly esv_integrand = (lam * mu) * c.ev + ExpPoly(sig * sigv * rho) +
                                (muv + beta * mu * mu) * c.m1 + (-2.0 * beta * mu) * c.m2 +
                                beta * c.m3;
        c.esv = ExpPoly::term(1, 1, req.s0 * req.v0) + esv_integrand.integrate_decay(1, 1, lam, gam);

        ExpPoly es2v_integrand = (2.0 * sig * sigv * rho) * c.m1 + (muv + beta * mu * mu) * c.m2 +
                                 (-2.0 * mu * beta) * c.m3 + beta * c.m4 + (2.0 * lam * mu) * c.esv +
                                 (sig * sig) * c.ev;
        c.es2v = ExpPoly::term(2, 1, req.s0 * req.s0 * req.v0) +
                 es2v_integrand.integrate_decay(2, 1, lam, gam);

        ExpPoly ev2_integrand = (2.0 * (muv + beta * mu * mu)) * c.ev + (-4.0 * beta * mu) * c.esv +
                                (2.0 * beta) * c.es2v + ExpPoly(sigv * sigv);
        c.ev2 = ExpPoly::term(0, 2, req.v0 * req.v0) + ev2_integrand.integrate_decay(0, 2, lam, gam);
        return c;
    }

    MomentReport report(double t) const {
        MomentReport r;
        r.e_s = m1.eval(lambda, gamma, t);
        r.e_s2 = m2.eval(lambda, gamma, t);
        r.e_s3 = m3.eval(lambda, gamma, t);
        r.e_s4 = m4.eval(lambda, gamma, t);
        r.e_v = ev.eval(lambda, gamma, t);
        r.e_sv = esv.eval(lambda, gamma, t);
        r.e_s2v = es2v.eval(lambda, gamma, t);
        r.e_v2 = ev2.eval(lambda, gamma, t);
        r.var_s = r.e_s2 - r.e_s * r.e_s;
        r.var_v = r.e_v2 - r.e_v * r.e_v;
        r.cov_sv = r.e_sv - r.e_s * r.e_v;
        const double vv = r.var_s * r.var_v;
        r.rho_sv_t = vv > 0.0 ? r.cov_sv / std::sqrt(vv) : std::numeric_limits<double>::quiet_NaN();
        return r;
    }
};

/// Time-free coefficients of the Var(V_t) bracket with the raw growing
/// exponentials folded against the exp(-2(gamma+2 lambda)t) prefactor, so the
/// combination is a sum of pure decays:
///   var_v * denom = -a0 e^{-2 gamma t} + b0 e^{-2 lambda t} - c0 e^{-4 lambda t}
///                  - d0 e^{-(gamma+2 lambda)t} + e0 e^{-lambda t} + f0.
struct VarVCoefficients {
    double a0 = 0.0, b0 = 0.0, c0 = 0.0, d0 = 0.0, e0 = 0.0, f0 = 0.0, denom = 1.0;
};

inline VarVCoefficients var_v_coefficients(const MomentRequest& req) {
    const SsvParams& p = req.params;
    const double lam = p.lambda_s, gam = p.gamma_v;
    const double mu = p.mu_s, sig = p.sigma_s;
    const double beta = p.beta_v, sigv = p.sigma_v, rho = p.rho_sv;
    const double s0 = req.s0;
    const double lam2 = lam * lam, gam2 = gam * gam;
    const double sig2 = sig * sig, sigv2 = sigv * sigv;

    VarVCoefficients k;
    k.a0 = lam2 * (gam2 + 3.0 * gam * lam + 2.0 * lam2) *
           (2.0 * beta * beta * sig2 * (2.0 * gam - lam) * (2.0 * gam * mu * mu - sig2) +
            8.0 * beta * gam * mu * rho * sig * sigv * (gam2 - 3.0 * gam * lam + 2.0 * lam2) +
            sigv2 * (gam - 2.0 * lam) * (gam - 2.0 * lam) * (2.0 * gam2 - 3.0 * gam * lam + lam2) +
            4.0 * beta * beta * gam * s0 * s0 * sig2 * (2.0 * gam - lam) -
            8.0 * beta * gam * s0 * sig *
                (beta * mu * sig * (2.0 * gam - lam) +
                 rho * sigv * (gam2 - 3.0 * gam * lam + 2.0 * lam2)));
    k.b0 = 2.0 * beta * beta * sig2 *
           (2.0 * gam2 * gam + 5.0 * gam2 * lam + gam * lam2 - 2.0 * lam2 * lam) *
           (gam - 2.0 * lam) * (gam - 2.0 * lam) *
           (2.0 * lam * mu * mu + 2.0 * lam * s0 * s0 - 4.0 * lam * mu * s0 - sig2);
    k.c0 = beta * beta * gam * sig2 *
           (2.0 * gam2 * gam2 + 3.0 * gam2 * gam * lam - 4.0 * gam2 * lam2 - 3.0 * gam * lam2 * lam +
            2.0 * lam2 * lam2) *
           (4.0 * lam * mu * mu + 4.0 * lam * s0 * s0 - 8.0 * lam * mu * s0 - sig2);
    k.d0 = 8.0 * beta * lam2 * sig * (2.0 * gam2 - 3.0 * gam * lam + lam2) *
           (2.0 * beta * sig *
                (-gam2 * mu * mu + gam * (sig2 - 3.0 * lam * mu * mu) +
                 lam * (sig2 - 2.0 * lam * mu * mu)) -
            gam * mu * rho * sigv * (gam2 - 4.0 * lam2) -
            2.0 * beta * s0 * s0 * sig * (gam2 + 3.0 * gam * lam + 2.0 * lam2) +
            s0 * (gam + 2.0 * lam) *
                (4.0 * beta * mu * sig * (gam + lam) + gam * rho * sigv * (gam - 2.0 * lam)));
    k.e0 = 8.0 * beta * gam * lam2 * rho * sig * sigv * (gam2 + gam * lam - 2.0 * lam2) *
           (gam - 2.0 * lam) * (gam - 2.0 * lam) * (s0 - mu);
    k.f0 = (2.0 * gam2 * gam - gam2 * lam - 2.0 * gam * lam2 + lam2 * lam) * (gam - 2.0 * lam) *
           (gam - 2.0 * lam) * (beta * beta * sig2 * sig2 + lam2 * sigv2 * (gam + 2.0 * lam));
    k.denom = 2.0 * gam * lam2 * (gam - 2.0 * lam) * (gam - 2.0 * lam) * (gam - lam) *
              (2.0 * gam - lam) * (gam + lam) * (gam + 2.0 * lam);
    return k;
}

/// E[V_t] from the direct closed form, prefactor folded into each exponential.
inline double theorem_mean_v(const MomentRequest& req) {
    const SsvParams& p = req.params;
    const double lam = p.lambda_s, gam = p.gamma_v, mu = p.mu_s, sig2 = p.sigma_s * p.sigma_s;
    const double beta = p.beta_v, muv = p.mu_v;
    const double s0 = req.s0, v0 = req.v0, t = req.t;
    const double den = 2.0 * gam * lam * (gam - 2.0 * lam);
    const double term_2lam =
        beta * gam * (2.0 * lam * mu * mu + 2.0 * lam * s0 * s0 - 4.0 * lam * mu * s0 - sig2);
    const double term_gam =
        -2.0 * lam *
        (beta * gam * mu * mu - beta * sig2 + gam * muv - 2.0 * lam * muv + beta * gam * s0 * s0 -
         2.0 * beta * gam * mu * s0 - gam * v0 * (gam - 2.0 * lam));
    const double term_const = (gam - 2.0 * lam) * (beta * sig2 + 2.0 * lam * muv);
    return (term_2lam * std::exp(-2.0 * lam * t) + term_gam * std::exp(-gam * t) + term_const) /
           den;
}

/// Cov(S_t, V_t) from the direct closed form, prefactor folded likewise.
inline double theorem_cov_sv(const MomentRequest& req) {
    const SsvParams& p = req.params;
    const double lam = p.lambda_s, gam = p.gamma_v, mu = p.mu_s, sig = p.sigma_s;
    const double beta = p.beta_v, sigv = p.sigma_v, rho = p.rho_sv;
    const double s0 = req.s0, t = req.t;
    const double den = gam * lam * (gam - 2.0 * lam) * (gam + lam);
    const double t1 = beta * sig * (gam * gam - gam * lam - 2.0 * lam * lam) * (s0 - mu);
    const double t2 = lam * (-2.0 * beta * mu * sig * (gam + lam) -
                             gam * rho * sigv * (gam - 2.0 * lam) +
                             2.0 * beta * s0 * sig * (gam + lam));
    const double t3 = -beta * gam * sig * (gam + lam) * (s0 - mu);
    const double t4 = gam * lam * rho * sigv * (gam - 2.0 * lam);
    return sig *
           (t1 * std::exp(-lam * t) + t2 * std::exp(-(gam + lam) * t) +
            t3 * std::exp(-3.0 * lam * t) + t4) /
           den;
}

inline void check_close(double chain, double theorem, double cancel_scale, const char* what) {
    const double tol =
        1e-8 * std::max(std::abs(chain), std::abs(theorem)) + 1e-12 * std::abs(cancel_scale);
    if (!(std::abs(chain - theorem) <= tol))
        throw consistency_error(std::string("moment cross-check failed for ") + what +
                                ": chain route " + std::to_string(chain) + " vs direct route " +
                                std::to_string(theorem));
}

}  // namespace detail

struct SentimentMoments {
    double e_s = 0.0, e_s2 = 0.0, e_s3 = 0.0, e_s4 = 0.0;
};

/// First four moments of the sentiment OU process (exact, Gaussian).
inline SentimentMoments sentiment_moments(const MomentRequest& req) {
    req.validate();
    const SsvParams& p = req.params;
    const double decay = std::exp(-p.lambda_s * req.t);
    const double m = req.s0 * decay + p.mu_s * (1.0 - decay);
    const double var =
        p.sigma_s * p.sigma_s / (2.0 * p.lambda_s) * (1.0 - decay * decay);
    SentimentMoments out;
    out.e_s = m;
    out.e_s2 = var + m * m;
    out.e_s3 = m * (m * m + 3.0 * var);
    out.e_s4 = m * m * m * m + 6.0 * m * m * var + 3.0 * var * var;
    return out;
}

/// E[V_t | S_0, V_0]: the variance-drift integral, integrated analytically.
inline double mean_v(const MomentRequest& req) {
    req.validate();
    auto chain = detail::ChainMoments::build(req);
    return chain.ev.eval(chain.lambda, chain.gamma, req.t);
}

/// E[S_t V_t | S_0, V_0].
inline double cross_moment_sv(const MomentRequest& req) {
    req.validate();
    auto chain = detail::ChainMoments::build(req);
    return chain.esv.eval(chain.lambda, chain.gamma, req.t);
}

/// E[V_t^2 | S_0, V_0].
inline double second_moment_v(const MomentRequest& req) {
    req.validate();
    auto chain = detail::ChainMoments::build(req);
    return chain.ev2.eval(chain.lambda, chain.gamma, req.t);
}

/// The raw unreduced Var(V_t) bracket terms; see AppendixTerms. Throws
/// overflow_error when the growing exponentials leave double range.
inline AppendixTerms appendix_terms(const MomentRequest& req) {
    req.validate();
    detail::check_theorem_resonance(req.params);
    const auto k = detail::var_v_coefficients(req);
    const double lam = req.params.lambda_s, gam = req.params.gamma_v, t = req.t;
    AppendixTerms out;
    out.a = k.a0 * std::exp(4.0 * lam * t);
    out.b = k.b0 * std::exp(2.0 * (gam + lam) * t);
    out.c = k.c0 * std::exp(2.0 * gam * t);
    out.d = k.d0 * std::exp((gam + 2.0 * lam) * t);
    out.e = k.e0 * std::exp((2.0 * gam + 3.0 * lam) * t);
    out.f = k.f0 * std::exp(2.0 * (gam + 2.0 * lam) * t);
    if (!(std::isfinite(out.a) && std::isfinite(out.b) && std::isfinite(out.c) &&
          std::isfinite(out.d) && std::isfinite(out.e) && std::isfinite(out.f)))
        throw overflow_error(
            "appendix_terms: raw bracket exponentials overflow at t = " + std::to_string(t) +
            "; use theorem1_report, which folds the prefactor");
    return out;
}

/// Full moment report at time t > 0. The headline quantities are evaluated
/// from the direct closed forms AND re-derived through the proposition
/// chain; any disagreement beyond 1e-8 relative is a hard consistency
/// error. Raw higher moments come from the chain.
inline MomentReport theorem1_report(const MomentRequest& req) {
    req.validate();
    if (!(req.t > 0.0)) throw config_error("theorem1_report: t must be > 0");
    detail::check_theorem_resonance(req.params);

    auto chain = detail::ChainMoments::build(req);
    MomentReport r = chain.report(req.t);

    const double ev_direct = detail::theorem_mean_v(req);
    const auto k = detail::var_v_coefficients(req);
    const double lam = req.params.lambda_s, gam = req.params.gamma_v, t = req.t;
    const double var_v_direct =
        (-k.a0 * std::exp(-2.0 * gam * t) + k.b0 * std::exp(-2.0 * lam * t) -
         k.c0 * std::exp(-4.0 * lam * t) - k.d0 * std::exp(-(gam + 2.0 * lam) * t) +
         k.e0 * std::exp(-lam * t) + k.f0) /
        k.denom;
    const double cov_direct = detail::theorem_cov_sv(req);
    const double var_s_direct = req.params.sigma_s * req.params.sigma_s /
                                (2.0 * req.params.lambda_s) *
                                (1.0 - std::exp(-2.0 * lam * t));

    detail::check_close(r.e_v, ev_direct, std::abs(req.v0) + std::abs(r.e_v), "E[V_t]");
    detail::check_close(r.var_s, var_s_direct, r.e_s2, "Var(S_t)");
    detail::check_close(r.var_v, var_v_direct, std::abs(r.e_v2) + r.e_v * r.e_v, "Var(V_t)");
    detail::check_close(r.cov_sv, cov_direct,
                        std::abs(r.e_sv) + std::abs(r.e_s * r.e_v), "Cov(S_t,V_t)");

    r.e_v = ev_direct;
    r.var_s = var_s_direct;
    r.var_v = var_v_direct;
    r.cov_sv = cov_direct;
    const double vv = r.var_s * r.var_v;
    if (!(vv > 0.0))
        throw degenerate_sample_error("theorem1_report: degenerate variance at t = " +
                                      std::to_string(t));
    r.rho_sv_t = r.cov_sv / std::sqrt(vv);
    return r;
}

/// corr(S_t, V_t) from the closed-form co-moments. Degenerate (zero variance)
/// at t = 0 by construction, which is an error.
inline double correlation_sv(const MomentRequest& req) {
    if (req.t == 0.0)
        throw degenerate_sample_error("correlation_sv: Var(S_0) = Var(V_0) = 0 at t = 0");
    return theorem1_report(req).rho_sv_t;
}

/// The proposition-chain evaluation on its own (every entry from the analytic
/// integrals, none from the direct closed-form transcription). Exposed for
/// diagnostics and oracle tests.
inline MomentReport proposition_chain_report(const MomentRequest& req) {
    req.validate();
    auto chain = detail::ChainMoments::build(req);
    return chain.report(req.t);
}

}  // namespace ssv
