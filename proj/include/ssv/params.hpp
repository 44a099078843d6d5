#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "ssv/errors.hpp"

namespace ssv {

/// Parameters of the joint sentiment / log-price / log-variance model
///
///   dS = lambda_s (mu_s - S) dt + sigma_s dW_s
///   dP = (mu_p - exp(V)/2) dt + exp(V/2) dW_p
///   dV = (mu_v + beta_v (S - mu_s)^2 - gamma_v V) dt + sigma_v dW_v
///
/// with corr(dW_p, dW_v) = rho_pv and corr(dW_s, dW_v) = rho_sv.
/// All rates are per unit of model time; the bar width dt that maps calendar
/// bars onto model time is a grid/config value and never lives here.
struct SsvParams {
    double lambda_s = 0.0;  ///< sentiment mean-reversion speed, > 0
    double mu_s = 0.0;      ///< sentiment long-run mean
    double sigma_s = 0.0;   ///< sentiment volatility, > 0
    double mu_p = 0.0;      ///< log-price drift
    double mu_v = 0.0;      ///< log-variance drift intercept
    double gamma_v = 0.0;   ///< log-variance mean-reversion speed, > 0
    double beta_v = 0.0;    ///< sentiment-dispersion loading on variance
    double sigma_v = 0.0;   ///< log-variance volatility, > 0
    double rho_pv = 0.0;    ///< corr(price shock, variance shock), in (-1, 1)
    double rho_sv = 0.0;    ///< corr(sentiment shock, variance shock), in (-1, 1)

    /// Throws config_error unless all fields are finite, the rate/scale
    /// parameters are strictly positive, and correlations lie in (-1, 1).
    /// beta_v may take any sign (negativity is reported, not rejected):
    /// see beta_v_nonnegative().
    void validate() const {
        auto fin = [](double x) { return std::isfinite(x); };
        if (!(fin(lambda_s) && fin(mu_s) && fin(sigma_s) && fin(mu_p) && fin(mu_v) &&
              fin(gamma_v) && fin(beta_v) && fin(sigma_v) && fin(rho_pv) && fin(rho_sv)))
            throw config_error("SsvParams: all parameters must be finite");
        if (!(lambda_s > 0.0)) throw config_error("SsvParams: lambda_s must be > 0");
        if (!(sigma_s > 0.0)) throw config_error("SsvParams: sigma_s must be > 0");
        if (!(gamma_v > 0.0)) throw config_error("SsvParams: gamma_v must be > 0");
        if (!(sigma_v > 0.0)) throw config_error("SsvParams: sigma_v must be > 0");
        if (!(rho_pv > -1.0 && rho_pv < 1.0))
            throw config_error("SsvParams: rho_pv must be in (-1, 1)");
        if (!(rho_sv > -1.0 && rho_sv < 1.0))
            throw config_error("SsvParams: rho_sv must be in (-1, 1)");
    }

    bool is_valid() const {
        try {
            validate();
            return true;
        } catch (const config_error&) {
            return false;
        }
    }

    /// The variance equation admits beta_v < 0 mathematically; estimates are
    /// expected to be positive. This flag lets callers report sign violations
    /// without rejecting the parameter point.
    bool beta_v_nonnegative() const noexcept { return beta_v >= 0.0; }
};

/// State of the process triple at time t. For sentiment-only (OU) uses,
/// p and v are ignored.
struct ProcessState {
    double s = 0.0;
    double p = 0.0;
    double v = 0.0;
    double t = 0.0;

    bool finite() const noexcept {
        return std::isfinite(s) && std::isfinite(p) && std::isfinite(v) && std::isfinite(t);
    }
};

/// Uniform bar grid with Euler substeps: bar k spans [t0 + k dt, t0 + (k+1) dt],
/// each bar integrated with m_substeps Euler steps of width dt / m_substeps.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::int64_t n_bars = 0;
    int m_substeps = 1;

    void validate() const {
        if (!std::isfinite(t0)) throw config_error("TimeGrid: t0 must be finite");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw config_error("TimeGrid: dt must be > 0");
        if (n_bars < 1) throw config_error("TimeGrid: n_bars must be >= 1");
        if (m_substeps < 1) throw config_error("TimeGrid: m_substeps must be >= 1");
    }

    double substep() const noexcept { return dt / m_substeps; }
    double time_at(std::int64_t bar) const noexcept { return t0 + bar * dt; }
};

namespace detail {
inline const char* const kParamNames[10] = {"lambda_s", "mu_s",    "sigma_s", "mu_p",
                                            "mu_v",     "gamma_v", "beta_v",  "sigma_v",
                                            "rho_pv",   "rho_sv"};
}

/// Flat JSON object with exactly the ten parameter field names.
inline nlohmann::json to_json(const SsvParams& p) {
    return nlohmann::json{{"lambda_s", p.lambda_s}, {"mu_s", p.mu_s},
                          {"sigma_s", p.sigma_s},   {"mu_p", p.mu_p},
                          {"mu_v", p.mu_v},         {"gamma_v", p.gamma_v},
                          {"beta_v", p.beta_v},     {"sigma_v", p.sigma_v},
                          {"rho_pv", p.rho_pv},     {"rho_sv", p.rho_sv}};
}

/// Parses the flat ten-field object. Missing fields, non-numeric values and
/// unknown keys are data errors; the result is validated before returning.
inline SsvParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw data_error("parameter JSON must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* name : detail::kParamNames)
            if (it.key() == name) {
                known = true;
                break;
            }
        if (!known) throw data_error("parameter JSON has unknown key '" + it.key() + "'");
    }
    SsvParams p;
    auto get = [&j](const char* name) {
        if (!j.contains(name))
            throw data_error(std::string("parameter JSON is missing key '") + name + "'");
        const auto& v = j.at(name);
        if (!v.is_number())
            throw data_error(std::string("parameter JSON key '") + name + "' must be a number");
        return v.get<double>();
    };
    p.lambda_s = get("lambda_s");
    p.mu_s = get("mu_s");
    p.sigma_s = get("sigma_s");
    p.mu_p = get("mu_p");
    p.mu_v = get("mu_v");
    p.gamma_v = get("gamma_v");
    p.beta_v = get("beta_v");
    p.sigma_v = get("sigma_v");
    p.rho_pv = get("rho_pv");
    p.rho_sv = get("rho_sv");
    p.validate();
    return p;
}

}  // namespace ssv
