#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "ssv/errors.hpp"

namespace ssv {

/// Linear combination of decaying exponentials c * exp(-(i*lambda + j*gamma) t)
/// indexed by the exact integer rate pair (i, j). Every conditional moment of
/// the model is of this form away from resonance, because each moment equation
/// is a linear ODE forced by lower-order moments: integrating
/// exp(kappa(u-t)) * exp(-r u) du in closed form maps the family onto itself.
///
/// Keeping rates as integer multiples of (lambda, gamma) makes resonance
/// detection exact: an integral denominator kappa - r vanishes if and only if
/// its integer coefficients hit a singular surface such as gamma = 2 lambda.
class ExpPoly {
public:
    using Rate = std::pair<int, int>;  // rate = -(first*lambda + second*gamma)

    ExpPoly() = default;
    explicit ExpPoly(double c) { add_term(0, 0, c); }

    static ExpPoly term(int i, int j, double c) {
        ExpPoly e;
        e.add_term(i, j, c);
        return e;
    }

    void add_term(int i, int j, double c) {
        if (c == 0.0) return;
        terms_[{i, j}] += c;
    }

    ExpPoly& operator+=(const ExpPoly& o) {
        for (const auto& [r, c] : o.terms_) terms_[r] += c;
        return *this;
    }

    friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) { return a += b; }

    friend ExpPoly operator*(double k, const ExpPoly& e) {
        ExpPoly out;
        for (const auto& [r, c] : e.terms_) out.terms_[r] = k * c;
        return out;
    }

    friend ExpPoly operator*(const ExpPoly& a, const ExpPoly& b) {
        ExpPoly out;
        for (const auto& [ra, ca] : a.terms_)
            for (const auto& [rb, cb] : b.terms_)
                out.terms_[{ra.first + rb.first, ra.second + rb.second}] += ca * cb;
        return out;
    }

    /// integral_0^t exp(kappa (u - t)) f(u) du where kappa = a*lambda + b*gamma.
    /// Each term c exp(-r u) contributes c (exp(-r t) - exp(-kappa t)) / (kappa - r).
    /// Throws resonance_error when any denominator lies within relative
    /// tolerance `tol` of zero (the singularity is removable analytically but
    /// catastrophic numerically).
    ExpPoly integrate_decay(int a, int b, double lambda, double gamma,
                            double tol = 1e-6) const {
        ExpPoly out;
        for (const auto& [r, c] : terms_) {
            const int di = a - r.first;
            const int dj = b - r.second;
            const double den = di * lambda + dj * gamma;
            const double scale = std::abs(di) * lambda + std::abs(dj) * gamma;
            if (scale == 0.0 || std::abs(den) <= tol * scale)
                throw resonance_error(rate_name(di, dj));
            out.add_term(r.first, r.second, c / den);
            out.add_term(a, b, -c / den);
        }
        return out;
    }

    double eval(double lambda, double gamma, double t) const {
        double acc = 0.0;
        for (const auto& [r, c] : terms_)
            acc += c * std::exp(-(r.first * lambda + r.second * gamma) * t);
        return acc;
    }

    static std::string rate_name(int di, int dj) {
        if (dj < 0 || (dj == 0 && di < 0)) {  // canonical orientation: gamma coefficient >= 0
            di = -di;
            dj = -dj;
        }
        auto coef = [](int k, const char* sym) -> std::string {
            return (std::abs(k) == 1 ? std::string(sym)
                                     : std::to_string(std::abs(k)) + "*" + sym);
        };
        if (dj == 0 && di == 0) return "0";
        std::string name;
        if (dj != 0) name = coef(dj, "gamma_v");
        if (di != 0) {
            if (name.empty())
                name = coef(di, "lambda_s");
            else
                name += (di > 0 ? " + " : " - ") + coef(di, "lambda_s");
        }
        return name;
    }

private:
    std::map<Rate, double> terms_;
};

}  // namespace ssv
