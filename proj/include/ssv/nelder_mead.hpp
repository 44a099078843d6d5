#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "ssv/errors.hpp"

namespace ssv {

struct TracePoint {
    int n_eval = 0;
    double f = 0.0;
    std::vector<double> x;
};

struct NelderMeadOptions {
    int max_evals = 500;
    double f_tol = 1e-8;       ///< relative spread of simplex function values
    double x_tol = 1e-6;       ///< relative spread of simplex vertices
    double initial_step = 0.25;
    int n_restarts = 2;        ///< extra simplex rebuilds around the incumbent
    bool record_trace = true;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int n_evals = 0;
    bool converged = false;
    std::vector<TracePoint> trace;
};

/// Downhill simplex minimizer (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2) with restarts: each time the simplex collapses within
/// tolerance, it is rebuilt around the best vertex with half the step, which
/// guards against premature collapse on kernel-noise curvature. converged
/// reports whether the final simplex met both tolerances within the
/// evaluation budget; the best-so-far point is returned either way.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, const NelderMeadOptions& opt) {
    const std::size_t n = x0.size();
    if (n == 0) throw config_error("nelder_mead: empty start point");
    if (opt.max_evals < static_cast<int>(n) + 1)
        throw config_error("nelder_mead: max_evals too small for one simplex");
    if (!(opt.initial_step > 0.0)) throw config_error("nelder_mead: initial_step must be > 0");

    NelderMeadResult res;
    res.x = x0;

    auto eval = [&](const std::vector<double>& x) {
        const double fx = f(x);
        ++res.n_evals;
        if (res.n_evals == 1 || fx < res.f) {
            res.f = fx;
            res.x = x;
            if (opt.record_trace) res.trace.push_back({res.n_evals, fx, x});
        }
        return fx;
    };

    std::vector<std::vector<double>> simplex;
    std::vector<double> fx;

    auto build_simplex = [&](const std::vector<double>& center, double step) {
        simplex.assign(n + 1, center);
        fx.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
        for (std::size_t i = 0; i <= n; ++i) fx[i] = eval(simplex[i]);
    };

    auto spread_ok = [&](std::size_t best, std::size_t worst) {
        const double fspread = std::abs(fx[worst] - fx[best]);
        if (fspread > opt.f_tol * (std::abs(fx[best]) + opt.f_tol)) return false;
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double d = std::abs(simplex[i][j] - simplex[best][j]);
                if (d > opt.x_tol * (1.0 + std::abs(simplex[best][j]))) return false;
            }
        }
        return true;
    };

    double step = opt.initial_step;
    build_simplex(x0, step);

    int restarts_left = std::max(0, opt.n_restarts);
    bool converged = false;
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);

    while (res.n_evals < opt.max_evals) {
        // order: best, second-worst, worst
        std::size_t best = 0, worst = 0, second = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            if (fx[i] < fx[best]) best = i;
            if (fx[i] > fx[worst]) worst = i;
        }
        second = best;
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst && fx[i] > fx[second]) second = i;

        if (spread_ok(best, worst)) {
            if (restarts_left == 0 || res.n_evals + static_cast<int>(n) + 1 > opt.max_evals) {
                converged = true;
                break;
            }
            --restarts_left;
            step *= 0.5;
            build_simplex(simplex[best], step);
            continue;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (std::size_t j = 0; j < n; ++j) centroid[j] /= static_cast<double>(n);

        for (std::size_t j = 0; j < n; ++j) xr[j] = 2.0 * centroid[j] - simplex[worst][j];
        const double fr = eval(xr);

        if (fr < fx[best]) {
            for (std::size_t j = 0; j < n; ++j) xe[j] = 3.0 * centroid[j] - 2.0 * simplex[worst][j];
            const double fe = res.n_evals < opt.max_evals ? eval(xe) : fr;
            if (fe < fr) {
                simplex[worst] = xe;
                fx[worst] = fe;
            } else {
                simplex[worst] = xr;
                fx[worst] = fr;
            }
        } else if (fr < fx[second]) {
            simplex[worst] = xr;
            fx[worst] = fr;
        } else {
            const bool outside = fr < fx[worst];
            if (outside) {
                for (std::size_t j = 0; j < n; ++j) xc[j] = 0.5 * (centroid[j] + xr[j]);
            } else {
                for (std::size_t j = 0; j < n; ++j)
                    xc[j] = 0.5 * (centroid[j] + simplex[worst][j]);
            }
            if (res.n_evals >= opt.max_evals) break;
            const double fc = eval(xc);
            if (fc < std::min(fr, fx[worst])) {
                simplex[worst] = xc;
                fx[worst] = fc;
            } else {
                // shrink everything toward the best vertex
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = 0.5 * (simplex[i][j] + simplex[best][j]);
                    if (res.n_evals >= opt.max_evals) break;
                    fx[i] = eval(simplex[i]);
                }
            }
        }
    }

    res.converged = converged;
    return res;
}

}  // namespace ssv
