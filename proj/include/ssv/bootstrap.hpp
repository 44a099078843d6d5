#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "ssv/errors.hpp"
#include "ssv/npsmle.hpp"
#include "ssv/params.hpp"
#include "ssv/rng.hpp"
#include "ssv/simulate.hpp"

namespace ssv {

struct BootstrapConfig {
    int n_reps = 100;             ///< desk-scale default; research-grade runs use 1000
    std::uint64_t seed = 0;       ///< master seed; per-rep streams derive from it
    TimeGrid data_grid;           ///< shape of each synthetic series
    ProcessState initial;         ///< start state of each synthetic series
    EstimatorConfig estimator;    ///< refit settings (scheme also drives data generation)
    int n_threads = 1;

    void validate() const {
        if (n_reps < 1) throw config_error("BootstrapConfig: n_reps must be >= 1");
        data_grid.validate();
        if (!initial.finite()) throw config_error("BootstrapConfig: initial state must be finite");
        if (initial.t != data_grid.t0)
            throw config_error("BootstrapConfig: initial.t must equal data_grid.t0");
        estimator.validate(3);
        if (n_threads < 1) throw config_error("BootstrapConfig: n_threads must be >= 1");
    }
};

struct BootstrapSummary {
    std::array<double, 10> point{};   ///< the parameter vector the data was generated from
    std::array<double, 10> mean{};
    std::array<double, 10> median{};
    std::array<double, 10> sd{};      ///< n-1 denominator; 0 when fewer than 2 reps converged
    std::array<bool, 10> significant{};  ///< |mean| > 2 sd
    int n_reps = 0;
    int n_failed = 0;                    ///< non-converged or degenerate reps, excluded above
    std::uint64_t seed = 0;
    std::vector<std::array<double, 10>> replicates;  ///< converged estimates, in rep order
    std::vector<int> rep_ids;                        ///< originating rep of each row above
};

namespace detail {

inline std::array<double, 10> params_to_array(const SsvParams& p) {
    std::array<double, 10> a{};
    for (int i = 0; i < 10; ++i) a[static_cast<std::size_t>(i)] = get_param(p, i);
    return a;
}

/// One replication: simulate a series at theta and refit it from the
/// moment-matching start. Fully determined by (master seed, rep index).
inline bool bootstrap_rep(const SsvParams& theta, const BootstrapConfig& cfg, int rep,
                          std::array<double, 10>& out) {
    std::uint64_t rep_master = stream_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    const std::uint64_t data_seed = stream_seed(rep_master, 0);
    const std::uint64_t crn_seed = stream_seed(rep_master, 1);

    SimConfig sim;
    sim.grid = cfg.data_grid;
    sim.n_paths = 1;
    sim.seed = data_seed;
    sim.initial = cfg.initial;
    const auto paths =
        simulate_ssv(theta, sim, ShockCorrelation::from_params(theta, cfg.estimator.scheme));
    const auto series = ObservationSeries::from_triple(paths[0]);

    EstimatorConfig est = cfg.estimator;
    est.seed = crn_seed;
    est.n_threads = 1;  // parallelism lives at the replication level
    try {
        const auto res = fit(series, est, moment_matching_init(series));
        if (!res.converged) return false;
        out = params_to_array(res.theta_hat);
        return true;
    } catch (const degenerate_sample_error&) {
        return false;
    } catch (const data_error&) {
        return false;
    }
}

}  // namespace detail

/// Parametric bootstrap: simulate n_reps series from theta_hat, refit each,
/// and summarize the converged estimates. Per-rep seeds derive from the master
/// seed by counter splitting, so permuting execution order (or changing
/// n_threads) cannot change the summary; failures are counted, not hidden.
inline BootstrapSummary bootstrap(const SsvParams& theta_hat, const BootstrapConfig& cfg) {
    theta_hat.validate();
    cfg.validate();

    std::vector<std::array<double, 10>> results(static_cast<std::size_t>(cfg.n_reps));
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(cfg.n_reps), 0);

    auto run_range = [&](int lo, int hi) {
        for (int r = lo; r < hi; ++r)
            ok[static_cast<std::size_t>(r)] =
                detail::bootstrap_rep(theta_hat, cfg, r, results[static_cast<std::size_t>(r)]) ? 1
                                                                                               : 0;
    };

    const int workers = std::min(cfg.n_threads, cfg.n_reps);
    if (workers <= 1) {
        run_range(0, cfg.n_reps);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(static_cast<std::size_t>(workers));
        const int chunk = (cfg.n_reps + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(lo + chunk, cfg.n_reps);
            pool.emplace_back([&, w, lo, hi] {
                try {
                    run_range(lo, hi);
                } catch (...) {
                    errs[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }

    BootstrapSummary summary;
    summary.point = detail::params_to_array(theta_hat);
    summary.n_reps = cfg.n_reps;
    summary.seed = cfg.seed;
    for (int r = 0; r < cfg.n_reps; ++r) {
        if (!ok[static_cast<std::size_t>(r)]) {
            ++summary.n_failed;
            continue;
        }
        summary.replicates.push_back(results[static_cast<std::size_t>(r)]);
        summary.rep_ids.push_back(r);
    }
    const std::size_t n = summary.replicates.size();
    if (n == 0) throw degenerate_sample_error("bootstrap: every replication failed to converge");

    for (int i = 0; i < 10; ++i) {
        std::vector<double> col;
        col.reserve(n);
        for (const auto& rep : summary.replicates) col.push_back(rep[static_cast<std::size_t>(i)]);
        double mean = 0.0;
        for (double x : col) mean += x;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double x : col) ss += (x - mean) * (x - mean);
        const double sd = n >= 2 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        std::sort(col.begin(), col.end());
        const double median = (n % 2 == 1) ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
        summary.mean[static_cast<std::size_t>(i)] = mean;
        summary.median[static_cast<std::size_t>(i)] = median;
        summary.sd[static_cast<std::size_t>(i)] = sd;
        summary.significant[static_cast<std::size_t>(i)] = std::abs(mean) > 2.0 * sd;
    }
    return summary;
}

}  // namespace ssv
