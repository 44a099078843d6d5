#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "ssv/errors.hpp"
#include "ssv/kde.hpp"
#include "ssv/nelder_mead.hpp"
#include "ssv/params.hpp"
#include "ssv/simulate.hpp"

namespace ssv {

/// Observed bar-endpoint series. channels = 1 carries sentiment only;
/// channels = 3 carries (sentiment, log price, log variance). Rows live on the
/// uniform grid; when bars were dropped upstream (missing data), row_index
/// records each row's position on that grid so that transitions spanning a
/// gap can be excluded rather than mis-measured against a single-bar dt.
struct ObservationSeries {
    TimeGrid grid;                        ///< grid.n_bars == n_rows() - 1
    int channels = 3;
    std::vector<double> values;           ///< row-major, n_rows x channels
    std::vector<std::int64_t> row_index;  ///< optional; empty means contiguous

    std::size_t n_rows() const noexcept {
        return channels > 0 ? values.size() / static_cast<std::size_t>(channels) : 0;
    }
    std::int64_t n_transitions() const noexcept {
        return static_cast<std::int64_t>(n_rows()) - 1;
    }
    double at(std::size_t row, int ch) const noexcept {
        return values[row * static_cast<std::size_t>(channels) + static_cast<std::size_t>(ch)];
    }
    /// Whether rows (row-1, row) are adjacent on the uniform grid, i.e. the
    /// transition between them spans exactly one dt.
    bool transition_contiguous(std::size_t row) const noexcept {
        if (row_index.empty()) return true;
        return row_index[row] == row_index[row - 1] + 1;
    }

    void validate() const {
        if (channels != 1 && channels != 3)
            throw config_error("ObservationSeries: channels must be 1 or 3");
        if (values.size() % static_cast<std::size_t>(channels) != 0)
            throw data_error("ObservationSeries: values size not a multiple of channels");
        if (n_rows() < 2) throw data_error("ObservationSeries: need at least 2 rows");
        grid.validate();
        if (grid.n_bars != n_transitions())
            throw data_error("ObservationSeries: grid.n_bars must equal n_rows - 1");
        for (double x : values)
            if (!std::isfinite(x)) throw data_error("ObservationSeries: non-finite value");
        if (!row_index.empty()) {
            if (row_index.size() != n_rows())
                throw data_error("ObservationSeries: row_index length mismatch");
            for (std::size_t i = 1; i < row_index.size(); ++i)
                if (row_index[i] <= row_index[i - 1])
                    throw data_error("ObservationSeries: row_index must be strictly increasing");
        }
    }

    static ObservationSeries from_triple(const PathTriple& path) {
        ObservationSeries out;
        out.grid = path.grid;
        out.grid.m_substeps = 1;
        out.channels = 3;
        out.values.reserve(path.s.size() * 3);
        for (std::size_t i = 0; i < path.s.size(); ++i) {
            out.values.push_back(path.s[i]);
            out.values.push_back(path.p[i]);
            out.values.push_back(path.v[i]);
        }
        return out;
    }

    static ObservationSeries from_sentiment(const TimeGrid& grid, std::vector<double> s) {
        ObservationSeries out;
        out.grid = grid;
        out.grid.m_substeps = 1;
        out.grid.n_bars = static_cast<std::int64_t>(s.size()) - 1;
        out.channels = 1;
        out.values = std::move(s);
        return out;
    }
};

/// Reparameterization used by the optimizer. log_atanh maps every valid
/// parameter point to an unconstrained vector (log on the positive rates and
/// scales, atanh on the correlations, identity elsewhere); none optimizes the
/// raw parameters and relies on the objective to reject invalid points.
enum class BoundsTransform { log_atanh, none };

inline const char* to_string(BoundsTransform t) {
    return t == BoundsTransform::log_atanh ? "log_atanh" : "none";
}

inline BoundsTransform bounds_transform_from_string(const std::string& s) {
    if (s == "log_atanh") return BoundsTransform::log_atanh;
    if (s == "none") return BoundsTransform::none;
    throw config_error("unknown bounds transform '" + s + "'");
}

struct EstimatorConfig {
    std::int64_t n_sims = 1000;   ///< simulated transition endpoints per bar
    int m_substeps = 1;           ///< Euler substeps per bar inside the estimator
    BandwidthRule bandwidth_rule = BandwidthRule::scott;
    std::vector<double> fixed_h;  ///< per-channel, only with BandwidthRule::fixed
    std::uint64_t seed = 0;       ///< seed of the common-random-number block
    double density_floor = kDefaultDensityFloor;
    NelderMeadOptions optimizer;
    BoundsTransform bounds_transform = BoundsTransform::log_atanh;
    bool freeze_bandwidth_from_init = false;  ///< compute h once at theta_0
    bool price_increments = false;  ///< diagnostic: log-price channel as one-bar increments
    CorrelationScheme scheme = CorrelationScheme::cholesky;
    int n_threads = 1;

    void validate(int channels) const {
        if (n_sims < 2) throw config_error("EstimatorConfig: n_sims must be >= 2");
        if (m_substeps < 1) throw config_error("EstimatorConfig: m_substeps must be >= 1");
        if (!(density_floor > 0.0))
            throw config_error("EstimatorConfig: density_floor must be > 0");
        if (bandwidth_rule == BandwidthRule::fixed &&
            static_cast<int>(fixed_h.size()) != channels)
            throw config_error("EstimatorConfig: fixed_h must carry one entry per channel");
        if (n_threads < 1) throw config_error("EstimatorConfig: n_threads must be >= 1");
    }
};

namespace detail {

inline constexpr int kLogTransformed[4] = {0, 2, 5, 7};   // lambda_s, sigma_s, gamma_v, sigma_v
inline constexpr int kAtanhTransformed[2] = {8, 9};       // rho_pv, rho_sv

inline double get_param(const SsvParams& p, int i) {
    const double* base = &p.lambda_s;
    return base[i];
}

inline void set_param(SsvParams& p, int i, double x) {
    double* base = &p.lambda_s;
    base[i] = x;
}

inline bool is_log_coord(int i) {
    for (int k : kLogTransformed)
        if (k == i) return true;
    return false;
}

inline bool is_atanh_coord(int i) {
    for (int k : kAtanhTransformed)
        if (k == i) return true;
    return false;
}

}  // namespace detail

/// Number of free coordinates for the given channel count: the sentiment-only
/// model estimates (lambda_s, mu_s, sigma_s); the full model all ten.
inline int free_param_count(int channels) { return channels == 1 ? 3 : 10; }

/// Maps a valid parameter point to the optimizer's coordinate vector.
inline std::vector<double> to_unconstrained(const SsvParams& p, int channels, BoundsTransform tr) {
    const int k = free_param_count(channels);
    std::vector<double> x(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        double xi = detail::get_param(p, i);
        if (tr == BoundsTransform::log_atanh) {
            if (detail::is_log_coord(i)) xi = std::log(xi);
            else if (detail::is_atanh_coord(i)) xi = std::atanh(xi);
        }
        x[static_cast<std::size_t>(i)] = xi;
    }
    return x;
}

/// Inverse of to_unconstrained; coordinates beyond the free set are copied
/// from `base`. The result is validated (with BoundsTransform::log_atanh this
/// can only fail on non-finite input).
inline SsvParams from_unconstrained(const std::vector<double>& x, const SsvParams& base,
                                    int channels, BoundsTransform tr) {
    const int k = free_param_count(channels);
    if (static_cast<int>(x.size()) != k)
        throw config_error("from_unconstrained: coordinate count mismatch");
    SsvParams p = base;
    for (int i = 0; i < k; ++i) {
        double xi = x[static_cast<std::size_t>(i)];
        if (tr == BoundsTransform::log_atanh) {
            if (detail::is_log_coord(i)) xi = std::exp(xi);
            else if (detail::is_atanh_coord(i)) xi = std::tanh(xi);
        }
        detail::set_param(p, i, xi);
    }
    p.validate();
    return p;
}

/// Simulated transition log-likelihood with common random numbers: one shock
/// block per (bar, draw, substep) index, drawn once at construction and
/// reused for every candidate theta, so the likelihood is a deterministic,
/// optimizer-friendly function of theta.
class SimulatedLikelihood {
public:
    struct Diagnostics {
        std::size_t n_floor_hits = 0;
        std::vector<double> mean_bandwidths;  ///< per channel, averaged over bars
        std::int64_t n_transitions_used = 0;
        std::int64_t n_transitions_skipped = 0;
    };

    SimulatedLikelihood(ObservationSeries series, EstimatorConfig cfg)
        : series_(std::move(series)), cfg_(std::move(cfg)) {
        series_.validate();
        cfg_.validate(series_.channels);
        crn_ = CrnBuffer(cfg_.seed, series_.n_transitions(), cfg_.n_sims, cfg_.m_substeps,
                         series_.channels == 1 ? 1 : 3);
    }

    const ObservationSeries& series() const noexcept { return series_; }
    const EstimatorConfig& config() const noexcept { return cfg_; }
    const Diagnostics& last_diagnostics() const noexcept { return last_; }

    /// Computes per-bar bandwidths at theta0 and uses them for every
    /// subsequent loglik call.
    void freeze_bandwidths(const SsvParams& theta0) {
        frozen_h_.assign(static_cast<std::size_t>(series_.n_transitions()) *
                             static_cast<std::size_t>(series_.channels),
                         0.0);
        frozen_ = false;
        loglik(theta0);  // fills last_ and, via the flag below, frozen_h_
        const int d = series_.channels;
        for (std::int64_t tr = 0; tr < series_.n_transitions(); ++tr) {
            if (!series_.transition_contiguous(static_cast<std::size_t>(tr) + 1)) continue;
            for (int c = 0; c < d; ++c)
                frozen_h_[static_cast<std::size_t>(tr) * d + c] =
                    bar_h_[static_cast<std::size_t>(tr) * d + c];
        }
        frozen_ = true;
    }

    /// Sum over contiguous transitions of the log kernel density of the
    /// observed endpoint under n_sims simulated endpoints started from the
    /// observed previous row. Deterministic in (series, theta, seed, config);
    /// bit-identical across n_threads.
    double loglik(const SsvParams& theta) const {
        theta.validate();
        const std::int64_t n_tr = series_.n_transitions();
        const int d = series_.channels;
        std::vector<double> ll(static_cast<std::size_t>(n_tr), 0.0);
        std::vector<std::uint8_t> used(static_cast<std::size_t>(n_tr), 0);
        std::vector<std::uint8_t> floored(static_cast<std::size_t>(n_tr), 0);
        bar_h_.assign(static_cast<std::size_t>(n_tr) * d, 0.0);

        auto run_range = [&](std::int64_t lo, std::int64_t hi) {
            EndpointBatch batch;
            std::vector<double> sbatch;
            std::vector<double> h(static_cast<std::size_t>(d));
            ShockCorrelation corr = ShockCorrelation::from_params(theta, cfg_.scheme);
            for (std::int64_t tr = lo; tr < hi; ++tr) {
                const std::size_t row = static_cast<std::size_t>(tr) + 1;
                if (!series_.transition_contiguous(row)) continue;
                used[static_cast<std::size_t>(tr)] = 1;
                const ShockBlock block = crn_.block(tr);
                double y[3];
                EndpointView view;
                if (d == 1) {
                    detail::transition_batch_ou(theta, series_.at(row - 1, 0), series_.grid.dt,
                                                block, sbatch);
                    view.channels = {sbatch.data()};
                    view.n = sbatch.size();
                    y[0] = series_.at(row, 0);
                } else {
                    ProcessState from;
                    from.s = series_.at(row - 1, 0);
                    from.p = series_.at(row - 1, 1);
                    from.v = series_.at(row - 1, 2);
                    detail::transition_batch(theta, from, series_.grid.dt, block, corr, batch);
                    if (cfg_.price_increments) {
                        for (auto& pj : batch.p) pj -= from.p;
                        y[1] = series_.at(row, 1) - from.p;
                    } else {
                        y[1] = series_.at(row, 1);
                    }
                    view.channels = {batch.s.data(), batch.p.data(), batch.v.data()};
                    view.n = batch.s.size();
                    y[0] = series_.at(row, 0);
                    y[2] = series_.at(row, 2);
                }

                if (frozen_) {
                    for (int c = 0; c < d; ++c)
                        h[static_cast<std::size_t>(c)] =
                            frozen_h_[static_cast<std::size_t>(tr) * d + c];
                } else {
                    h = bandwidth(view, cfg_.bandwidth_rule, cfg_.fixed_h);
                }
                for (int c = 0; c < d; ++c)
                    bar_h_[static_cast<std::size_t>(tr) * d + c] = h[static_cast<std::size_t>(c)];

                bool hit = false;
                const double dens = kernel_density(view, y, h, cfg_.density_floor, &hit);
                ll[static_cast<std::size_t>(tr)] = std::log(dens);
                floored[static_cast<std::size_t>(tr)] = hit ? 1 : 0;
            }
        };

        const int workers = static_cast<int>(std::min<std::int64_t>(cfg_.n_threads, n_tr));
        if (workers <= 1) {
            run_range(0, n_tr);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errs(static_cast<std::size_t>(workers));
            const std::int64_t chunk = (n_tr + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                const std::int64_t lo = w * chunk;
                const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n_tr);
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

        // ordered reduction keeps the sum bit-identical across thread counts
        double total = 0.0;
        last_ = Diagnostics{};
        last_.mean_bandwidths.assign(static_cast<std::size_t>(d), 0.0);
        for (std::int64_t tr = 0; tr < n_tr; ++tr) {
            if (!used[static_cast<std::size_t>(tr)]) {
                ++last_.n_transitions_skipped;
                continue;
            }
            total += ll[static_cast<std::size_t>(tr)];
            last_.n_floor_hits += floored[static_cast<std::size_t>(tr)];
            ++last_.n_transitions_used;
            for (int c = 0; c < d; ++c)
                last_.mean_bandwidths[static_cast<std::size_t>(c)] +=
                    bar_h_[static_cast<std::size_t>(tr) * d + c];
        }
        if (last_.n_transitions_used == 0)
            throw data_error("SimulatedLikelihood: no contiguous transitions in series");
        for (auto& m : last_.mean_bandwidths)
            m /= static_cast<double>(last_.n_transitions_used);
        return total;
    }

private:
    ObservationSeries series_;
    EstimatorConfig cfg_;
    CrnBuffer crn_;
    std::vector<double> frozen_h_;
    bool frozen_ = false;
    mutable std::vector<double> bar_h_;
    mutable Diagnostics last_;
};

/// Convenience wrapper: one likelihood evaluation.
inline double simulated_loglik(const ObservationSeries& series, const SsvParams& theta,
                               const EstimatorConfig& cfg) {
    SimulatedLikelihood lik(series, cfg);
    return lik.loglik(theta);
}

namespace detail {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // denominator n
};

inline MeanVar mean_var(const std::vector<double>& x) {
    MeanVar mv;
    if (x.empty()) return mv;
    for (double xi : x) mv.mean += xi;
    mv.mean /= static_cast<double>(x.size());
    for (double xi : x) {
        const double d = xi - mv.mean;
        mv.var += d * d;
    }
    mv.var /= static_cast<double>(x.size());
    return mv;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const MeanVar ma = mean_var(a), mb = mean_var(b);
    if (!(ma.var > 0.0) || !(mb.var > 0.0)) return 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean);
    c /= static_cast<double>(a.size());
    return c / std::sqrt(ma.var * mb.var);
}

/// Lag-1 autocorrelation over contiguous row pairs.
inline double lag1_autocorr(const ObservationSeries& series, int ch) {
    std::vector<double> prev, next;
    for (std::size_t row = 1; row < series.n_rows(); ++row) {
        if (!series.transition_contiguous(row)) continue;
        prev.push_back(series.at(row - 1, ch));
        next.push_back(series.at(row, ch));
    }
    if (prev.size() < 2)
        throw degenerate_sample_error("lag1_autocorr: not enough contiguous pairs");
    const MeanVar mp = mean_var(prev), mn = mean_var(next);
    if (!(mp.var > 0.0) || !(mn.var > 0.0))
        throw degenerate_sample_error("lag1_autocorr: constant series");
    double c = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i)
        c += (prev[i] - mp.mean) * (next[i] - mn.mean);
    c /= static_cast<double>(prev.size());
    return c / std::sqrt(mp.var * mn.var);
}

/// Mean-reversion speed implied by a lag-1 autocorrelation, clamped away from
/// the breakdown points rho <= 0 and rho >= 1.
inline double reversion_from_autocorr(double rho1, double dt) {
    const double clamped = std::clamp(rho1, 0.001, 0.999);
    return -std::log(clamped) / dt;
}

}  // namespace detail

/// Starting point for the optimizer, from closed-form moment matching:
/// mean-reversion speeds from lag-1 autocorrelations, long-run levels from
/// sample means, diffusion scales from stationary variances, the
/// sentiment-dispersion loading started at 0, drifts and shock correlations
/// from one-bar Euler residuals.
inline SsvParams moment_matching_init(const ObservationSeries& series) {
    series.validate();
    const double dt = series.grid.dt;
    SsvParams p;

    std::vector<double> s_col;
    for (std::size_t row = 0; row < series.n_rows(); ++row) s_col.push_back(series.at(row, 0));
    const auto s_mv = detail::mean_var(s_col);
    if (!(s_mv.var > 0.0))
        throw degenerate_sample_error("moment_matching_init: constant sentiment series");
    p.lambda_s = detail::reversion_from_autocorr(detail::lag1_autocorr(series, 0), dt);
    p.mu_s = s_mv.mean;
    p.sigma_s = std::sqrt(2.0 * p.lambda_s * s_mv.var);

    if (series.channels == 1) {
        // untouched fields get harmless placeholder values so the struct validates
        p.mu_p = 0.0;
        p.mu_v = 0.0;
        p.gamma_v = 1.0;
        p.beta_v = 0.0;
        p.sigma_v = 1.0;
        p.rho_pv = 0.0;
        p.rho_sv = 0.0;
        p.validate();
        return p;
    }

    std::vector<double> v_col;
    for (std::size_t row = 0; row < series.n_rows(); ++row) v_col.push_back(series.at(row, 2));
    const auto v_mv = detail::mean_var(v_col);
    if (!(v_mv.var > 0.0))
        throw degenerate_sample_error("moment_matching_init: constant log-variance series");
    p.gamma_v = detail::reversion_from_autocorr(detail::lag1_autocorr(series, 2), dt);
    p.beta_v = 0.0;
    p.mu_v = p.gamma_v * v_mv.mean;
    p.sigma_v = std::sqrt(2.0 * p.gamma_v * v_mv.var);

    // log-price drift first (it enters the price residuals), then the one-bar
    // Euler shock residuals and their correlations
    double dp_sum = 0.0, ev_sum = 0.0;
    std::int64_t n_pairs = 0;
    for (std::size_t row = 1; row < series.n_rows(); ++row) {
        if (!series.transition_contiguous(row)) continue;
        dp_sum += series.at(row, 1) - series.at(row - 1, 1);
        ev_sum += std::exp(series.at(row - 1, 2));
        ++n_pairs;
    }
    if (n_pairs < 2)
        throw degenerate_sample_error("moment_matching_init: not enough contiguous pairs");
    p.mu_p = dp_sum / (static_cast<double>(n_pairs) * dt) +
             ev_sum / (2.0 * static_cast<double>(n_pairs));

    std::vector<double> eps_s, eps_p, eps_v;
    for (std::size_t row = 1; row < series.n_rows(); ++row) {
        if (!series.transition_contiguous(row)) continue;
        const double s0 = series.at(row - 1, 0), s1 = series.at(row, 0);
        const double p0 = series.at(row - 1, 1), p1 = series.at(row, 1);
        const double v0 = series.at(row - 1, 2), v1 = series.at(row, 2);
        eps_s.push_back(s1 - s0 - p.lambda_s * (p.mu_s - s0) * dt);
        eps_v.push_back(v1 - v0 - (p.mu_v - p.gamma_v * v0) * dt);
        eps_p.push_back((p1 - p0 - (p.mu_p - 0.5 * std::exp(v0)) * dt) / std::exp(0.5 * v0));
    }
    p.rho_pv = std::clamp(detail::correlation(eps_p, eps_v), -0.99, 0.99);
    p.rho_sv = std::clamp(detail::correlation(eps_s, eps_v), -0.99, 0.99);
    p.validate();
    return p;
}

struct EstimationResult {
    SsvParams theta_hat;
    double loglik = 0.0;
    std::size_t n_floor_hits = 0;          ///< at theta_hat
    std::vector<TracePoint> trace;         ///< x entries hold native parameters
    std::vector<double> bandwidths_used;   ///< per channel, averaged over bars, at theta_hat
    bool converged = false;
    int n_evals = 0;
};

/// Maximizes the simulated log-likelihood from the given start. Non-converged
/// runs return the best-so-far point with converged = false.
inline EstimationResult fit(const ObservationSeries& series, const EstimatorConfig& cfg,
                            const SsvParams& init) {
    init.validate();
    SimulatedLikelihood lik(series, cfg);
    if (cfg.freeze_bandwidth_from_init) lik.freeze_bandwidths(init);

    const int channels = series.channels;
    const auto x0 = to_unconstrained(init, channels, cfg.bounds_transform);
    auto objective = [&](const std::vector<double>& x) {
        // a candidate that fails validation, explodes the Euler scheme, or
        // collapses every kernel is a terrible candidate, not a fatal error
        try {
            const SsvParams theta = from_unconstrained(x, init, channels, cfg.bounds_transform);
            return -lik.loglik(theta);
        } catch (const config_error&) {
            return std::numeric_limits<double>::infinity();
        } catch (const overflow_error&) {
            return std::numeric_limits<double>::infinity();
        } catch (const degenerate_sample_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const auto nm = nelder_mead(objective, x0, cfg.optimizer);

    EstimationResult res;
    res.theta_hat = from_unconstrained(nm.x, init, channels, cfg.bounds_transform);
    res.loglik = lik.loglik(res.theta_hat);
    res.n_floor_hits = lik.last_diagnostics().n_floor_hits;
    res.bandwidths_used = lik.last_diagnostics().mean_bandwidths;
    res.converged = nm.converged;
    res.n_evals = nm.n_evals;
    res.trace.reserve(nm.trace.size());
    for (const auto& tp : nm.trace) {
        TracePoint native;
        native.n_eval = tp.n_eval;
        native.f = -tp.f;
        const SsvParams theta = from_unconstrained(tp.x, init, channels, cfg.bounds_transform);
        const int k = free_param_count(channels);
        native.x.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) native.x[static_cast<std::size_t>(i)] = detail::get_param(theta, i);
        res.trace.push_back(std::move(native));
    }
    return res;
}

/// fit() from the moment-matching start.
inline EstimationResult fit_auto_init(const ObservationSeries& series,
                                      const EstimatorConfig& cfg) {
    return fit(series, cfg, moment_matching_init(series));
}

}  // namespace ssv
