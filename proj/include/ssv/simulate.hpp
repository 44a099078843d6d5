#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ssv/errors.hpp"
#include "ssv/model.hpp"
#include "ssv/params.hpp"
#include "ssv/rng.hpp"

namespace ssv {

/// How the three raw normal draws (Z_p, Z_v, Z_s) per substep are combined
/// into the shocks that enter the price, variance, and sentiment equations.
///
/// cholesky (default): the variance shock is the shared factor;
///   W_v = Z_v, W_p = rho_pv Z_v + sqrt(1-rho_pv^2) Z_p,
///   W_s = rho_sv Z_v + sqrt(1-rho_sv^2) Z_s.
/// Every shock has unit variance and the pairwise correlations match the model
/// statement exactly.
///
/// paper_literal: the combination sqrt(1-rho) W + rho W_v without squaring.
/// Kept for reproducing legacy runs; note its mixed shocks do NOT have
/// unit variance (Var = 1 - rho + rho^2) and the sentiment/variance roles
/// differ: the sentiment equation receives the raw draw while the variance
/// equation receives the sentiment-mixed one.
enum class CorrelationScheme { cholesky, paper_literal };

inline const char* to_string(CorrelationScheme s) {
    return s == CorrelationScheme::cholesky ? "cholesky" : "paper_literal";
}

inline CorrelationScheme correlation_scheme_from_string(const std::string& s) {
    if (s == "cholesky") return CorrelationScheme::cholesky;
    if (s == "paper_literal") return CorrelationScheme::paper_literal;
    throw config_error("unknown correlation scheme '" + s + "'");
}

struct ShockCorrelation {
    double rho_pv = 0.0;
    double rho_sv = 0.0;
    CorrelationScheme scheme = CorrelationScheme::cholesky;

    void validate() const {
        if (!(rho_pv > -1.0 && rho_pv < 1.0) || !(rho_sv > -1.0 && rho_sv < 1.0))
            throw config_error("ShockCorrelation: correlations must be in (-1, 1)");
    }

    static ShockCorrelation from_params(const SsvParams& p,
                                        CorrelationScheme scheme = CorrelationScheme::cholesky) {
        return ShockCorrelation{p.rho_pv, p.rho_sv, scheme};
    }
};

struct CombinedShocks {
    double wp = 0.0;  ///< enters the price equation
    double wv = 0.0;  ///< enters the variance equation
    double ws = 0.0;  ///< enters the sentiment equation
};

inline CombinedShocks combine_shocks(const ShockCorrelation& c, double zp, double zv,
                                     double zs) noexcept {
    CombinedShocks w;
    if (c.scheme == CorrelationScheme::cholesky) {
        w.wv = zv;
        w.wp = c.rho_pv * zv + std::sqrt(1.0 - c.rho_pv * c.rho_pv) * zp;
        w.ws = c.rho_sv * zv + std::sqrt(1.0 - c.rho_sv * c.rho_sv) * zs;
    } else {
        w.ws = zs;
        w.wp = std::sqrt(1.0 - c.rho_pv) * zp + c.rho_pv * zv;
        w.wv = std::sqrt(1.0 - c.rho_sv) * zs + c.rho_sv * zv;
    }
    return w;
}

struct SimConfig {
    TimeGrid grid;
    std::int64_t n_paths = 1;
    std::uint64_t seed = 0;
    ProcessState initial;
    bool antithetic = false;

    void validate() const {
        grid.validate();
        if (n_paths < 1) throw config_error("SimConfig: n_paths must be >= 1");
        if (antithetic && (n_paths % 2) != 0)
            throw config_error("SimConfig: antithetic pairing requires an even n_paths");
        if (!initial.finite()) throw config_error("SimConfig: initial state must be finite");
        if (initial.t != grid.t0)
            throw config_error("SimConfig: initial.t must equal grid.t0");
    }
};

/// Bar-endpoint values of one simulated path; index 0 is the initial state,
/// index k the end of bar k. Substep values are not retained.
struct PathTriple {
    TimeGrid grid;
    std::vector<double> s, p, v;
};

namespace detail {

/// One path of the full triple, writing bar endpoints into out_{s,p,v}
/// (each sized n_bars + 1). Draw order per substep is fixed: Z_p, Z_v, Z_s.
/// negate mirrors every draw (antithetic partner).
template <typename Engine>
void run_ssv_path(const SsvParams& prm, const TimeGrid& g, const ProcessState& x0,
                  const ShockCorrelation& corr, Engine& eng, bool negate, double* out_s,
                  double* out_p, double* out_v, std::int64_t path_index) {
    std::normal_distribution<double> normal;
    const double delta = g.substep();
    const double sqdt = std::sqrt(delta);
    const double sgn = negate ? -1.0 : 1.0;
    const double cpp = std::sqrt(1.0 - corr.rho_pv * corr.rho_pv);
    const double css = std::sqrt(1.0 - corr.rho_sv * corr.rho_sv);
    const double lpp = std::sqrt(1.0 - corr.rho_pv);
    const double lss = std::sqrt(1.0 - corr.rho_sv);
    const bool chol = corr.scheme == CorrelationScheme::cholesky;

    double s = x0.s, p = x0.p, v = x0.v;
    out_s[0] = s;
    out_p[0] = p;
    out_v[0] = v;
    for (std::int64_t bar = 0; bar < g.n_bars; ++bar) {
        for (int m = 0; m < g.m_substeps; ++m) {
            const double zp = sgn * normal(eng);
            const double zv = sgn * normal(eng);
            const double zs = sgn * normal(eng);
            double wp, wv, ws;
            if (chol) {
                wv = zv;
                wp = corr.rho_pv * zv + cpp * zp;
                ws = corr.rho_sv * zv + css * zs;
            } else {
                ws = zs;
                wp = lpp * zp + corr.rho_pv * zv;
                wv = lss * zs + corr.rho_sv * zv;
            }
            const double half_var = std::exp(0.5 * v);  // exp(v) = half_var^2
            const double var = half_var * half_var;
            if (!std::isfinite(var))
                throw overflow_error("simulate_ssv: exp(v) overflow on path " +
                                     std::to_string(path_index) + ", bar " + std::to_string(bar) +
                                     ", substep " + std::to_string(m) +
                                     " (v = " + std::to_string(v) + ")");
            const double dev = s - prm.mu_s;
            const double new_s = s + prm.lambda_s * (prm.mu_s - s) * delta + prm.sigma_s * sqdt * ws;
            const double new_p = p + (prm.mu_p - 0.5 * var) * delta + half_var * sqdt * wp;
            const double new_v =
                v + (prm.mu_v + prm.beta_v * dev * dev - prm.gamma_v * v) * delta +
                prm.sigma_v * sqdt * wv;
            s = new_s;
            p = new_p;
            v = new_v;
        }
        out_s[bar + 1] = s;
        out_p[bar + 1] = p;
        out_v[bar + 1] = v;
    }
}

template <typename Engine>
void run_ou_path(const SsvParams& prm, const TimeGrid& g, double s0, Engine& eng, bool negate,
                 double* out) {
    std::normal_distribution<double> normal;
    const double delta = g.substep();
    const double sqdt = std::sqrt(delta);
    const double sgn = negate ? -1.0 : 1.0;
    double s = s0;
    out[0] = s;
    for (std::int64_t bar = 0; bar < g.n_bars; ++bar) {
        for (int m = 0; m < g.m_substeps; ++m) {
            const double z = sgn * normal(eng);
            s += prm.lambda_s * (prm.mu_s - s) * delta + prm.sigma_s * sqdt * z;
        }
        out[bar + 1] = s;
    }
}

}  // namespace detail

/// Visits every path in path-index order with a reused PathTriple buffer.
/// Sequential and deterministic; intended for streaming statistics over large
/// path counts without materializing them.
template <typename Visitor>
void for_each_ssv_path(const SsvParams& prm, const SimConfig& cfg, const ShockCorrelation& corr,
                       Visitor&& visit) {
    prm.validate();
    cfg.validate();
    corr.validate();
    PathTriple buf;
    buf.grid = cfg.grid;
    const std::size_t n = static_cast<std::size_t>(cfg.grid.n_bars) + 1;
    buf.s.resize(n);
    buf.p.resize(n);
    buf.v.resize(n);
    for (std::int64_t k = 0; k < cfg.n_paths; ++k) {
        // Antithetic partner k=2j+1 replays path 2j's engine with negated draws.
        const std::uint64_t stream = cfg.antithetic ? static_cast<std::uint64_t>(k / 2)
                                                    : static_cast<std::uint64_t>(k);
        const bool negate = cfg.antithetic && (k % 2 == 1);
        auto eng = make_stream(cfg.seed, stream);
        detail::run_ssv_path(prm, cfg.grid, cfg.initial, corr, eng, negate, buf.s.data(),
                             buf.p.data(), buf.v.data(), k);
        visit(k, static_cast<const PathTriple&>(buf));
    }
}

/// Simulates n_paths of the triple on the bar grid. Paths are seeded per path
/// index, so results are bit-identical for a given (seed, config) regardless
/// of n_threads; threads only partition the path range into preallocated slots.
inline std::vector<PathTriple> simulate_ssv(const SsvParams& prm, const SimConfig& cfg,
                                            const ShockCorrelation& corr, int n_threads = 1) {
    prm.validate();
    cfg.validate();
    corr.validate();
    if (n_threads < 1) throw config_error("simulate_ssv: n_threads must be >= 1");

    std::vector<PathTriple> out(static_cast<std::size_t>(cfg.n_paths));
    const std::size_t n = static_cast<std::size_t>(cfg.grid.n_bars) + 1;
    for (auto& pt : out) {
        pt.grid = cfg.grid;
        pt.s.resize(n);
        pt.p.resize(n);
        pt.v.resize(n);
    }

    auto run_range = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t k = lo; k < hi; ++k) {
            const std::uint64_t stream = cfg.antithetic ? static_cast<std::uint64_t>(k / 2)
                                                        : static_cast<std::uint64_t>(k);
            const bool negate = cfg.antithetic && (k % 2 == 1);
            auto eng = make_stream(cfg.seed, stream);
            auto& pt = out[static_cast<std::size_t>(k)];
            detail::run_ssv_path(prm, cfg.grid, cfg.initial, corr, eng, negate, pt.s.data(),
                                 pt.p.data(), pt.v.data(), k);
        }
    };

    const int workers = static_cast<int>(
        std::min<std::int64_t>(n_threads, cfg.n_paths));
    if (workers <= 1) {
        run_range(0, cfg.n_paths);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(static_cast<std::size_t>(workers));
        const std::int64_t chunk = (cfg.n_paths + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t lo = w * chunk;
            const std::int64_t hi = std::min<std::int64_t>(lo + chunk, cfg.n_paths);
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
    return out;
}

/// Sentiment-only OU paths on the same grid contract.
inline std::vector<std::vector<double>> simulate_ou(const SsvParams& prm, const SimConfig& cfg) {
    prm.validate();
    cfg.validate();
    std::vector<std::vector<double>> out(static_cast<std::size_t>(cfg.n_paths));
    const std::size_t n = static_cast<std::size_t>(cfg.grid.n_bars) + 1;
    for (std::int64_t k = 0; k < cfg.n_paths; ++k) {
        const std::uint64_t stream = cfg.antithetic ? static_cast<std::uint64_t>(k / 2)
                                                    : static_cast<std::uint64_t>(k);
        const bool negate = cfg.antithetic && (k % 2 == 1);
        auto eng = make_stream(cfg.seed, stream);
        auto& path = out[static_cast<std::size_t>(k)];
        path.resize(n);
        detail::run_ou_path(prm, cfg.grid, cfg.initial.s, eng, negate, path.data());
    }
    return out;
}

/// Replayable block of pre-drawn standard normal shocks for one bar transition:
/// z(draw, substep, channel) with channels ordered (Z_p, Z_v, Z_s) for the
/// triple and a single channel for OU. Externally owned; consuming the same
/// block under different parameters yields endpoints that are deterministic,
/// smooth functions of the parameters (common random numbers).
struct ShockBlock {
    const float* z = nullptr;
    std::int64_t n_draws = 0;
    int m_substeps = 0;
    int channels = 0;

    float at(std::int64_t draw, int substep, int channel) const noexcept {
        return z[(draw * m_substeps + substep) * channels + channel];
    }
};

/// Materialized common-random-number buffer covering n_bars transitions.
/// Filled once, sequentially, from the seed; storage is float (quantization is
/// orders of magnitude below kernel bandwidths) to halve the footprint.
class CrnBuffer {
public:
    CrnBuffer() = default;
    CrnBuffer(std::uint64_t seed, std::int64_t n_bars, std::int64_t n_draws, int m_substeps,
              int channels)
        : n_bars_(n_bars), n_draws_(n_draws), m_substeps_(m_substeps), channels_(channels) {
        if (n_bars < 1 || n_draws < 1 || m_substeps < 1 || channels < 1)
            throw config_error("CrnBuffer: all dimensions must be >= 1");
        z_.resize(static_cast<std::size_t>(n_bars) * static_cast<std::size_t>(n_draws) *
                  static_cast<std::size_t>(m_substeps) * static_cast<std::size_t>(channels));
        auto eng = make_stream(seed, 0x43524E); // "CRN" stream tag
        std::normal_distribution<double> normal;
        for (auto& x : z_) x = static_cast<float>(normal(eng));
    }

    ShockBlock block(std::int64_t bar) const {
        if (bar < 0 || bar >= n_bars_) throw config_error("CrnBuffer: bar index out of range");
        const std::size_t stride = static_cast<std::size_t>(n_draws_) *
                                   static_cast<std::size_t>(m_substeps_) *
                                   static_cast<std::size_t>(channels_);
        return ShockBlock{z_.data() + static_cast<std::size_t>(bar) * stride, n_draws_,
                          m_substeps_, channels_};
    }

    std::int64_t n_bars() const noexcept { return n_bars_; }
    std::int64_t n_draws() const noexcept { return n_draws_; }
    int m_substeps() const noexcept { return m_substeps_; }
    int channels() const noexcept { return channels_; }

private:
    std::int64_t n_bars_ = 0;
    std::int64_t n_draws_ = 0;
    int m_substeps_ = 0;
    int channels_ = 0;
    std::vector<float> z_;
};

/// One-bar endpoint sample in structure-of-arrays form.
struct EndpointBatch {
    std::vector<double> s, p, v;

    void resize(std::size_t n) {
        s.resize(n);
        p.resize(n);
        v.resize(n);
    }
    std::size_t size() const noexcept { return s.size(); }
};

namespace detail {

/// Hot core of the one-bar transition: Euler over m_substeps for every draw in
/// the block, reading shocks as (Z_p, Z_v, Z_s) per substep.
inline void transition_batch(const SsvParams& prm, const ProcessState& from, double dt,
                             const ShockBlock& shocks, const ShockCorrelation& corr,
                             EndpointBatch& out) {
    const int M = shocks.m_substeps;
    const double delta = dt / M;
    const double sqdt = std::sqrt(delta);
    const double cpp = std::sqrt(1.0 - corr.rho_pv * corr.rho_pv);
    const double css = std::sqrt(1.0 - corr.rho_sv * corr.rho_sv);
    const double lpp = std::sqrt(1.0 - corr.rho_pv);
    const double lss = std::sqrt(1.0 - corr.rho_sv);
    const bool chol = corr.scheme == CorrelationScheme::cholesky;

    out.resize(static_cast<std::size_t>(shocks.n_draws));
    for (std::int64_t i = 0; i < shocks.n_draws; ++i) {
        double s = from.s, p = from.p, v = from.v;
        const float* zrow = shocks.z + (i * M) * 3;
        for (int m = 0; m < M; ++m) {
            const double zp = zrow[0], zv = zrow[1], zs = zrow[2];
            zrow += 3;
            double wp, wv, ws;
            if (chol) {
                wv = zv;
                wp = corr.rho_pv * zv + cpp * zp;
                ws = corr.rho_sv * zv + css * zs;
            } else {
                ws = zs;
                wp = lpp * zp + corr.rho_pv * zv;
                wv = lss * zs + corr.rho_sv * zv;
            }
            const double half_var = std::exp(0.5 * v);
            const double var = half_var * half_var;
            if (!std::isfinite(var))
                throw overflow_error("transition_endpoints: exp(v) overflow at draw " +
                                     std::to_string(i) + ", substep " + std::to_string(m));
            const double dev = s - prm.mu_s;
            const double new_s = s + prm.lambda_s * (prm.mu_s - s) * delta + prm.sigma_s * sqdt * ws;
            const double new_p = p + (prm.mu_p - 0.5 * var) * delta + half_var * sqdt * wp;
            const double new_v =
                v + (prm.mu_v + prm.beta_v * dev * dev - prm.gamma_v * v) * delta +
                prm.sigma_v * sqdt * wv;
            s = new_s;
            p = new_p;
            v = new_v;
        }
        out.s[static_cast<std::size_t>(i)] = s;
        out.p[static_cast<std::size_t>(i)] = p;
        out.v[static_cast<std::size_t>(i)] = v;
    }
}

/// Sentiment-only analogue over a single-channel block.
inline void transition_batch_ou(const SsvParams& prm, double from_s, double dt,
                                const ShockBlock& shocks, std::vector<double>& out) {
    const int M = shocks.m_substeps;
    const double delta = dt / M;
    const double sq = prm.sigma_s * std::sqrt(delta);
    const double a = 1.0 - prm.lambda_s * delta;
    const double b = prm.lambda_s * prm.mu_s * delta;
    out.resize(static_cast<std::size_t>(shocks.n_draws));
    for (std::int64_t i = 0; i < shocks.n_draws; ++i) {
        double s = from_s;
        const float* zrow = shocks.z + i * M;
        for (int m = 0; m < M; ++m) s = a * s + b + sq * zrow[m];
        out[static_cast<std::size_t>(i)] = s;
    }
}

}  // namespace detail

/// Simulates n_draws one-bar endpoints of the triple conditional on `from`,
/// consuming a replayable three-channel shock block.
inline std::vector<ProcessState> transition_endpoints(const SsvParams& prm,
                                                      const ProcessState& from, double dt,
                                                      int m_substeps, std::int64_t n_draws,
                                                      const ShockBlock& shocks,
                                                      const ShockCorrelation& corr) {
    prm.validate();
    corr.validate();
    if (!from.finite()) throw config_error("transition_endpoints: from state must be finite");
    if (!(dt > 0.0)) throw config_error("transition_endpoints: dt must be > 0");
    if (shocks.channels != 3) throw config_error("transition_endpoints: need a 3-channel block");
    if (shocks.m_substeps != m_substeps || shocks.n_draws < n_draws)
        throw config_error("transition_endpoints: shock block shape mismatch");
    ShockBlock view = shocks;
    view.n_draws = n_draws;
    EndpointBatch batch;
    detail::transition_batch(prm, from, dt, view, corr, batch);
    std::vector<ProcessState> out(static_cast<std::size_t>(n_draws));
    for (std::int64_t i = 0; i < n_draws; ++i) {
        auto& st = out[static_cast<std::size_t>(i)];
        st.s = batch.s[static_cast<std::size_t>(i)];
        st.p = batch.p[static_cast<std::size_t>(i)];
        st.v = batch.v[static_cast<std::size_t>(i)];
        st.t = from.t + dt;
    }
    return out;
}

namespace detail {
inline void format_double(std::string& buf, double x) {
    char tmp[32];
    const int len = std::snprintf(tmp, sizeof tmp, "%.17g", x);
    buf.append(tmp, static_cast<std::size_t>(len));
}
}  // namespace detail

/// Writes paths as CSV. Long format: a single plot-ready file with header
/// path_id,t,s,p,ret,v where ret is the one-bar log-price increment (0 on the
/// first row of each path). Per-path format: path_<k>.csv files with header
/// t,s,p,v under `target` treated as a directory.
inline void write_paths_csv(const std::filesystem::path& target,
                            const std::vector<PathTriple>& paths, bool long_format) {
    if (paths.empty()) throw data_error("write_paths_csv: no paths");
    std::string buf;
    if (long_format) {
        std::ofstream f(target);
        if (!f) throw data_error("write_paths_csv: cannot open " + target.string());
        buf = "path_id,t,s,p,ret,v\n";
        for (std::size_t k = 0; k < paths.size(); ++k) {
            const auto& pt = paths[k];
            for (std::size_t i = 0; i < pt.s.size(); ++i) {
                buf += std::to_string(k);
                buf += ',';
                detail::format_double(buf, pt.grid.time_at(static_cast<std::int64_t>(i)));
                buf += ',';
                detail::format_double(buf, pt.s[i]);
                buf += ',';
                detail::format_double(buf, pt.p[i]);
                buf += ',';
                detail::format_double(buf, i == 0 ? 0.0 : pt.p[i] - pt.p[i - 1]);
                buf += ',';
                detail::format_double(buf, pt.v[i]);
                buf += '\n';
            }
        }
        f << buf;
        return;
    }
    std::filesystem::create_directories(target);
    for (std::size_t k = 0; k < paths.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "path_%06zu.csv", k);
        std::ofstream f(target / name);
        if (!f) throw data_error("write_paths_csv: cannot open " + (target / name).string());
        buf = "t,s,p,v\n";
        const auto& pt = paths[k];
        for (std::size_t i = 0; i < pt.s.size(); ++i) {
            detail::format_double(buf, pt.grid.time_at(static_cast<std::int64_t>(i)));
            buf += ',';
            detail::format_double(buf, pt.s[i]);
            buf += ',';
            detail::format_double(buf, pt.p[i]);
            buf += ',';
            detail::format_double(buf, pt.v[i]);
            buf += '\n';
        }
        f << buf;
    }
}

}  // namespace ssv
