#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "ssv/errors.hpp"

namespace ssv {

enum class BandwidthRule { silverman, scott, fixed };

inline const char* to_string(BandwidthRule r) {
    switch (r) {
        case BandwidthRule::silverman: return "silverman";
        case BandwidthRule::scott: return "scott";
        default: return "fixed";
    }
}

inline BandwidthRule bandwidth_rule_from_string(const std::string& s) {
    if (s == "silverman") return BandwidthRule::silverman;
    if (s == "scott") return BandwidthRule::scott;
    if (s == "fixed") return BandwidthRule::fixed;
    throw config_error("unknown bandwidth rule '" + s + "'");
}

/// Interpolating sample quantile (the common linear type-7 definition) of a
/// sorted sequence.
inline double quantile_type7(const std::vector<double>& sorted, double prob) {
    if (sorted.empty()) throw degenerate_sample_error("quantile_type7: empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw config_error("quantile_type7: prob outside [0,1]");
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double sample_sd(const double* x, std::size_t n) {
    if (n < 2) throw degenerate_sample_error("sample_sd: need at least 2 points");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

/// One-dimensional rule-of-thumb bandwidth:
/// h = 0.9 * min(sd, IQR/1.34) * n^{-1/5}.
inline double silverman_bandwidth(const double* x, std::size_t n) {
    const double sd = sample_sd(x, n);
    std::vector<double> sorted(x, x + n);
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    const double spread = std::min(sd, iqr / 1.34);
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    if (!(h > 0.0))
        throw degenerate_sample_error("silverman_bandwidth: zero-spread endpoint sample");
    return h;
}

/// Per-channel multivariate rule-of-thumb bandwidth: h = sd * n^{-1/(d+4)}.
inline double scott_bandwidth(const double* x, std::size_t n, int d) {
    if (d < 1) throw config_error("scott_bandwidth: d must be >= 1");
    const double h =
        sample_sd(x, n) * std::pow(static_cast<double>(n), -1.0 / static_cast<double>(d + 4));
    if (!(h > 0.0)) throw degenerate_sample_error("scott_bandwidth: zero-spread endpoint sample");
    return h;
}

/// Columns-view of an N x d endpoint sample (channel pointers + count).
struct EndpointView {
    std::vector<const double*> channels;
    std::size_t n = 0;

    int dim() const noexcept { return static_cast<int>(channels.size()); }
};

/// Per-channel bandwidths under the given rule; fixed_h is consumed only by
/// BandwidthRule::fixed and must then match the channel count.
inline std::vector<double> bandwidth(const EndpointView& pts, BandwidthRule rule,
                                     const std::vector<double>& fixed_h = {}) {
    const int d = pts.dim();
    if (d < 1) throw config_error("bandwidth: no channels");
    if (pts.n < 2) throw degenerate_sample_error("bandwidth: need at least 2 endpoints");
    std::vector<double> h(static_cast<std::size_t>(d));
    switch (rule) {
        case BandwidthRule::silverman:
            for (int c = 0; c < d; ++c)
                h[static_cast<std::size_t>(c)] = silverman_bandwidth(pts.channels[c], pts.n);
            break;
        case BandwidthRule::scott:
            for (int c = 0; c < d; ++c)
                h[static_cast<std::size_t>(c)] = scott_bandwidth(pts.channels[c], pts.n, d);
            break;
        case BandwidthRule::fixed:
            if (static_cast<int>(fixed_h.size()) != d)
                throw config_error("bandwidth: fixed_h must provide one value per channel");
            for (double hc : fixed_h)
                if (!(hc > 0.0)) throw config_error("bandwidth: fixed_h entries must be > 0");
            h = fixed_h;
            break;
    }
    return h;
}

inline constexpr double kDefaultDensityFloor = 1e-300;

/// Product-Gaussian kernel density of the observed point y under the endpoint
/// sample: N^{-1} sum_i prod_c h_c^{-1} phi((y_c - x_{i,c}) / h_c). Returns
/// max(density, floor); *floored reports whether the floor bound was active.
inline double kernel_density(const EndpointView& pts, const double* y,
                             const std::vector<double>& h,
                             double floor = kDefaultDensityFloor, bool* floored = nullptr) {
    const int d = pts.dim();
    if (d < 1 || static_cast<int>(h.size()) != d)
        throw config_error("kernel_density: bandwidth/channel count mismatch");
    if (pts.n == 0) throw degenerate_sample_error("kernel_density: empty endpoint sample");
    if (!(floor > 0.0)) throw config_error("kernel_density: density floor must be > 0");
    for (double hc : h)
        if (!(hc > 0.0)) throw config_error("kernel_density: bandwidths must be > 0");

    // (2 pi)^{-d/2} / (N * prod h_c), the shared normalization
    double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
                      std::log(static_cast<double>(pts.n));
    for (double hc : h) log_norm -= std::log(hc);
    const double norm = std::exp(log_norm);

    double acc = 0.0;
    for (std::size_t i = 0; i < pts.n; ++i) {
        double q = 0.0;
        for (int c = 0; c < d; ++c) {
            const double u = (y[c] - pts.channels[c][i]) / h[static_cast<std::size_t>(c)];
            q += u * u;
        }
        acc += std::exp(-0.5 * q);
    }
    const double density = norm * acc;
    const bool hit = !(density > floor);
    if (floored) *floored = hit;
    return hit ? floor : density;
}

}  // namespace ssv
