#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <ssv/kde.hpp>

using namespace ssv;

namespace {

std::vector<double> ramp(std::size_t n, double lo, double hi) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

std::vector<double> std_normal_sample(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> x(n);
    for (auto& xi : x) xi = normal(eng);
    return x;
}

}  // namespace

TEST_CASE("type-7 quantiles interpolate linearly") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    REQUIRE(quantile_type7(x, 0.0) == 1.0);
    REQUIRE(quantile_type7(x, 1.0) == 4.0);
    REQUIRE(quantile_type7(x, 0.5) == Catch::Approx(2.5).epsilon(1e-15));
    REQUIRE(quantile_type7(x, 0.25) == Catch::Approx(1.75).epsilon(1e-15));

    const std::vector<double> one{5.0};
    REQUIRE(quantile_type7(one, 0.0) == 5.0);
    REQUIRE(quantile_type7(one, 0.37) == 5.0);
    REQUIRE(quantile_type7(one, 1.0) == 5.0);

    REQUIRE_THROWS_AS(quantile_type7({}, 0.5), degenerate_sample_error);
    REQUIRE_THROWS_AS(quantile_type7(x, 1.5), config_error);
    REQUIRE_THROWS_AS(quantile_type7(x, -0.1), config_error);
}

TEST_CASE("rule-of-thumb scale factors match their closed forms") {
    // For a uniform ramp sd < IQR/1.34, so the data-free factor
    // h / sd must equal 0.9 * n^{-1/5}.
    const auto x = ramp(1000, -2.0, 2.0);
    const double sd = sample_sd(x.data(), x.size());
    auto sorted = x;
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    REQUIRE(sd < iqr / 1.34);

    const double h = silverman_bandwidth(x.data(), x.size());
    REQUIRE(h / sd == Catch::Approx(0.2260697788358622).epsilon(1e-13));

    const double hs = scott_bandwidth(x.data(), x.size(), 3);
    REQUIRE(hs / sd == Catch::Approx(0.37275937203149402).epsilon(1e-13));

    // Scott exponent depends on the dimension
    REQUIRE(scott_bandwidth(x.data(), x.size(), 1) / sd ==
            Catch::Approx(std::pow(1000.0, -0.2)).epsilon(1e-13));
}

TEST_CASE("the robust spread picks IQR/1.34 under heavy tails") {
    // tight core plus far outliers: sd blows up, IQR stays put
    auto x = ramp(96, -0.5, 0.5);
    x.push_back(-60.0);
    x.push_back(-55.0);
    x.push_back(55.0);
    x.push_back(60.0);
    auto sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    const double sd = sample_sd(x.data(), x.size());
    REQUIRE(iqr / 1.34 < sd);
    const double h = silverman_bandwidth(x.data(), x.size());
    REQUIRE(h == Catch::Approx(0.9 * (iqr / 1.34) * std::pow(100.0, -0.2)).epsilon(1e-13));
}

TEST_CASE("bandwidths are scale equivariant") {
    const auto x = std_normal_sample(500, 11);
    std::vector<double> y(x.size());
    const double c = 3.7;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
    REQUIRE(silverman_bandwidth(y.data(), y.size()) ==
            Catch::Approx(c * silverman_bandwidth(x.data(), x.size())).epsilon(1e-12));
    REQUIRE(scott_bandwidth(y.data(), y.size(), 3) ==
            Catch::Approx(c * scott_bandwidth(x.data(), x.size(), 3)).epsilon(1e-12));
}

TEST_CASE("degenerate samples are rejected") {
    std::vector<double> flat(50, 1.25);
    REQUIRE_THROWS_AS(silverman_bandwidth(flat.data(), flat.size()), degenerate_sample_error);
    REQUIRE_THROWS_AS(scott_bandwidth(flat.data(), flat.size(), 2), degenerate_sample_error);
    const double one = 0.0;
    REQUIRE_THROWS_AS(sample_sd(&one, 1), degenerate_sample_error);
    REQUIRE_THROWS_AS(scott_bandwidth(flat.data(), flat.size(), 0), config_error);
}

TEST_CASE("per-channel bandwidth dispatch") {
    const auto a = std_normal_sample(400, 3);
    auto b = a;
    for (auto& bi : b) bi *= 2.0;
    EndpointView pts;
    pts.channels = {a.data(), b.data()};
    pts.n = a.size();

    const auto hs = bandwidth(pts, BandwidthRule::silverman);
    REQUIRE(hs.size() == 2);
    REQUIRE(hs[0] == silverman_bandwidth(a.data(), a.size()));
    REQUIRE(hs[1] == silverman_bandwidth(b.data(), b.size()));

    const auto hc = bandwidth(pts, BandwidthRule::scott);
    REQUIRE(hc[0] == scott_bandwidth(a.data(), a.size(), 2));

    const auto hf = bandwidth(pts, BandwidthRule::fixed, {0.1, 0.2});
    REQUIRE(hf == std::vector<double>{0.1, 0.2});
    REQUIRE_THROWS_AS(bandwidth(pts, BandwidthRule::fixed, {0.1}), config_error);
    REQUIRE_THROWS_AS(bandwidth(pts, BandwidthRule::fixed, {0.1, 0.0}), config_error);

    EndpointView tiny;
    tiny.channels = {a.data()};
    tiny.n = 1;
    REQUIRE_THROWS_AS(bandwidth(tiny, BandwidthRule::silverman), degenerate_sample_error);

    REQUIRE(bandwidth_rule_from_string("scott") == BandwidthRule::scott);
    REQUIRE(std::string(to_string(BandwidthRule::silverman)) == "silverman");
    REQUIRE_THROWS_AS(bandwidth_rule_from_string("orwell"), config_error);
}

TEST_CASE("single-point density is the exact product kernel") {
    const double xs = 0.3, xv = -1.2;
    EndpointView pts;
    pts.channels = {&xs, &xv};
    pts.n = 1;
    const std::vector<double> h{0.5, 2.0};
    const double y[2] = {0.1, 1.0};

    const double u1 = (y[0] - xs) / h[0];
    const double u2 = (y[1] - xv) / h[1];
    const double expected =
        std::exp(-0.5 * (u1 * u1 + u2 * u2)) / (2.0 * std::numbers::pi * h[0] * h[1]);
    REQUIRE(kernel_density(pts, y, h) == Catch::Approx(expected).epsilon(1e-13));
}

TEST_CASE("two symmetric points at unit bandwidth reproduce the normal pdf") {
    const std::vector<double> x{-1.0, 1.0};
    EndpointView pts;
    pts.channels = {x.data()};
    pts.n = 2;
    const double y = 0.0;
    // mean of phi(-1) and phi(1) is phi(1)
    REQUIRE(kernel_density(pts, &y, {1.0}) ==
            Catch::Approx(0.24197072451914337).epsilon(1e-14));
}

TEST_CASE("density estimate converges to the true density at the mode") {
    const double kPhi0 = 0.3989422804014327;
    const double y = 0.0;

    const auto small = std_normal_sample(1000, 21);
    EndpointView ps;
    ps.channels = {small.data()};
    ps.n = small.size();
    const double f_small = kernel_density(ps, &y, bandwidth(ps, BandwidthRule::silverman));
    REQUIRE(std::abs(f_small - kPhi0) < 0.05);

    const auto big = std_normal_sample(100000, 21);
    EndpointView pb;
    pb.channels = {big.data()};
    pb.n = big.size();
    const double f_big = kernel_density(pb, &y, bandwidth(pb, BandwidthRule::silverman));
    REQUIRE(std::abs(f_big - kPhi0) < 0.02 * kPhi0);
}

TEST_CASE("the density floor engages exactly and is reported") {
    const std::vector<double> x{0.0, 0.5, -0.25};
    EndpointView pts;
    pts.channels = {x.data()};
    pts.n = x.size();
    const std::vector<double> h{0.1};

    bool floored = false;
    const double near = 0.1;
    REQUIRE(kernel_density(pts, &near, h, 1e-300, &floored) > 1e-300);
    REQUIRE_FALSE(floored);

    const double far = 1.0e6;
    const double d = kernel_density(pts, &far, h, 1e-300, &floored);
    REQUIRE(d == 1e-300);
    REQUIRE(floored);

    // a custom floor bounds from below even when the true density is positive
    const double mid = 3.0;
    const double raw = kernel_density(pts, &mid, h);
    REQUIRE(raw < 0.5);
    const double clamped = kernel_density(pts, &mid, h, 0.5, &floored);
    REQUIRE(clamped == 0.5);
    REQUIRE(floored);
}

TEST_CASE("density input validation") {
    const std::vector<double> x{0.0, 1.0};
    EndpointView pts;
    pts.channels = {x.data()};
    pts.n = x.size();
    const double y = 0.0;
    REQUIRE_THROWS_AS(kernel_density(pts, &y, {0.1, 0.2}), config_error);
    REQUIRE_THROWS_AS(kernel_density(pts, &y, {0.0}), config_error);
    REQUIRE_THROWS_AS(kernel_density(pts, &y, {0.1}, 0.0), config_error);
    EndpointView empty;
    empty.channels = {x.data()};
    empty.n = 0;
    REQUIRE_THROWS_AS(kernel_density(empty, &y, {0.1}), degenerate_sample_error);
}
