#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <ssv/bootstrap.hpp>

#include "helpers.hpp"

using namespace ssv;

namespace {

// Small and loose on purpose: these tests pin the resampling contract
// (determinism, accounting, summary arithmetic), not estimator accuracy.
BootstrapConfig quick_config(int n_reps, std::uint64_t seed) {
    BootstrapConfig cfg;
    cfg.n_reps = n_reps;
    cfg.seed = seed;
    cfg.data_grid.dt = 1.0 / 26.0;
    cfg.data_grid.n_bars = 120;
    cfg.data_grid.m_substeps = 1;
    cfg.initial.s = 0.203;
    cfg.initial.v = -2.6;
    cfg.estimator.n_sims = 150;
    cfg.estimator.optimizer.max_evals = 900;
    cfg.estimator.optimizer.f_tol = 1e-3;
    cfg.estimator.optimizer.x_tol = 1e-2;
    cfg.estimator.optimizer.n_restarts = 0;
    cfg.estimator.optimizer.record_trace = false;
    return cfg;
}

}  // namespace

TEST_CASE("bootstrap replications are deterministic in the master seed") {
    const auto theta = test::table_params();
    const auto cfg = quick_config(5, 404);

    const auto a = bootstrap(theta, cfg);
    const auto b = bootstrap(theta, cfg);
    REQUIRE(a.n_failed == b.n_failed);
    REQUIRE(a.replicates == b.replicates);
    REQUIRE(a.rep_ids == b.rep_ids);
    REQUIRE(a.mean == b.mean);
    REQUIRE(a.sd == b.sd);

    // at least one replication must have produced an estimate for the
    // comparison above to mean anything
    REQUIRE_FALSE(a.replicates.empty());

    auto cfg2 = cfg;
    cfg2.seed = 405;
    const auto c = bootstrap(theta, cfg2);
    REQUIRE_FALSE(c.replicates.empty());
    bool any_diff = c.replicates.size() != a.replicates.size();
    for (std::size_t i = 0; !any_diff && i < c.replicates.size(); ++i)
        any_diff = c.replicates[i] != a.replicates[i];
    REQUIRE(any_diff);
}

TEST_CASE("thread count cannot change bootstrap output") {
    const auto theta = test::table_params();
    auto cfg = quick_config(4, 777);
    const auto serial = bootstrap(theta, cfg);
    cfg.n_threads = 2;
    const auto parallel = bootstrap(theta, cfg);
    REQUIRE(serial.replicates == parallel.replicates);
    REQUIRE(serial.rep_ids == parallel.rep_ids);
    REQUIRE(serial.n_failed == parallel.n_failed);
    REQUIRE(serial.mean == parallel.mean);
    REQUIRE(serial.median == parallel.median);
    REQUIRE(serial.sd == parallel.sd);
}

TEST_CASE("the summary accounts for every replication and its own arithmetic") {
    const auto theta = test::table_params();
    const auto s = bootstrap(theta, quick_config(6, 2024));

    REQUIRE(s.n_reps == 6);
    REQUIRE(s.replicates.size() + static_cast<std::size_t>(s.n_failed) == 6);
    REQUIRE(s.rep_ids.size() == s.replicates.size());
    for (std::size_t i = 1; i < s.rep_ids.size(); ++i) REQUIRE(s.rep_ids[i] > s.rep_ids[i - 1]);
    for (int id : s.rep_ids) {
        REQUIRE(id >= 0);
        REQUIRE(id < 6);
    }
    REQUIRE(s.point == detail::params_to_array(theta));
    REQUIRE(s.seed == 2024);

    const std::size_t n = s.replicates.size();
    for (int i = 0; i < 10; ++i) {
        std::vector<double> col;
        for (const auto& rep : s.replicates) col.push_back(rep[static_cast<std::size_t>(i)]);
        double mean = 0.0;
        for (double x : col) mean += x;
        mean /= static_cast<double>(n);
        REQUIRE(s.mean[static_cast<std::size_t>(i)] == Catch::Approx(mean).epsilon(1e-14).margin(1e-14));

        double ss = 0.0;
        for (double x : col) ss += (x - mean) * (x - mean);
        const double sd = n >= 2 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        REQUIRE(s.sd[static_cast<std::size_t>(i)] == Catch::Approx(sd).epsilon(1e-12).margin(1e-14));

        std::sort(col.begin(), col.end());
        const double med = (n % 2 == 1) ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
        REQUIRE(s.median[static_cast<std::size_t>(i)] == med);

        REQUIRE(s.significant[static_cast<std::size_t>(i)] ==
                (std::abs(s.mean[static_cast<std::size_t>(i)]) >
                 2.0 * s.sd[static_cast<std::size_t>(i)]));
    }
}

TEST_CASE("a hopeless refit budget fails loudly instead of fabricating a table") {
    const auto theta = test::table_params();
    auto cfg = quick_config(3, 15);
    cfg.estimator.optimizer.max_evals = 15;  // one 10-simplex and change
    REQUIRE_THROWS_AS(bootstrap(theta, cfg), degenerate_sample_error);
}

TEST_CASE("bootstrap configuration validation") {
    const auto theta = test::table_params();
    auto cfg = quick_config(2, 1);
    cfg.n_reps = 0;
    REQUIRE_THROWS_AS(bootstrap(theta, cfg), config_error);
    cfg = quick_config(2, 1);
    cfg.n_threads = 0;
    REQUIRE_THROWS_AS(bootstrap(theta, cfg), config_error);
    cfg = quick_config(2, 1);
    cfg.initial.t = 0.5;  // start state off the grid origin
    REQUIRE_THROWS_AS(bootstrap(theta, cfg), config_error);
}
