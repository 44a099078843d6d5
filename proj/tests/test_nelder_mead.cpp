#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <ssv/nelder_mead.hpp>

using namespace ssv;

TEST_CASE("simplex search solves a shifted quadratic") {
    auto f = [](const std::vector<double>& x) {
        const double a = x[0] - 1.5, b = x[1] + 2.0, c = x[2] - 0.25;
        return 3.0 * a * a + 0.5 * b * b + 7.0 * c * c + 4.0;
    };
    NelderMeadOptions opt;
    opt.max_evals = 2000;
    opt.f_tol = 1e-12;
    opt.x_tol = 1e-8;
    const auto res = nelder_mead(f, {0.0, 0.0, 0.0}, opt);
    REQUIRE(res.converged);
    REQUIRE(res.f == Catch::Approx(4.0).margin(1e-9));
    REQUIRE(res.x[0] == Catch::Approx(1.5).margin(1e-4));
    REQUIRE(res.x[1] == Catch::Approx(-2.0).margin(1e-4));
    REQUIRE(res.x[2] == Catch::Approx(0.25).margin(1e-4));
    REQUIRE(res.n_evals <= opt.max_evals);
}

TEST_CASE("simplex search crosses the Rosenbrock valley") {
    auto f = [](const std::vector<double>& x) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    NelderMeadOptions opt;
    opt.max_evals = 5000;
    opt.f_tol = 1e-12;
    opt.x_tol = 1e-9;
    opt.n_restarts = 4;
    const auto res = nelder_mead(f, {-1.2, 1.0}, opt);
    REQUIRE(res.converged);
    REQUIRE(res.x[0] == Catch::Approx(1.0).margin(1e-3));
    REQUIRE(res.x[1] == Catch::Approx(1.0).margin(1e-3));
    REQUIRE(res.f < 1e-6);
}

TEST_CASE("budget exhaustion reports non-convergence but keeps the incumbent") {
    auto f = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double xi : x) s += xi * xi;
        return s;
    };
    NelderMeadOptions opt;
    opt.max_evals = 12;  // enough for one 10-simplex and a step or two
    const std::vector<double> x0(10, 3.0);
    const auto res = nelder_mead(f, x0, opt);
    REQUIRE_FALSE(res.converged);
    REQUIRE(res.n_evals <= opt.max_evals);
    REQUIRE(res.f <= f(x0));
    REQUIRE(res.x.size() == 10);
}

TEST_CASE("the trace records strictly improving incumbents") {
    auto f = [](const std::vector<double>& x) {
        return (x[0] - 3.0) * (x[0] - 3.0) + std::abs(x[1]);
    };
    NelderMeadOptions opt;
    opt.max_evals = 800;
    const auto res = nelder_mead(f, {0.0, 4.0}, opt);
    REQUIRE(res.trace.size() >= 2);
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
        REQUIRE(res.trace[i].f < res.trace[i - 1].f);
        REQUIRE(res.trace[i].n_eval > res.trace[i - 1].n_eval);
    }
    REQUIRE(res.trace.back().f == res.f);
    REQUIRE(res.trace.back().x == res.x);
    REQUIRE(res.trace.front().n_eval == 1);

    NelderMeadOptions quiet = opt;
    quiet.record_trace = false;
    const auto res2 = nelder_mead(f, {0.0, 4.0}, quiet);
    REQUIRE(res2.trace.empty());
    REQUIRE(res2.f == res.f);
}

TEST_CASE("optimizer configuration validation") {
    auto f = [](const std::vector<double>& x) { return x[0] * x[0]; };
    NelderMeadOptions opt;
    REQUIRE_THROWS_AS(nelder_mead(f, {}, opt), config_error);
    opt.max_evals = 1;
    REQUIRE_THROWS_AS(nelder_mead(f, {1.0}, opt), config_error);
    opt.max_evals = 100;
    opt.initial_step = 0.0;
    REQUIRE_THROWS_AS(nelder_mead(f, {1.0}, opt), config_error);
}

TEST_CASE("restarts rescue a prematurely collapsed simplex") {
    // A narrow curved valley where a small first simplex stalls: with
    // restarts disabled the solver may stop short; with restarts it must
    // reach the optimum. At minimum the restart run is never worse.
    auto f = [](const std::vector<double>& x) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    NelderMeadOptions no_restart;
    no_restart.max_evals = 4000;
    no_restart.n_restarts = 0;
    no_restart.initial_step = 1e-3;
    NelderMeadOptions with_restart = no_restart;
    with_restart.n_restarts = 6;

    const auto r0 = nelder_mead(f, {-1.2, 1.0}, no_restart);
    const auto r1 = nelder_mead(f, {-1.2, 1.0}, with_restart);
    REQUIRE(r1.f <= r0.f + 1e-12);
}
