#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <ssv/model.hpp>
#include <ssv/params.hpp>

#include "helpers.hpp"

using namespace ssv;

TEST_CASE("parameter validation rejects each bad field") {
    auto p = test::table_params();
    REQUIRE_NOTHROW(p.validate());

    auto bad = p;
    bad.lambda_s = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = p;
    bad.sigma_s = -1.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = p;
    bad.gamma_v = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = p;
    bad.sigma_v = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = p;
    bad.rho_pv = 1.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = p;
    bad.rho_sv = -1.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = p;
    bad.mu_v = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("drift and diffusion at a reference state") {
    const auto p = test::table_params();
    ProcessState x;
    x.s = 0.3;
    x.p = 0.0;
    x.v = -3.0;

    const auto d = drift(x, p);
    REQUIRE(d.ds == Catch::Approx(37.76 * (0.203 - 0.3)).epsilon(1e-15));
    const double dev = 0.3 - 0.203;
    REQUIRE(d.dv == Catch::Approx(-0.148 + 1.86 * dev * dev - 0.049 * (-3.0)).epsilon(1e-15));
    REQUIRE(d.dp == Catch::Approx(0.0388 - 0.5 * std::exp(-3.0)).epsilon(1e-15));

    const auto g = diffusion(x, p);
    REQUIRE(g.gs == 0.916);
    REQUIRE(g.gv == 0.379);
    REQUIRE(g.gp == Catch::Approx(std::exp(-1.5)).epsilon(1e-15));
    // frozen: exp(-1.5)
    REQUIRE(g.gp == Catch::Approx(0.22313016014842983).epsilon(1e-14));
}

TEST_CASE("exp overflow in the price leg is reported, not propagated as inf") {
    const auto p = test::table_params();
    ProcessState x;
    x.s = 0.2;
    x.v = 1500.0;
    REQUIRE_THROWS_AS(drift(x, p), overflow_error);
    REQUIRE_THROWS_AS(diffusion(x, p), overflow_error);
    x.v = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(drift(x, p), overflow_error);
}

TEST_CASE("stationary price drift diagnostic matches its frozen value") {
    const double v = stationary_mu_p(test::table_params());
    // frozen independent evaluation of exp(mu_v/gamma_v + sigma_s^2/(2 lambda_s))/2
    REQUIRE(v == Catch::Approx(0.024663152212483119).epsilon(1e-12));
}

TEST_CASE("sentiment stationary variance identity") {
    const auto p = test::table_params();
    // frozen: sigma_s^2 / (2 lambda_s)
    REQUIRE(p.sigma_s * p.sigma_s / (2.0 * p.lambda_s) ==
            Catch::Approx(0.011110381355932203).epsilon(1e-15));
}

TEST_CASE("parameter JSON round trip is exact and strict") {
    const auto p = test::table_params();
    const auto j = to_json(p);
    const auto q = params_from_json(j);
    REQUIRE(q.lambda_s == p.lambda_s);
    REQUIRE(q.mu_s == p.mu_s);
    REQUIRE(q.sigma_s == p.sigma_s);
    REQUIRE(q.mu_p == p.mu_p);
    REQUIRE(q.mu_v == p.mu_v);
    REQUIRE(q.gamma_v == p.gamma_v);
    REQUIRE(q.beta_v == p.beta_v);
    REQUIRE(q.sigma_v == p.sigma_v);
    REQUIRE(q.rho_pv == p.rho_pv);
    REQUIRE(q.rho_sv == p.rho_sv);

    auto extra = j;
    extra["surprise"] = 1.0;
    REQUIRE_THROWS_AS(params_from_json(extra), data_error);

    auto missing = j;
    missing.erase("beta_v");
    REQUIRE_THROWS_AS(params_from_json(missing), data_error);

    auto wrong_type = j;
    wrong_type["mu_s"] = "0.2";
    REQUIRE_THROWS_AS(params_from_json(wrong_type), data_error);
}

TEST_CASE("time grid validation") {
    TimeGrid g;
    g.dt = 0.1;
    g.n_bars = 10;
    REQUIRE_NOTHROW(g.validate());
    REQUIRE(g.substep() == Catch::Approx(0.1).epsilon(1e-15));
    g.m_substeps = 4;
    REQUIRE(g.substep() == Catch::Approx(0.025).epsilon(1e-15));
    REQUIRE(g.time_at(3) == Catch::Approx(0.3).epsilon(1e-12));

    auto bad = g;
    bad.dt = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = g;
    bad.n_bars = 0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = g;
    bad.m_substeps = 0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
}
