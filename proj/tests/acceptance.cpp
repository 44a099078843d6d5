// End-to-end acceptance gate. Each criterion prints its evidence and one
// [PASS]/[FAIL] verdict line; the process exit code is the number of failed
// criteria, so ctest can register each criterion as its own test.
//
// Usage: ssv_acceptance <path-to-cli|none> [criterion numbers...]

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <ssv/classifier.hpp>
#include <ssv/data_io.hpp>
#include <ssv/moments.hpp>
#include <ssv/moments_ode.hpp>
#include <ssv/npsmle.hpp>
#include <ssv/rng.hpp>
#include <ssv/sentiment_bars.hpp>
#include <ssv/simulate.hpp>
#include <ssv/text.hpp>

#include "helpers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Checker {
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            std::printf("    fail: %s\n", what.c_str());
        }
    }
};

double rel_gap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) return 0.0;
    return std::abs(a - b) / scale;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: the three moment routes agree at the reference point
// ---------------------------------------------------------------------------

struct SnapshotSums {
    // accumulators for (s - s0, v - v0); the shift keeps the running sums
    // small so the single pass stays well conditioned
    double s1x = 0, s2x = 0, s3x = 0, s4x = 0;
    double s1y = 0, s2y = 0, s3y = 0, s4y = 0;
    double s11 = 0, s21 = 0, s12 = 0, s22 = 0;
};

bool criterion_1() {
    using namespace ssv;
    Checker c;
    const auto p = test::table_params();
    const double s0 = p.mu_s, v0 = -3.0;

    // closed form against the independent ODE integration
    for (double t : {0.1, 0.5, 1.0}) {
        const MomentRequest req{p, s0, v0, t};
        const auto a = theorem1_report(req);
        const auto b = moments_by_ode(req, 1e-12);
        const std::array<std::pair<const char*, std::pair<double, double>>, 6> stats = {{
            {"E[S]", {a.e_s, b.e_s}},
            {"Var(S)", {a.var_s, b.var_s}},
            {"E[V]", {a.e_v, b.e_v}},
            {"Var(V)", {a.var_v, b.var_v}},
            {"Cov(S,V)", {a.cov_sv, b.cov_sv}},
            {"rho(S,V)", {a.rho_sv_t, b.rho_sv_t}},
        }};
        double worst = 0.0;
        for (const auto& [name, pr] : stats) {
            const double r = rel_gap(pr.first, pr.second);
            worst = std::max(worst, r);
            c.expect(r <= 1e-7, std::string("closed vs ode ") + name + " at t=" + fmt("%.2f", t) +
                                    " rel gap " + fmt("%.3e", r));
        }
        std::printf("    t=%-4.2f closed vs ode worst rel gap %.3e (bound 1e-7)\n", t, worst);
    }

    // Monte Carlo leg: 200000 paths, 50 substeps per bar; the bar width is
    // 0.005 so the Euler step is 1e-4, keeping the chain's variance bias on
    // the stiff sentiment block well inside the statistical band
    const auto t_start = std::chrono::steady_clock::now();
    SimConfig sc;
    sc.grid.t0 = 0.0;
    sc.grid.dt = 0.005;
    sc.grid.n_bars = 200;
    sc.grid.m_substeps = 50;
    sc.n_paths = 200000;
    sc.seed = 424242;
    sc.initial.s = s0;
    sc.initial.p = 0.0;
    sc.initial.v = v0;

    const std::array<std::int64_t, 3> bars = {20, 100, 200};
    std::array<SnapshotSums, 3> acc;
    std::int64_t n = 0;
    for_each_ssv_path(p, sc, ShockCorrelation::from_params(p),
                      [&](std::int64_t, const PathTriple& pt) {
                          for (std::size_t j = 0; j < bars.size(); ++j) {
                              const double x = pt.s[static_cast<std::size_t>(bars[j])] - s0;
                              const double y = pt.v[static_cast<std::size_t>(bars[j])] - v0;
                              auto& a = acc[j];
                              a.s1x += x; a.s2x += x * x; a.s3x += x * x * x; a.s4x += x * x * x * x;
                              a.s1y += y; a.s2y += y * y; a.s3y += y * y * y; a.s4y += y * y * y * y;
                              a.s11 += x * y; a.s21 += x * x * y; a.s12 += x * y * y;
                              a.s22 += x * x * y * y;
                          }
                          ++n;
                      });
    c.expect(n == sc.n_paths, "path count mismatch");
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    for (std::size_t j = 0; j < bars.size(); ++j) {
        const double t = sc.grid.time_at(bars[j]);
        const auto r = theorem1_report({p, s0, v0, t});
        const auto& a = acc[j];
        const double dn = static_cast<double>(n);
        const double ax = a.s1x / dn, ay = a.s1y / dn;
        const double m2x = a.s2x / dn - ax * ax;
        const double m2y = a.s2y / dn - ay * ay;
        const double m4x = a.s4x / dn - 4 * ax * a.s3x / dn + 6 * ax * ax * a.s2x / dn -
                           3 * ax * ax * ax * ax;
        const double m4y = a.s4y / dn - 4 * ay * a.s3y / dn + 6 * ay * ay * a.s2y / dn -
                           3 * ay * ay * ay * ay;
        const double cov = a.s11 / dn - ax * ay;
        const double m22 = a.s22 / dn - 2 * ay * a.s21 / dn - 2 * ax * a.s12 / dn +
                           ay * ay * a.s2x / dn + ax * ax * a.s2y / dn + 4 * ax * ay * a.s11 / dn -
                           3 * ax * ax * ay * ay;
        const double rho = cov / std::sqrt(m2x * m2y);

        const double se_es = std::sqrt(m2x / dn);
        const double se_ev = std::sqrt(m2y / dn);
        const double se_vx = std::sqrt(std::max(m4x - m2x * m2x, 0.0) / dn);
        const double se_vy = std::sqrt(std::max(m4y - m2y * m2y, 0.0) / dn);
        const double se_cov = std::sqrt(std::max(m22 - cov * cov, 0.0) / dn);
        const double se_rho = (1.0 - rho * rho) / std::sqrt(dn);

        const std::array<std::tuple<const char*, double, double, double>, 6> rows = {{
            {"E[S]", ax + s0, r.e_s, se_es},
            {"Var(S)", m2x, r.var_s, se_vx},
            {"E[V]", ay + v0, r.e_v, se_ev},
            {"Var(V)", m2y, r.var_v, se_vy},
            {"Cov(S,V)", cov, r.cov_sv, se_cov},
            {"rho(S,V)", rho, r.rho_sv_t, se_rho},
        }};
        std::string zs;
        for (const auto& [name, mc, closed, se] : rows) {
            const double z = (mc - closed) / se;
            zs += std::string(" ") + name + "=" + fmt("%.2f", z);
            c.expect(std::abs(mc - closed) <= 4.0 * se,
                     std::string("mc ") + name + " at t=" + fmt("%.2f", t) + ": " +
                         fmt("%.8g", mc) + " vs " + fmt("%.8g", closed) + " (|z| = " +
                         fmt("%.2f", std::abs(z)) + " > 4)");
        }
        std::printf("    t=%-4.2f mc z-scores:%s\n", t, zs.c_str());
    }
    std::printf("    mc leg: %lld paths in %.1f s (2-minute figure is informational)\n",
                static_cast<long long>(n), elapsed);
    return c.ok;
}

// ---------------------------------------------------------------------------
// criterion 2: with feedback off, E[V_t] collapses to the linear relaxation
// ---------------------------------------------------------------------------

bool criterion_2() {
    using namespace ssv;
    Checker c;
    std::mt19937_64 eng(20260819ull);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto p = test::random_params(eng);
        p.beta_v = 0.0;
        const double s0 = -0.5 + 1.3 * u(eng);
        const double v0 = -4.0 + 3.5 * u(eng);
        const double t = 0.1 + 1.9 * u(eng);
        const double got = theorem1_report({p, s0, v0, t}).e_v;
        const double want = std::exp(-p.gamma_v * t) * v0 +
                            (p.mu_v / p.gamma_v) * (1.0 - std::exp(-p.gamma_v * t));
        const double r = rel_gap(got, want);
        worst = std::max(worst, r);
        c.expect(r <= 1e-12, "set " + std::to_string(i) + ": E[V] rel gap " + fmt("%.3e", r));
    }
    std::printf("    100 random zero-feedback sets, worst rel gap %.3e (bound 1e-12)\n", worst);
    return c.ok;
}

// ---------------------------------------------------------------------------
// criterion 3: feedback strictly raises the level and spread of log-variance
// ---------------------------------------------------------------------------

bool criterion_3() {
    using namespace ssv;
    Checker c;
    const auto on = test::table_params();
    auto off = on;
    off.beta_v = 0.0;
    double min_ev_lift = 1e300, min_vv_lift = 1e300;
    for (int k = 1; k <= 40; ++k) {
        const double t = 0.05 * k;
        const auto a = theorem1_report({on, on.mu_s, -3.0, t});
        const auto b = theorem1_report({off, on.mu_s, -3.0, t});
        min_ev_lift = std::min(min_ev_lift, a.e_v - b.e_v);
        min_vv_lift = std::min(min_vv_lift, a.var_v - b.var_v);
        c.expect(a.e_v > b.e_v, "E[V] not lifted at t=" + fmt("%.2f", t));
        c.expect(a.var_v > b.var_v, "Var(V) not lifted at t=" + fmt("%.2f", t));
    }
    std::printf("    40 grid points on (0,2]; smallest lifts: E[V] %+.3e, Var(V) %+.3e\n",
                min_ev_lift, min_vv_lift);
    return c.ok;
}

// ---------------------------------------------------------------------------
// criterion 4: OU recovery on one year of 15-minute bars
// ---------------------------------------------------------------------------

bool criterion_4() {
    using namespace ssv;
    Checker c;
    const auto p = test::table_params();
    const std::uint64_t base = 0x0A5u;
    const int n_reps = 20;
    int hits = 0, hit_mu = 0, hit_sig = 0, hit_lam = 0, n_conv = 0;
    std::vector<double> mu_hats, sig_hats, lam_hats;

    for (int rep = 0; rep < n_reps; ++rep) {
        SimConfig sc;
        sc.grid.t0 = 0.0;
        sc.grid.dt = 1.0 / 6500.0;
        sc.grid.n_bars = 6500;
        sc.grid.m_substeps = 1;
        sc.n_paths = 1;
        sc.seed = stream_seed(base, static_cast<std::uint64_t>(rep));
        sc.initial.s = p.mu_s;
        const auto paths = simulate_ou(p, sc);
        const auto series = ObservationSeries::from_sentiment(sc.grid, paths[0]);

        EstimatorConfig ec;
        ec.n_sims = 500;
        ec.m_substeps = 1;
        ec.bandwidth_rule = BandwidthRule::silverman;
        ec.seed = stream_seed(base, 1000 + static_cast<std::uint64_t>(rep));
        ec.optimizer.max_evals = 2000;
        ec.optimizer.record_trace = false;

        const auto res = fit_auto_init(series, ec);
        const auto& th = res.theta_hat;
        const bool ok_mu = std::abs(th.mu_s - p.mu_s) <= 0.01;
        const bool ok_sig = std::abs(th.sigma_s / p.sigma_s - 1.0) <= 0.05;
        const bool ok_lam = std::abs(th.lambda_s / p.lambda_s - 1.0) <= 0.15;
        const bool hit = res.converged && ok_mu && ok_sig && ok_lam;
        n_conv += res.converged ? 1 : 0;
        hit_mu += ok_mu;
        hit_sig += ok_sig;
        hit_lam += ok_lam;
        hits += hit;
        mu_hats.push_back(th.mu_s);
        sig_hats.push_back(th.sigma_s);
        lam_hats.push_back(th.lambda_s);
        std::printf("    rep %2d conv=%d lambda=%7.3f mu=%+.4f sigma=%.4f hits(mu,sig,lam)=(%d,%d,%d)\n",
                    rep, res.converged ? 1 : 0, th.lambda_s, th.mu_s, th.sigma_s, ok_mu, ok_sig,
                    ok_lam);
        std::fflush(stdout);
    }

    auto mean_sd = [](const std::vector<double>& xs) {
        double m = 0;
        for (double x : xs) m += x;
        m /= static_cast<double>(xs.size());
        double v = 0;
        for (double x : xs) v += (x - m) * (x - m);
        v /= static_cast<double>(xs.size() - 1);
        return std::pair<double, double>(m, std::sqrt(v));
    };
    const auto [mu_m, mu_sd] = mean_sd(mu_hats);
    const auto [sig_m, sig_sd] = mean_sd(sig_hats);
    const auto [lam_m, lam_sd] = mean_sd(lam_hats);
    std::printf("    converged %d/20; joint hits %d/20 (need >= 18)\n", n_conv, hits);
    std::printf("    per-parameter hits: mu %d/20, sigma %d/20, lambda %d/20\n", hit_mu, hit_sig,
                hit_lam);
    std::printf("    mu_hat    mean %+.5f sd %.5f (band half-width 0.010)\n", mu_m, mu_sd);
    std::printf("    sigma_hat mean %.5f sd %.5f\n", sig_m, sig_sd);
    std::printf("    lambda_hat mean %.3f sd %.3f\n", lam_m, lam_sd);
    std::printf("    note: over a span of T = 1 the location of a mean-reverting path is only\n"
                "    pinned to sd(mu_hat) ~ sigma/(lambda sqrt(T)) = %.4f, so a +-0.010 band\n"
                "    is hit with probability ~%.2f per rep regardless of estimator quality\n",
                p.sigma_s / p.lambda_s,
                std::erf(0.01 / (p.sigma_s / p.lambda_s) / std::numbers::sqrt2));
    c.expect(hits >= 18, "joint recovery rate " + std::to_string(hits) + "/20 below 18/20");
    return c.ok;
}

// ---------------------------------------------------------------------------
// criterion 5: the feedback coefficient is detected on short joint series
// ---------------------------------------------------------------------------

bool criterion_5() {
    using namespace ssv;
    Checker c;
    const auto p = test::table_params();
    const std::uint64_t base = 0x0B5u;
    const int n_reps = 20;
    const double v_bar =
        (p.mu_v + p.beta_v * p.sigma_s * p.sigma_s / (2.0 * p.lambda_s)) / p.gamma_v;

    int n_conv = 0, n_failed = 0, n_pos = 0;
    double beta_sum = 0.0;
    for (int rep = 0; rep < n_reps; ++rep) {
        SimConfig sc;
        sc.grid.t0 = 0.0;
        sc.grid.dt = 1.0 / 26.0;
        sc.grid.n_bars = 2000;
        sc.grid.m_substeps = 1;
        sc.n_paths = 1;
        sc.seed = stream_seed(base, static_cast<std::uint64_t>(rep));
        sc.initial.s = p.mu_s;
        sc.initial.p = 0.0;
        sc.initial.v = v_bar;
        const auto paths = simulate_ssv(p, sc, ShockCorrelation::from_params(p), 1);
        const auto series = ObservationSeries::from_triple(paths[0]);

        EstimatorConfig ec;
        ec.n_sims = 500;
        ec.m_substeps = 1;
        ec.bandwidth_rule = BandwidthRule::scott;
        ec.seed = stream_seed(base, 1000 + static_cast<std::uint64_t>(rep));
        ec.optimizer.max_evals = 8000;
        ec.optimizer.record_trace = false;

        try {
            const auto res = fit_auto_init(series, ec);
            if (!res.converged) {
                ++n_failed;
                std::printf("    rep %2d did not converge (%d evals)\n", rep, res.n_evals);
            } else {
                ++n_conv;
                n_pos += res.theta_hat.beta_v > 0.0;
                beta_sum += res.theta_hat.beta_v;
                std::printf("    rep %2d beta_hat %+.4f (%d evals)\n", rep, res.theta_hat.beta_v,
                            res.n_evals);
            }
        } catch (const degenerate_sample_error& e) {
            ++n_failed;
            std::printf("    rep %2d degenerate: %s\n", rep, e.what());
        } catch (const data_error& e) {
            ++n_failed;
            std::printf("    rep %2d data error: %s\n", rep, e.what());
        }
        std::fflush(stdout);
    }

    c.expect(n_conv >= 1, "no replication converged");
    if (n_conv >= 1) {
        const double frac_pos = static_cast<double>(n_pos) / n_conv;
        const double beta_mean = beta_sum / n_conv;
        std::printf("    converged %d/20, beta_hat > 0 in %d/%d (%.0f%%), mean beta_hat %.4f\n",
                    n_conv, n_pos, n_conv, 100.0 * frac_pos, beta_mean);
        c.expect(frac_pos >= 0.9, "positive-sign rate " + fmt("%.2f", frac_pos) + " below 0.9");
        c.expect(std::abs(beta_mean - p.beta_v) <= 2.49,
                 "mean beta_hat " + fmt("%.3f", beta_mean) + " further than 2.49 from 1.86");
    }
    return c.ok;
}

// ---------------------------------------------------------------------------
// criterion 6: document-score bound and label-flip antisymmetry
// ---------------------------------------------------------------------------

bool criterion_6() {
    using namespace ssv;
    Checker c;

    // rig a classifier whose decisions are known exactly: "up" scores
    // positive, "down" negative, anything else ties to neutral
    const int dim_log2 = 12;
    ClassifierModel model(dim_log2, LossKind::hinge, RegKind::l1, 1e-4);
    const auto f_up = hash_features({"up"}, dim_log2);
    const auto f_down = hash_features({"down"}, dim_log2);
    c.expect(f_up.entries.size() == 1 && f_down.entries.size() == 1, "unexpected feature layout");
    c.expect(f_up.entries[0].first != f_down.entries[0].first,
             "marker words collide in the hashed space");
    model.weights()[2][f_up.entries[0].first] = 5.0 * f_up.entries[0].second;
    model.weights()[0][f_down.entries[0].first] = 5.0 * f_down.entries[0].second;

    // all-positive documents score exactly ln 2
    bool bound_exact = true;
    for (int n_sent = 1; n_sent <= 50; ++n_sent) {
        const std::vector<std::string> sentences(static_cast<std::size_t>(n_sent), "up");
        const auto sc = score_document(model, sentences, "d", "2024-03-05 10:00:00");
        if (!(sc.b_score == std::numbers::ln2 ||
              std::abs(sc.b_score - std::numbers::ln2) <=
                  std::numeric_limits<double>::epsilon())) {
            bound_exact = false;
            c.expect(false, "all-positive doc with " + std::to_string(n_sent) +
                                " sentences scored " + fmt("%.17g", sc.b_score));
        }
    }
    std::printf("    all-positive documents score ln 2 = %.17g%s\n", std::numbers::ln2,
                bound_exact ? " exactly" : " FAILED");

    // flipping every label negates the score bitwise
    std::mt19937_64 eng(99);
    std::uniform_int_distribution<int> n_dist(1, 8), w_dist(0, 2);
    const std::array<std::string, 3> words = {"up", "down", "flat"};
    const std::array<std::string, 3> mirror = {"down", "up", "flat"};
    int n_exact = 0;
    for (int i = 0; i < 1000; ++i) {
        const int n_sent = n_dist(eng);
        std::vector<std::string> doc, doc_m;
        for (int k = 0; k < n_sent; ++k) {
            const int w = w_dist(eng);
            doc.push_back(words[static_cast<std::size_t>(w)]);
            doc_m.push_back(mirror[static_cast<std::size_t>(w)]);
        }
        const double b = score_document(model, doc, "a", "2024-03-05 10:00:00").b_score;
        const double bm = score_document(model, doc_m, "b", "2024-03-05 10:00:00").b_score;
        if (bm == -b)
            ++n_exact;
        else
            c.expect(false, "doc " + std::to_string(i) + ": " + fmt("%.17g", bm) +
                                " != -(" + fmt("%.17g", b) + ")");
    }
    std::printf("    label negation exact on %d/1000 random documents\n", n_exact);
    return c.ok;
}

// ---------------------------------------------------------------------------
// criterion 7: classifier cross-validation accuracy
// ---------------------------------------------------------------------------

std::vector<ssv::SentenceExample> synthetic_corpus(int n, std::uint64_t seed) {
    const std::array<std::vector<std::string>, 3> markers = {{
        {"plunge", "miss", "slump"},
        {"steady", "unchanged", "inline"},
        {"surge", "beat", "rally"},
    }};
    const std::vector<std::string> filler = {"the",    "company", "quarter", "results", "market",
                                             "shares", "report",  "today",   "group",   "traders"};
    std::mt19937_64 eng(seed);
    std::uniform_int_distribution<int> m_pick(0, 2), f_pick(0, 9), n_fill(4, 8);
    std::vector<ssv::SentenceExample> out;
    for (int i = 0; i < n; ++i) {
        const int label = (i % 3) - 1;
        ssv::SentenceExample ex;
        ex.label = label;
        ex.tokens.push_back(markers[static_cast<std::size_t>(label + 1)]
                                   [static_cast<std::size_t>(m_pick(eng))]);
        ex.tokens.push_back(markers[static_cast<std::size_t>(label + 1)]
                                   [static_cast<std::size_t>(m_pick(eng))]);
        const int nf = n_fill(eng);
        for (int k = 0; k < nf; ++k)
            ex.tokens.push_back(filler[static_cast<std::size_t>(f_pick(eng))]);
        std::shuffle(ex.tokens.begin(), ex.tokens.end(), eng);
        out.push_back(std::move(ex));
    }
    return out;
}

bool criterion_7() {
    using namespace ssv;
    Checker c;
    const auto examples = synthetic_corpus(500, 7);
    SgdSchedule schedule;
    schedule.eta0 = 0.0;  // pilot-pass selection
    schedule.epochs = 10;
    schedule.seed = 7;
    const auto report = cross_validate(examples, LossKind::hinge, RegKind::l1,
                                       {1e-2, 1e-3, 1e-4}, schedule, 5);
    double best_mean = 0.0;
    for (std::size_t i = 0; i < report.lambdas.size(); ++i) {
        std::printf("    lambda %.0e mean cv accuracy %.4f\n", report.lambdas[i],
                    report.mean_accuracy[i]);
        if (report.lambdas[i] == report.best_lambda) best_mean = report.mean_accuracy[i];
    }
    std::printf("    selected lambda %.0e\n", report.best_lambda);
    c.expect(best_mean >= 0.95, "cv accuracy " + fmt("%.4f", best_mean) + " below 0.95");

    const char* pb = std::getenv("SSV_PHRASE_BANK");
    if (pb != nullptr && *pb != '\0' && fs::exists(pb)) {
        const auto bank = read_labeled_sentences(pb, "at");
        const auto br = cross_validate(bank, LossKind::hinge, RegKind::l1, {1e-2, 1e-3, 1e-4},
                                       schedule, 5);
        double bank_mean = 0.0;
        for (std::size_t i = 0; i < br.lambdas.size(); ++i)
            if (br.lambdas[i] == br.best_lambda) bank_mean = br.mean_accuracy[i];
        std::printf("    external corpus (%zu sentences): cv accuracy %.4f\n", bank.size(),
                    bank_mean);
        c.expect(std::abs(bank_mean - 0.82) <= 0.05,
                 "external corpus accuracy " + fmt("%.4f", bank_mean) + " outside 0.82 +- 0.05");
    } else {
        std::printf("    external labeled corpus not supplied (set SSV_PHRASE_BANK to enable);"
                    " that check is skipped\n");
    }
    return c.ok;
}

// ---------------------------------------------------------------------------
// criterion 8: CLI determinism across reruns and thread counts
// ---------------------------------------------------------------------------

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
    return out;
}

json params_json(const ssv::SsvParams& p) {
    return json{{"lambda_s", p.lambda_s}, {"mu_s", p.mu_s},       {"sigma_s", p.sigma_s},
                {"mu_p", p.mu_p},         {"mu_v", p.mu_v},       {"gamma_v", p.gamma_v},
                {"beta_v", p.beta_v},     {"sigma_v", p.sigma_v}, {"rho_pv", p.rho_pv},
                {"rho_sv", p.rho_sv}};
}

int run_cli(const std::string& cli, const std::string& sub, const fs::path& cfg,
            const fs::path& out_dir, int threads, const fs::path& log) {
    const std::string cmd = "\"" + cli + "\" " + sub + " --config \"" + cfg.string() +
                            "\" --out-dir \"" + out_dir.string() + "\" --threads " +
                            std::to_string(threads) + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    if (WIFEXITED(rc)) return WEXITSTATUS(rc);
    return -2;
}

bool criterion_8(const std::string& cli) {
    using namespace ssv;
    Checker c;
    if (cli == "none") {
        c.expect(false, "no CLI binary supplied on the command line");
        return c.ok;
    }

    const fs::path base = fs::temp_directory_path() / "ssv_acceptance_cli";
    fs::remove_all(base);
    fs::create_directories(base / "inputs");
    fs::create_directories(base / "logs");
    std::printf("    working under %s\n", base.string().c_str());

    // ---- inputs generated through the library ----
    const auto table = test::table_params();
    char buf[128];

    {   // one-channel series on whole grid positions
        auto p = table;
        p.lambda_s = 2.0;
        p.mu_s = 0.2;
        p.sigma_s = 0.9;
        SimConfig sc;
        sc.grid = {0.0, 0.05, 260, 1};
        sc.n_paths = 1;
        sc.seed = 31;
        sc.initial.s = 0.2;
        const auto paths = simulate_ou(p, sc);
        std::string csv = "timestamp,s\n";
        for (std::size_t i = 0; i < paths[0].size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, paths[0][i]);
            csv += buf;
        }
        write_file(base / "inputs/ou.csv", csv);
    }
    const double v_bar =
        (table.mu_v + table.beta_v * table.sigma_s * table.sigma_s / (2.0 * table.lambda_s)) /
        table.gamma_v;
    {   // three-channel series
        SimConfig sc;
        sc.grid = {0.0, 1.0 / 26.0, 120, 1};
        sc.n_paths = 1;
        sc.seed = 37;
        sc.initial.s = table.mu_s;
        sc.initial.p = 0.0;
        sc.initial.v = v_bar;
        const auto paths = simulate_ssv(table, sc, ShockCorrelation::from_params(table), 1);
        std::string csv = "timestamp,s,p,v\n";
        for (std::size_t i = 0; i < paths[0].s.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, paths[0].s[i],
                          paths[0].p[i], paths[0].v[i]);
            csv += buf;
        }
        write_file(base / "inputs/triple.csv", csv);
    }
    {   // labeled sentences, tab delimited
        const auto corpus = synthetic_corpus(120, 11);
        const std::array<const char*, 3> names = {"negative", "neutral", "positive"};
        std::string tsv;
        for (const auto& ex : corpus) {
            std::string line;
            for (const auto& tok : ex.tokens) {
                if (!line.empty()) line += ' ';
                line += tok;
            }
            tsv += line + "\t" + names[static_cast<std::size_t>(ex.label + 1)] + "\n";
        }
        write_file(base / "inputs/train.tsv", tsv);
    }
    {   // news documents, both JSONL shapes, some outside the session
        std::mt19937_64 eng(13);
        std::uniform_int_distribution<int> pick(0, 2);
        const std::array<const char*, 3> frags = {"Shares surge after the beat",
                                                  "Results miss and shares plunge",
                                                  "Outlook steady and unchanged"};
        std::string lines;
        const std::array<const char*, 2> days = {"2024-03-05", "2024-03-06"};
        for (int k = 0; k < 24; ++k) {
            const std::string day = days[static_cast<std::size_t>(k % 2)];
            std::string stamp;
            if (k == 5) stamp = day + " 08:00:00";        // before the open
            else if (k == 11) stamp = day + " 17:30:00";  // after the close
            else {
                const int minute = 9 * 60 + 30 + (k * 17) % (390 - 1);
                std::snprintf(buf, sizeof buf, " %02d:%02d:00", minute / 60, minute % 60);
                stamp = day + buf;
            }
            json doc{{"doc_id", "doc-" + std::to_string(k)}, {"timestamp", stamp}};
            if (k % 3 == 0)
                doc["sentences"] = json::array({frags[static_cast<std::size_t>(pick(eng))],
                                                frags[static_cast<std::size_t>(pick(eng))]});
            else
                doc["text"] = std::string(frags[static_cast<std::size_t>(pick(eng))]) + ". " +
                              frags[static_cast<std::size_t>(pick(eng))] + ".";
            lines += doc.dump() + "\n";
        }
        write_file(base / "inputs/news.jsonl", lines);
    }

    // ---- configs (shared verbatim by every run) ----
    const double dt26 = 1.0 / 26.0;
    const fs::path in = base / "inputs";
    write_file(base / "simulate.json",
               json{{"params", params_json(table)},
                    {"grid", {{"t0", 0.0}, {"dt", dt26}, {"n_bars", 120}, {"m_substeps", 2}}},
                    {"initial", {{"s", 0.203}, {"p", 0.0}, {"v", -2.6}}},
                    {"n_paths", 6},
                    {"seed", 11},
                    {"scheme", "cholesky"},
                    {"output", "paths.csv"}}
                   .dump(2));
    write_file(base / "moments.json",
               json{{"params", params_json(table)},
                    {"s0", 0.25},
                    {"v0", -2.5},
                    {"times", {0.1, 0.5, 1.0}},
                    {"method", "both"},
                    {"output", "moments.csv"}}
                   .dump(2));
    write_file(base / "fit_ou.json",
               json{{"data", (in / "ou.csv").string()},
                    {"dt", 0.05},
                    {"estimator",
                     {{"n_sims", 120},
                      {"bandwidth", "silverman"},
                      {"seed", 5},
                      {"max_evals", 600},
                      {"n_restarts", 0}}},
                    {"init", "auto"},
                    {"output", "fit.json"}}
                   .dump(2));
    write_file(base / "fit_ssv.json",
               json{{"data", (in / "triple.csv").string()},
                    {"dt", dt26},
                    {"estimator",
                     {{"n_sims", 80},
                      {"bandwidth", "scott"},
                      {"seed", 9},
                      {"max_evals", 150},
                      {"n_restarts", 0}}},
                    {"init", params_json(table)},
                    {"output", "fit.json"}}
                   .dump(2));
    write_file(base / "bootstrap.json",
               json{{"params", params_json(table)},
                    {"n_reps", 2},
                    {"seed", 3},
                    {"grid", {{"t0", 0.0}, {"dt", dt26}, {"n_bars", 120}, {"m_substeps", 1}}},
                    {"initial", {{"s", 0.203}, {"p", 0.0}, {"v", -2.6}}},
                    {"estimator",
                     {{"n_sims", 150},
                      {"bandwidth", "scott"},
                      {"max_evals", 900},
                      {"f_tol", 1e-3},
                      {"x_tol", 1e-2},
                      {"n_restarts", 0}}},
                    {"output", "bootstrap.csv"},
                    {"report", "bootstrap.json"}}
                   .dump(2));
    write_file(base / "train.json",
               json{{"data", (in / "train.tsv").string()},
                    {"delimiter", "tab"},
                    {"loss", "hinge"},
                    {"regularizer", "l1"},
                    {"lambda_grid", {1e-3, 1e-4}},
                    {"folds", 4},
                    {"epochs", 6},
                    {"eta0", 0.5},
                    {"seed", 13},
                    {"feature_dim_log2", 12},
                    {"model_output", "model.bin"},
                    {"report_output", "training_report.json"}}
                   .dump(2));
    write_file(base / "score.json",
               json{{"model", (base / "run_a/train/model.bin").string()},
                    {"news", (in / "news.jsonl").string()},
                    {"output", "scores.csv"}}
                   .dump(2));
    write_file(base / "aggregate.json",
               json{{"scores", (base / "run_a/score/scores.csv").string()},
                    {"output", "bars.csv"},
                    {"report", "aggregate_report.json"},
                    {"session",
                     {{"start_minute", 570}, {"end_minute", 960}, {"bar_minutes", 15}}},
                    {"interpolate_empty", true}}
                   .dump(2));

    struct Sub {
        const char* name;
        const char* cfg;
        const char* dir;
        bool is_fit;
    };
    const std::array<Sub, 8> subs = {{
        {"simulate", "simulate.json", "sim", false},
        {"moments", "moments.json", "moments", false},
        {"fit-ou", "fit_ou.json", "fit_ou", true},
        {"fit-ssv", "fit_ssv.json", "fit_ssv", true},
        {"bootstrap", "bootstrap.json", "bootstrap", false},
        {"train-classifier", "train.json", "train", false},
        {"score-news", "score.json", "score", false},
        {"aggregate-sentiment", "aggregate.json", "aggregate", false},
    }};
    const std::array<std::pair<const char*, int>, 3> runs = {{
        {"run_a", 1},
        {"run_b", 1},
        {"run_t", 4},
    }};

    std::map<std::string, std::array<int, 3>> codes;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        for (const auto& s : subs) {
            const fs::path out_dir = base / runs[r].first / s.dir;
            const fs::path log =
                base / "logs" / (std::string(runs[r].first) + "_" + s.dir + ".log");
            const int code =
                run_cli(cli, s.name, base / s.cfg, out_dir, runs[r].second, log);
            codes[s.name][r] = code;
        }
    }

    for (const auto& s : subs) {
        const auto& cd = codes[s.name];
        std::printf("    %-19s exit codes %d/%d/%d\n", s.name, cd[0], cd[1], cd[2]);
        c.expect(cd[0] == cd[1] && cd[1] == cd[2],
                 std::string(s.name) + ": exit codes differ across runs");
        const bool allowed = s.is_fit ? (cd[0] == 0 || cd[0] == 3) : (cd[0] == 0);
        c.expect(allowed, std::string(s.name) + ": unexpected exit code " +
                              std::to_string(cd[0]));
    }

    auto compare = [&](const char* run_x, const char* run_y, bool skip_echo) {
        for (const auto& s : subs) {
            auto a = snapshot_tree(base / run_x / s.dir);
            auto b = snapshot_tree(base / run_y / s.dir);
            c.expect(a.count("config_echo.json") == 1,
                     std::string(s.name) + ": missing config_echo.json");
            if (skip_echo) {
                a.erase("config_echo.json");
                b.erase("config_echo.json");
            }
            if (a == b) continue;
            c.expect(false, std::string(s.name) + ": " + run_x + " vs " + run_y + " differ");
            for (const auto& [rel, bytes] : a) {
                const auto it = b.find(rel);
                if (it == b.end())
                    std::printf("        only in %s: %s\n", run_x, rel.c_str());
                else if (it->second != bytes)
                    std::printf("        differs: %s (%zu vs %zu bytes)\n", rel.c_str(),
                                bytes.size(), it->second.size());
            }
            for (const auto& [rel, bytes] : b)
                if (a.find(rel) == a.end())
                    std::printf("        only in %s: %s\n", run_y, rel.c_str());
        }
    };
    compare("run_a", "run_b", false);  // identical rerun: everything matches
    compare("run_a", "run_t", true);   // thread variation: echo records the thread count
    if (c.ok) std::printf("    all outputs byte-identical (rerun and 4-thread run)\n");
    return c.ok;
}

const char* criterion_title(int k) {
    switch (k) {
        case 1: return "closed-form, ODE, and Monte Carlo moments agree";
        case 2: return "zero-feedback mean log-variance matches the linear form";
        case 3: return "feedback raises the level and spread of log-variance";
        case 4: return "OU parameter recovery on one year of bars";
        case 5: return "feedback coefficient detected on short joint series";
        case 6: return "document-score bound and label-flip antisymmetry";
        case 7: return "classifier cross-validation accuracy";
        case 8: return "CLI byte-identical across reruns and thread counts";
        default: return "?";
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-cli|none> [criterion numbers...]\n", argv[0]);
        return 64;
    }
    const std::string cli = argv[1];
    std::vector<int> which;
    for (int i = 2; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};

    int n_failed = 0;
    for (int k : which) {
        if (k < 1 || k > 8) {
            std::fprintf(stderr, "unknown criterion %d\n", k);
            return 64;
        }
        std::printf("== criterion %d: %s ==\n", k, criterion_title(k));
        std::fflush(stdout);
        bool ok = false;
        try {
            switch (k) {
                case 1: ok = criterion_1(); break;
                case 2: ok = criterion_2(); break;
                case 3: ok = criterion_3(); break;
                case 4: ok = criterion_4(); break;
                case 5: ok = criterion_5(); break;
                case 6: ok = criterion_6(); break;
                case 7: ok = criterion_7(); break;
                case 8: ok = criterion_8(cli); break;
            }
        } catch (const std::exception& e) {
            std::printf("    unexpected exception: %s\n", e.what());
            ok = false;
        }
        std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", k, criterion_title(k));
        std::fflush(stdout);
        n_failed += ok ? 0 : 1;
    }
    return n_failed;
}
