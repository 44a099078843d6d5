// Command-line front end of the SSV toolkit. Every subcommand reads one JSON
// config (flags can override the seed, thread count, and output directory),
// writes its outputs plus a fully resolved config echo into the output
// directory, and is bit-for-bit reproducible for a given config at any
// thread count.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <ssv/ssv.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

json load_config(const GlobalArgs& g) {
    if (g.config_path.empty()) return json::object();
    std::ifstream f(g.config_path);
    if (!f) throw ssv::config_error("cannot open config " + g.config_path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw ssv::config_error("config " + g.config_path + ": " + e.what());
    }
}

fs::path ensure_out_dir(const GlobalArgs& g) {
    fs::path dir(g.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ssv::data_error("cannot open " + path.string() + " for writing");
    f << j.dump(2) << '\n';
}

template <typename T>
T jget(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ssv::config_error(std::string("config key '") + key + "' has the wrong type");
    }
}

std::string jget_str(const json& j, const char* key, const std::string& fallback) {
    return jget<std::string>(j, key, fallback);
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    if (!j.is_object()) throw ssv::config_error(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ssv::config_error(where + " has unknown key '" + it.key() + "'");
    }
}

ssv::TimeGrid grid_from_json(const json& j) {
    reject_unknown_keys(j, {"t0", "dt", "n_bars", "m_substeps"}, "grid");
    ssv::TimeGrid g;
    g.t0 = jget(j, "t0", 0.0);
    if (!j.contains("dt")) throw ssv::config_error("grid.dt is required");
    g.dt = j.at("dt").get<double>();
    if (!j.contains("n_bars")) throw ssv::config_error("grid.n_bars is required");
    g.n_bars = j.at("n_bars").get<std::int64_t>();
    g.m_substeps = jget(j, "m_substeps", 1);
    g.validate();
    return g;
}

json grid_to_json(const ssv::TimeGrid& g) {
    return json{{"t0", g.t0}, {"dt", g.dt}, {"n_bars", g.n_bars}, {"m_substeps", g.m_substeps}};
}

ssv::ProcessState state_from_json(const json& j, double t0) {
    reject_unknown_keys(j, {"s", "p", "v"}, "initial");
    ssv::ProcessState st;
    st.s = jget(j, "s", 0.0);
    st.p = jget(j, "p", 0.0);
    st.v = jget(j, "v", 0.0);
    st.t = t0;
    return st;
}

json state_to_json(const ssv::ProcessState& st) {
    return json{{"s", st.s}, {"p", st.p}, {"v", st.v}};
}

ssv::SessionSpec session_from_json(const json& j) {
    reject_unknown_keys(j, {"start_minute", "end_minute", "bar_minutes"}, "session");
    ssv::SessionSpec s;
    s.start_minute = jget(j, "start_minute", s.start_minute);
    s.end_minute = jget(j, "end_minute", s.end_minute);
    s.bar_minutes = jget(j, "bar_minutes", s.bar_minutes);
    s.validate();
    return s;
}

json session_to_json(const ssv::SessionSpec& s) {
    return json{{"start_minute", s.start_minute},
                {"end_minute", s.end_minute},
                {"bar_minutes", s.bar_minutes}};
}

ssv::EstimatorConfig estimator_from_json(const json& j, const GlobalArgs& g) {
    reject_unknown_keys(j,
             {"n_sims", "m_substeps", "bandwidth", "fixed_h", "seed", "density_floor",
              "max_evals", "f_tol", "x_tol", "initial_step", "n_restarts", "bounds_transform",
              "freeze_bandwidth_from_init", "price_increments", "scheme"},
             "estimator");
    ssv::EstimatorConfig est;
    est.n_sims = jget<std::int64_t>(j, "n_sims", est.n_sims);
    est.m_substeps = jget(j, "m_substeps", est.m_substeps);
    est.bandwidth_rule = ssv::bandwidth_rule_from_string(jget_str(j, "bandwidth", "scott"));
    est.fixed_h = jget<std::vector<double>>(j, "fixed_h", {});
    est.seed = jget<std::uint64_t>(j, "seed", 0);
    est.density_floor = jget(j, "density_floor", est.density_floor);
    est.optimizer.max_evals = jget(j, "max_evals", est.optimizer.max_evals);
    est.optimizer.f_tol = jget(j, "f_tol", est.optimizer.f_tol);
    est.optimizer.x_tol = jget(j, "x_tol", est.optimizer.x_tol);
    est.optimizer.initial_step = jget(j, "initial_step", est.optimizer.initial_step);
    est.optimizer.n_restarts = jget(j, "n_restarts", est.optimizer.n_restarts);
    est.bounds_transform =
        ssv::bounds_transform_from_string(jget_str(j, "bounds_transform", "log_atanh"));
    est.freeze_bandwidth_from_init =
        jget(j, "freeze_bandwidth_from_init", est.freeze_bandwidth_from_init);
    est.price_increments = jget(j, "price_increments", est.price_increments);
    est.scheme = ssv::correlation_scheme_from_string(jget_str(j, "scheme", "cholesky"));
    if (g.seed) est.seed = *g.seed;
    if (g.threads) est.n_threads = *g.threads;
    return est;
}

json estimator_to_json(const ssv::EstimatorConfig& est) {
    return json{{"n_sims", est.n_sims},
                {"m_substeps", est.m_substeps},
                {"bandwidth", ssv::to_string(est.bandwidth_rule)},
                {"fixed_h", est.fixed_h},
                {"seed", est.seed},
                {"density_floor", est.density_floor},
                {"max_evals", est.optimizer.max_evals},
                {"f_tol", est.optimizer.f_tol},
                {"x_tol", est.optimizer.x_tol},
                {"initial_step", est.optimizer.initial_step},
                {"n_restarts", est.optimizer.n_restarts},
                {"bounds_transform", ssv::to_string(est.bounds_transform)},
                {"freeze_bandwidth_from_init", est.freeze_bandwidth_from_init},
                {"price_increments", est.price_increments},
                {"scheme", ssv::to_string(est.scheme)}};
}

json fit_result_to_json(const ssv::EstimationResult& res) {
    json trace = json::array();
    for (const auto& pt : res.trace) {
        json theta;
        // sentiment-only fits carry the first three parameters, full fits all ten
        for (std::size_t i = 0; i < pt.x.size(); ++i)
            theta[ssv::detail::kParamNames[i]] = pt.x[i];
        trace.push_back(json{{"n_eval", pt.n_eval}, {"loglik", pt.f}, {"theta", theta}});
    }
    return json{{"theta_hat", ssv::to_json(res.theta_hat)},
                {"loglik", res.loglik},
                {"converged", res.converged},
                {"n_evals", res.n_evals},
                {"n_floor_hits", res.n_floor_hits},
                {"bandwidths_used", res.bandwidths_used},
                {"trace", trace}};
}

// -----------------------------------------------------------------------
// subcommands

int cmd_simulate(const GlobalArgs& g) {
    const json cfg = load_config(g);
    reject_unknown_keys(cfg,
             {"params", "grid", "initial", "n_paths", "seed", "antithetic", "scheme",
              "output", "threads"},
             "config");
    if (!cfg.contains("params")) throw ssv::config_error("simulate: config needs 'params'");
    const ssv::SsvParams prm = ssv::params_from_json(cfg.at("params"));
    ssv::SimConfig sim;
    if (!cfg.contains("grid")) throw ssv::config_error("simulate: config needs 'grid'");
    sim.grid = grid_from_json(cfg.at("grid"));
    sim.initial = state_from_json(cfg.value("initial", json::object()), sim.grid.t0);
    sim.n_paths = jget<std::int64_t>(cfg, "n_paths", 1);
    sim.seed = jget<std::uint64_t>(cfg, "seed", 0);
    sim.antithetic = jget(cfg, "antithetic", false);
    const auto scheme = ssv::correlation_scheme_from_string(jget_str(cfg, "scheme", "cholesky"));
    const std::string output = jget_str(cfg, "output", "paths.csv");
    int threads = jget(cfg, "threads", 1);
    if (g.seed) sim.seed = *g.seed;
    if (g.threads) threads = *g.threads;

    const auto paths =
        ssv::simulate_ssv(prm, sim, ssv::ShockCorrelation::from_params(prm, scheme), threads);
    const fs::path dir = ensure_out_dir(g);
    ssv::write_paths_csv(dir / output, paths, /*long_format=*/true);

    json echo{{"subcommand", "simulate"},
              {"params", ssv::to_json(prm)},
              {"grid", grid_to_json(sim.grid)},
              {"initial", state_to_json(sim.initial)},
              {"n_paths", sim.n_paths},
              {"seed", sim.seed},
              {"antithetic", sim.antithetic},
              {"scheme", ssv::to_string(scheme)},
              {"output", output},
              {"threads", threads}};
    write_json_file(dir / "config_echo.json", echo);
    std::printf("simulate: wrote %lld path(s) to %s\n", static_cast<long long>(sim.n_paths),
                (dir / output).string().c_str());
    return 0;
}

int cmd_moments(const GlobalArgs& g) {
    const json cfg = load_config(g);
    reject_unknown_keys(cfg, {"params", "s0", "v0", "times", "method", "ode_tol", "output"},
                        "config");
    if (!cfg.contains("params")) throw ssv::config_error("moments: config needs 'params'");
    const ssv::SsvParams prm = ssv::params_from_json(cfg.at("params"));
    const double s0 = jget(cfg, "s0", prm.mu_s);
    const double v0 = jget(cfg, "v0", 0.0);
    const auto times = jget<std::vector<double>>(cfg, "times", {1.0});
    const std::string method = jget_str(cfg, "method", "both");
    const double ode_tol = jget(cfg, "ode_tol", 1e-10);
    const std::string output = jget_str(cfg, "output", "moments.csv");
    if (method != "closed" && method != "ode" && method != "both")
        throw ssv::config_error("moments: method must be closed, ode, or both");
    if (times.empty()) throw ssv::config_error("moments: 'times' must be nonempty");

    const fs::path dir = ensure_out_dir(g);
    std::ofstream f(dir / output, std::ios::binary);
    if (!f) throw ssv::data_error("moments: cannot open " + (dir / output).string());
    f << "method,t,e_s,e_s2,e_s3,e_s4,e_v,e_sv,e_s2v,e_v2,var_s,var_v,cov_sv,rho_sv\n";
    auto emit = [&f](const char* m, double t, const ssv::MomentReport& r) {
        f << m << ',' << ssv::detail::format_double(t);
        for (double x : {r.e_s, r.e_s2, r.e_s3, r.e_s4, r.e_v, r.e_sv, r.e_s2v, r.e_v2, r.var_s,
                         r.var_v, r.cov_sv, r.rho_sv_t})
            f << ',' << ssv::detail::format_double(x);
        f << '\n';
    };
    for (double t : times) {
        const ssv::MomentRequest req{prm, s0, v0, t};
        if (method != "ode") emit("closed", t, ssv::theorem1_report(req));
        if (method != "closed") emit("ode", t, ssv::moments_by_ode(req, ode_tol));
    }
    f.close();

    json echo{{"subcommand", "moments"}, {"params", ssv::to_json(prm)},
              {"s0", s0},               {"v0", v0},
              {"times", times},         {"method", method},
              {"ode_tol", ode_tol},     {"output", output}};
    write_json_file(dir / "config_echo.json", echo);
    std::printf("moments: wrote %zu time point(s) to %s\n", times.size(),
                (dir / output).string().c_str());
    return 0;
}

int run_fit(const GlobalArgs& g, int channels) {
    const char* sub = channels == 1 ? "fit-ou" : "fit-ssv";
    const json cfg = load_config(g);
    reject_unknown_keys(cfg,
             {"data", "data_files", "vix_transform", "session", "dt", "estimator", "init",
              "output"},
             "config");
    if (!cfg.contains("dt")) throw ssv::config_error(std::string(sub) + ": config needs 'dt'");
    const double dt = cfg.at("dt").get<double>();
    const ssv::SessionSpec session = session_from_json(cfg.value("session", json::object()));
    const ssv::EstimatorConfig est = estimator_from_json(cfg.value("estimator", json::object()), g);
    const std::string output = jget_str(cfg, "output", "fit.json");

    ssv::ObservationSeries series;
    json data_echo;
    if (cfg.contains("data_files")) {
        if (channels == 1)
            throw ssv::config_error("fit-ou: 'data_files' is for the full triple; use 'data'");
        const json& df = cfg.at("data_files");
        reject_unknown_keys(df, {"sentiment", "price", "vix"}, "data_files");
        const auto convention =
            ssv::vix_convention_from_string(jget_str(cfg, "vix_transform", "logvar_annual"));
        const auto dataset =
            ssv::ingest(df.at("sentiment").get<std::string>(), df.at("price").get<std::string>(),
                        df.at("vix").get<std::string>(), session, convention);
        series = ssv::to_observation_series(dataset, dt);
        data_echo = json{{"data_files", df},
                         {"vix_transform", ssv::to_string(convention)},
                         {"dataset_hash", ssv::dataset_hash(dataset)}};
    } else if (cfg.contains("data")) {
        const std::string data_path = cfg.at("data").get<std::string>();
        series = ssv::read_series_csv(data_path, dt, session);
        if (series.channels != channels)
            throw ssv::data_error(std::string(sub) + ": expected a " +
                                  std::to_string(channels) + "-channel file, got " +
                                  std::to_string(series.channels));
        data_echo = json{{"data", data_path}};
    } else {
        throw ssv::config_error(std::string(sub) + ": config needs 'data' or 'data_files'");
    }

    json init_echo = "auto";
    ssv::EstimationResult res;
    if (cfg.contains("init") && cfg.at("init").is_object()) {
        ssv::SsvParams init;
        if (channels == 3) {
            init = ssv::params_from_json(cfg.at("init"));
        } else {
            const json& ij = cfg.at("init");
            reject_unknown_keys(ij, {"lambda_s", "mu_s", "sigma_s"}, "init");
            init.lambda_s = ij.at("lambda_s").get<double>();
            init.mu_s = ij.at("mu_s").get<double>();
            init.sigma_s = ij.at("sigma_s").get<double>();
            init.gamma_v = 1.0;  // untouched placeholders for the unused block
            init.sigma_v = 1.0;
        }
        init_echo = cfg.at("init");
        res = ssv::fit(series, est, init);
    } else {
        if (cfg.contains("init") && cfg.at("init") != json("auto"))
            throw ssv::config_error(std::string(sub) +
                                    ": 'init' must be \"auto\" or a parameter object");
        res = ssv::fit_auto_init(series, est);
    }

    const fs::path dir = ensure_out_dir(g);
    json out = fit_result_to_json(res);
    if (channels == 1) {
        // only the sentiment block is estimated; report just those fields
        out["theta_hat"] = json{{"lambda_s", res.theta_hat.lambda_s},
                                {"mu_s", res.theta_hat.mu_s},
                                {"sigma_s", res.theta_hat.sigma_s}};
    }
    write_json_file(dir / output, out);

    json echo{{"subcommand", sub},
              {"dt", dt},
              {"session", session_to_json(session)},
              {"estimator", estimator_to_json(est)},
              {"init", init_echo},
              {"output", output}};
    for (auto it = data_echo.begin(); it != data_echo.end(); ++it) echo[it.key()] = it.value();
    write_json_file(dir / "config_echo.json", echo);

    std::printf("%s: loglik %.6f after %d evaluations, %s\n", sub, res.loglik, res.n_evals,
                res.converged ? "converged" : "NOT converged");
    return res.converged ? 0 : 3;
}

int cmd_bootstrap(const GlobalArgs& g) {
    const json cfg = load_config(g);
    reject_unknown_keys(cfg,
             {"params", "n_reps", "seed", "grid", "initial", "estimator", "threads", "output",
              "report"},
             "config");
    if (!cfg.contains("params")) throw ssv::config_error("bootstrap: config needs 'params'");
    const ssv::SsvParams prm = ssv::params_from_json(cfg.at("params"));
    ssv::BootstrapConfig bc;
    bc.n_reps = jget(cfg, "n_reps", bc.n_reps);
    bc.seed = jget<std::uint64_t>(cfg, "seed", 0);
    if (!cfg.contains("grid")) throw ssv::config_error("bootstrap: config needs 'grid'");
    bc.data_grid = grid_from_json(cfg.at("grid"));
    bc.initial = state_from_json(cfg.value("initial", json::object()), bc.data_grid.t0);
    bc.estimator = estimator_from_json(cfg.value("estimator", json::object()), g);
    bc.n_threads = jget(cfg, "threads", 1);
    if (g.seed) bc.seed = *g.seed;
    if (g.threads) bc.n_threads = *g.threads;
    const std::string output = jget_str(cfg, "output", "bootstrap.csv");
    const std::string report_name = jget_str(cfg, "report", "bootstrap.json");

    const ssv::BootstrapSummary summary = ssv::bootstrap(prm, bc);

    const fs::path dir = ensure_out_dir(g);
    std::ofstream f(dir / output, std::ios::binary);
    if (!f) throw ssv::data_error("bootstrap: cannot open " + (dir / output).string());
    f << "statistic";
    for (const char* name : ssv::detail::kParamNames) f << ',' << name;
    f << '\n';
    auto emit = [&f](const char* stat, const std::array<double, 10>& row) {
        f << stat;
        for (double x : row) f << ',' << ssv::detail::format_double(x);
        f << '\n';
    };
    emit("point_estimate", summary.point);
    emit("mean", summary.mean);
    emit("median", summary.median);
    emit("std", summary.sd);
    f.close();

    json significant = json::object();
    for (int i = 0; i < 10; ++i)
        significant[ssv::detail::kParamNames[i]] = summary.significant[static_cast<std::size_t>(i)];
    json replicates = json::array();
    for (std::size_t r = 0; r < summary.replicates.size(); ++r) {
        json row = json::object();
        row["rep"] = summary.rep_ids[r];
        for (int i = 0; i < 10; ++i)
            row[ssv::detail::kParamNames[i]] = summary.replicates[r][static_cast<std::size_t>(i)];
        replicates.push_back(row);
    }
    write_json_file(dir / report_name, json{{"n_reps", summary.n_reps},
                                            {"n_failed", summary.n_failed},
                                            {"seed", summary.seed},
                                            {"significant", significant},
                                            {"replicates", replicates}});

    json echo{{"subcommand", "bootstrap"},
              {"params", ssv::to_json(prm)},
              {"n_reps", bc.n_reps},
              {"seed", bc.seed},
              {"grid", grid_to_json(bc.data_grid)},
              {"initial", state_to_json(bc.initial)},
              {"estimator", estimator_to_json(bc.estimator)},
              {"threads", bc.n_threads},
              {"output", output},
              {"report", report_name}};
    write_json_file(dir / "config_echo.json", echo);
    std::printf("bootstrap: %d rep(s), %d failed; wrote %s\n", summary.n_reps, summary.n_failed,
                (dir / output).string().c_str());
    return 0;
}

int cmd_train_classifier(const GlobalArgs& g) {
    const json cfg = load_config(g);
    reject_unknown_keys(cfg,
             {"data", "delimiter", "loss", "regularizer", "lambda", "lambda_grid",
              "cross_validate", "folds", "epochs", "eta0", "seed", "feature_dim_log2",
              "model_output", "report_output"},
             "config");
    if (!cfg.contains("data"))
        throw ssv::config_error("train-classifier: config needs 'data'");
    const std::string data_path = cfg.at("data").get<std::string>();
    const std::string delimiter = jget_str(cfg, "delimiter", "tab");
    const auto loss = ssv::loss_from_string(jget_str(cfg, "loss", "hinge"));
    const auto reg = ssv::reg_from_string(jget_str(cfg, "regularizer", "l1"));
    const int folds = jget(cfg, "folds", 5);
    const int feature_dim_log2 = jget(cfg, "feature_dim_log2", ssv::kDefaultFeatureDimLog2);
    ssv::SgdSchedule schedule;
    schedule.eta0 = jget(cfg, "eta0", 0.0);
    schedule.epochs = jget(cfg, "epochs", 10);
    schedule.seed = jget<std::uint64_t>(cfg, "seed", 0);
    if (g.seed) schedule.seed = *g.seed;
    const bool do_cv = jget(cfg, "cross_validate", cfg.contains("lambda_grid"));
    const std::string model_output = jget_str(cfg, "model_output", "model.bin");
    const std::string report_output = jget_str(cfg, "report_output", "training_report.json");

    const auto examples = ssv::read_labeled_sentences(data_path, delimiter);
    int class_counts[3] = {0, 0, 0};
    for (const auto& ex : examples) ++class_counts[ex.label + 1];

    json report{{"n_examples", examples.size()},
                {"class_counts",
                 {{"negative", class_counts[0]},
                  {"neutral", class_counts[1]},
                  {"positive", class_counts[2]}}}};

    double lambda;
    if (do_cv) {
        const auto grid = jget<std::vector<double>>(cfg, "lambda_grid", {1e-2, 1e-3, 1e-4});
        const auto cv =
            ssv::cross_validate(examples, loss, reg, grid, schedule, folds, feature_dim_log2);
        lambda = cv.best_lambda;
        report["cross_validation"] = json{{"lambdas", cv.lambdas},
                                          {"fold_accuracy", cv.fold_accuracy},
                                          {"mean_accuracy", cv.mean_accuracy},
                                          {"best_lambda", cv.best_lambda},
                                          {"folds", folds}};
    } else {
        if (!cfg.contains("lambda"))
            throw ssv::config_error("train-classifier: config needs 'lambda' or 'lambda_grid'");
        lambda = cfg.at("lambda").get<double>();
    }

    const auto model = ssv::train(examples, loss, reg, lambda, schedule, feature_dim_log2);
    std::vector<int> labels;
    for (const auto& ex : examples) labels.push_back(ex.label);
    const double train_acc =
        ssv::accuracy(model, ssv::hash_examples(examples, feature_dim_log2), labels);
    report["lambda"] = lambda;
    report["train_accuracy"] = train_acc;
    report["nonzero_weights"] = model.nonzero_weights();

    const fs::path dir = ensure_out_dir(g);
    model.save(dir / model_output);
    write_json_file(dir / report_output, report);

    json echo{{"subcommand", "train-classifier"},
              {"data", data_path},
              {"delimiter", delimiter},
              {"loss", ssv::to_string(loss)},
              {"regularizer", ssv::to_string(reg)},
              {"lambda", lambda},
              {"cross_validate", do_cv},
              {"folds", folds},
              {"epochs", schedule.epochs},
              {"eta0", schedule.eta0},
              {"seed", schedule.seed},
              {"feature_dim_log2", feature_dim_log2},
              {"model_output", model_output},
              {"report_output", report_output}};
    if (do_cv) echo["lambda_grid"] = jget<std::vector<double>>(cfg, "lambda_grid", {1e-2, 1e-3, 1e-4});
    write_json_file(dir / "config_echo.json", echo);
    std::printf("train-classifier: %zu examples, lambda %g, train accuracy %.4f\n",
                examples.size(), lambda, train_acc);
    return 0;
}

int cmd_score_news(const GlobalArgs& g) {
    const json cfg = load_config(g);
    reject_unknown_keys(cfg, {"model", "news", "output"}, "config");
    if (!cfg.contains("model") || !cfg.contains("news"))
        throw ssv::config_error("score-news: config needs 'model' and 'news'");
    const std::string model_path = cfg.at("model").get<std::string>();
    const std::string news_path = cfg.at("news").get<std::string>();
    const std::string output = jget_str(cfg, "output", "scores.csv");

    const auto model = ssv::ClassifierModel::load(model_path);
    const auto docs = ssv::read_news_jsonl(news_path);
    std::vector<ssv::DocumentScore> scores;
    scores.reserve(docs.size());
    for (const auto& doc : docs)
        scores.push_back(ssv::score_document(model, doc.sentences, doc.doc_id, doc.timestamp));

    const fs::path dir = ensure_out_dir(g);
    ssv::write_scores_csv(dir / output, scores);

    json echo{{"subcommand", "score-news"},
              {"model", model_path},
              {"news", news_path},
              {"output", output}};
    write_json_file(dir / "config_echo.json", echo);
    std::printf("score-news: scored %zu document(s) to %s\n", scores.size(),
                (dir / output).string().c_str());
    return 0;
}

int cmd_aggregate_sentiment(const GlobalArgs& g) {
    const json cfg = load_config(g);
    reject_unknown_keys(cfg, {"scores", "output", "report", "session", "interpolate_empty"},
                        "config");
    if (!cfg.contains("scores"))
        throw ssv::config_error("aggregate-sentiment: config needs 'scores'");
    const std::string scores_path = cfg.at("scores").get<std::string>();
    const std::string output = jget_str(cfg, "output", "bars.csv");
    const std::string report_name = jget_str(cfg, "report", "aggregate_report.json");
    const ssv::SessionSpec session = session_from_json(cfg.value("session", json::object()));
    const bool interpolate = jget(cfg, "interpolate_empty", false);

    const auto scores = ssv::read_scores_csv(scores_path);
    const auto agg = ssv::aggregate_bars(scores, session, interpolate);

    const fs::path dir = ensure_out_dir(g);
    ssv::write_bars_csv(dir / output, agg.bars);
    int n_empty = 0, n_interpolated = 0;
    for (const auto& b : agg.bars) {
        if (b.n_docs == 0) ++n_empty;
        if (b.interpolated) ++n_interpolated;
    }
    write_json_file(dir / report_name, json{{"n_docs_total", agg.n_docs_total},
                                            {"n_out_of_session", agg.n_out_of_session},
                                            {"n_bars", agg.bars.size()},
                                            {"n_empty_bars", n_empty},
                                            {"n_interpolated_bars", n_interpolated}});

    json echo{{"subcommand", "aggregate-sentiment"},
              {"scores", scores_path},
              {"output", output},
              {"report", report_name},
              {"session", session_to_json(session)},
              {"interpolate_empty", interpolate}};
    write_json_file(dir / "config_echo.json", echo);
    std::printf("aggregate-sentiment: %zu bar(s) from %d document(s)\n", agg.bars.size(),
                agg.n_docs_total);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sentiment-driven stochastic volatility toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--out-dir", g.out_dir, "output directory (created if absent)");
    std::uint64_t seed_opt = 0;
    auto* seed_flag = app.add_option("--seed", seed_opt, "override the config seed");
    int threads_opt = 1;
    auto* threads_flag = app.add_option("--threads", threads_opt, "override the thread count");

    auto* sub_simulate = app.add_subcommand("simulate", "simulate model paths to CSV");
    auto* sub_moments = app.add_subcommand("moments", "evaluate conditional moments to CSV");
    auto* sub_fit_ou = app.add_subcommand("fit-ou", "fit the sentiment block on its own");
    auto* sub_fit_ssv = app.add_subcommand("fit-ssv", "fit the full three-channel model");
    auto* sub_bootstrap = app.add_subcommand("bootstrap", "parametric bootstrap of an estimate");
    auto* sub_train = app.add_subcommand("train-classifier", "train the sentence classifier");
    auto* sub_score = app.add_subcommand("score-news", "score news documents with a model");
    auto* sub_aggregate =
        app.add_subcommand("aggregate-sentiment", "aggregate document scores into bars");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (*seed_flag) g.seed = seed_opt;
    if (*threads_flag) g.threads = threads_opt;

    try {
        if (*sub_simulate) return cmd_simulate(g);
        if (*sub_moments) return cmd_moments(g);
        if (*sub_fit_ou) return run_fit(g, 1);
        if (*sub_fit_ssv) return run_fit(g, 3);
        if (*sub_bootstrap) return cmd_bootstrap(g);
        if (*sub_train) return cmd_train_classifier(g);
        if (*sub_score) return cmd_score_news(g);
        if (*sub_aggregate) return cmd_aggregate_sentiment(g);
    } catch (const ssv::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ssv::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const ssv::degenerate_sample_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
