#pragma once

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bdre/errors.hpp"
#include "bdre/estimators.hpp"
#include "bdre/io.hpp"
#include "bdre/specfun.hpp"
#include "bdre/verify.hpp"

namespace bdre {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kSeedEnvVar = "BDRE_LAB_SEED";

namespace cli {

/// Options shared by every subcommand.
struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string format = "csv";
    std::optional<std::string> output_dir;
    std::optional<double> alpha, sigma_e, sigma_b, z0, dt;
};

/// Defaults < config file < BDRE_LAB_SEED (seed only) < flags.
inline ExperimentConfig resolve_config(const CommonOptions& c) {
    ExperimentConfig cfg;
    if (!c.config_path.empty()) cfg = read_config(c.config_path);
    if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
        cfg.seed = parse_uint(env, kSeedEnvVar);
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads) cfg.threads = *c.threads;
    if (c.output_dir) cfg.output_dir = *c.output_dir;
    if (c.alpha) cfg.model.alpha = *c.alpha;
    if (c.sigma_e) cfg.model.sigma_e = *c.sigma_e;
    if (c.sigma_b) cfg.model.sigma_b = *c.sigma_b;
    if (c.z0) cfg.model.z0 = *c.z0;
    if (c.dt) cfg.scheme.dt = *c.dt;
    validate(cfg.model);
    validate(cfg.scheme);
    validate(cfg.quadrature);
    return cfg;
}

inline RunOptions run_options(const ExperimentConfig& cfg) {
    RunOptions o;
    o.seed = cfg.seed;
    o.threads = cfg.threads;
    return o;
}

inline ModelTag parse_model_tag(std::string_view s) {
    for (auto t : {ModelTag::Bdre, ModelTag::ConditionedExtinction, ModelTag::ConditionedSurvival,
                   ModelTag::QuenchedUnconditioned, ModelTag::QuenchedConditionedExtinction,
                   ModelTag::QuenchedConditionedSurvival}) {
        if (s == to_string(t)) return t;
    }
    throw ConfigError("unknown model '" + std::string(s) + "'");
}

inline ExtinctionMethod parse_extinction_method(std::string_view s) {
    for (auto m : {ExtinctionMethod::Pathwise, ExtinctionMethod::RaoBlackwell, ExtinctionMethod::ClosedForm}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError("unknown extinction method '" + std::string(s) + "'");
}

inline SurvivalRoute parse_survival_route(std::string_view s) {
    for (auto r : {SurvivalRoute::HTransformSim, SurvivalRoute::NegatedAlphaSim, SurvivalRoute::Reweighting,
                   SurvivalRoute::ReweightingEnvExact, SurvivalRoute::NegatedAlphaRaoBlackwell}) {
        if (s == to_string(r)) return r;
    }
    throw ConfigError("unknown survival route '" + std::string(s) + "'");
}

inline DufresneReading parse_reading(std::string_view s) {
    if (s == "as_printed") return DufresneReading::AsPrinted;
    if (s == "inverse_gamma") return DufresneReading::InverseGamma;
    throw ConfigError("unknown reading '" + std::string(s) + "'");
}

inline std::string fixed(double x, int digits = 6) {
    std::ostringstream s;
    s << std::setprecision(digits) << x;
    return s.str();
}

inline void print_records(std::ostream& out, const std::vector<ResultRecord>& records) {
    for (const auto& r : records) {
        out << std::left << std::setw(60) << r.quantity << ' ' << std::setw(14) << fixed(r.value, 8);
        if (r.std_error > 0.0) out << " ± " << fixed(r.std_error, 3);
        if (r.theoretical) out << "  (ref " << fixed(*r.theoretical, 8) << ")";
        if (r.pass) out << (*r.pass ? "  ok" : "  FAIL");
        out << '\n';
    }
}

inline void emit(const ExperimentConfig& cfg, std::string_view stem,
                 const std::vector<ResultRecord>& records, OutputFormat format, std::ostream& out) {
    const auto path = write_results(cfg.output_dir, stem, records, format);
    append_run_log(cfg.output_dir, stem, "wrote " + path.filename().string() + " config_hash=" + config_hash(cfg));
    print_records(out, records);
    out << "wrote " << path.string() << '\n';
}

}  // namespace cli

/// Entry point of the bdre_lab tool. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Branching diffusions in random environment: simulation and verification"};
    app.name("bdre_lab");
    app.require_subcommand(1, 1);
    app.fallthrough();

    cli::CommonOptions common;
    app.add_option("--config", common.config_path, "Experiment config file (key = value lines)");
    app.add_option("--seed", common.seed, "RNG seed (overrides BDRE_LAB_SEED and the config)");
    app.add_option("--threads", common.threads, "Worker threads (0: all cores)");
    app.add_option("--format", common.format, "Output format: csv or jsonl");
    app.add_option("--output-dir", common.output_dir, "Directory for result files");
    app.add_option("--alpha", common.alpha, "Criticality parameter");
    app.add_option("--sigma-e", common.sigma_e, "Environmental standard deviation");
    app.add_option("--sigma-b", common.sigma_b, "Branching standard deviation");
    app.add_option("--z0", common.z0, "Initial population");
    app.add_option("--dt", common.dt, "Euler step");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Simulate sample paths and write them as CSV");
    std::string sim_model = "bdre";
    std::size_t sim_paths = 10;
    std::optional<double> sim_horizon;
    std::optional<std::size_t> sim_stride;
    simulate->add_option("--model", sim_model,
                         "bdre, conditioned-extinction, conditioned-survival, quenched-unconditioned, "
                         "quenched-conditioned-extinction, quenched-conditioned-survival");
    simulate->add_option("--paths", sim_paths, "Number of paths");
    simulate->add_option("--horizon", sim_horizon, "Time horizon");
    simulate->add_option("--stride", sim_stride, "Keep every k-th grid point");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "Monte Carlo estimates with closed-form references");
    std::string est_quantity;
    std::vector<std::string> est_routes;
    std::optional<std::uint64_t> est_n;
    std::optional<double> est_t;
    std::vector<double> est_grid;
    estimate->add_option("--quantity", est_quantity,
                         "extinction, conditioned_survival, martingale, laplace, equivalence, dufresne");
    estimate->add_option("--route", est_routes, "Methods or routes")->delimiter(',');
    estimate->add_option("--n", est_n, "Sample size");
    estimate->add_option("--t", est_t, "Horizon or time point");
    estimate->add_option("--grid", est_grid, "Checkpoints or lambda values")->delimiter(',');

    // rates
    auto* rates = app.add_subcommand("rates", "Fit decay rates of the survival probability given extinction");
    std::vector<double> rate_alphas{0.5, 1.0, 2.0};
    std::optional<std::uint64_t> rate_n;
    std::vector<double> rate_grid;
    double rate_dt = 1e-2;
    rates->add_option("--alphas", rate_alphas, "Criticality parameters")->delimiter(',');
    rates->add_option("--n", rate_n, "Environments per time point");
    rates->add_option("--t-grid", rate_grid, "Time points")->delimiter(',');
    rates->add_option("--env-dt", rate_dt, "Environment grid step");

    // specfun
    auto* specfun = app.add_subcommand("specfun", "Tabulate special functions and limit constants");
    bool sf_psi = false, sf_phi = false, sf_integral = false, sf_constant = false, sf_laplace = false;
    std::vector<double> sf_a{1.0};
    double sf_beta = 2.0;
    std::vector<double> sf_lambda{1.0};
    std::string sf_reading = "inverse_gamma";
    specfun->add_flag("--psi", sf_psi, "psi(a)");
    specfun->add_flag("--phi", sf_phi, "phi_beta(a)");
    specfun->add_flag("--integral", sf_integral, "Integral of a psi(a)");
    specfun->add_flag("--constant", sf_constant, "Limit constant of the survival probability");
    specfun->add_flag("--laplace", sf_laplace, "Laplace transform of the martingale limit");
    specfun->add_option("--a", sf_a, "Abscissae")->delimiter(',');
    specfun->add_option("--beta", sf_beta, "beta for phi_beta");
    specfun->add_option("--lambda", sf_lambda, "lambda values")->delimiter(',');
    specfun->add_option("--reading", sf_reading, "as_printed or inverse_gamma");

    // verify
    auto* verify = app.add_subcommand("verify", "Run the verification checklist");
    std::string preset_name = "standard";
    std::vector<int> only;
    verify->add_option("--preset", preset_name, "standard or quick");
    verify->add_option("--only", only, "Criterion ids to run")->delimiter(',');

    // bridge
    auto* bridge = app.add_subcommand("bridge", "Discrete BPRE against the diffusion extinction probability");
    std::uint64_t bridge_scale = 1000;
    std::size_t bridge_reps = 10000;
    double bridge_horizon = 30.0;
    bridge->add_option("--scale", bridge_scale, "Scaling level n");
    bridge->add_option("--reps", bridge_reps, "Replications");
    bridge->add_option("--horizon", bridge_horizon, "Horizon in diffusion time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        app.exit(e, out, err);
        return kExitConfig;
    }

    try {
        ExperimentConfig cfg = cli::resolve_config(common);
        const OutputFormat format = parse_format(common.format);
        const RunOptions o = cli::run_options(cfg);

        if (simulate->parsed()) {
            const ModelTag tag = cli::parse_model_tag(sim_model);
            SchemeConfig sc = cfg.scheme;
            if (sim_horizon) sc.horizon = *sim_horizon;
            if (sim_stride) sc.stride = *sim_stride;
            std::filesystem::create_directories(cfg.output_dir);
            const auto path = std::filesystem::path(cfg.output_dir) / "paths.csv";
            std::ofstream file(path, std::ios::binary);
            if (!file) throw ConfigError("cannot write " + path.string());
            file << "path,t,z,s,model,seed\n";
            for (std::size_t i = 0; i < sim_paths; ++i) {
                const Path p = simulate_path(tag, cfg.model, sc, RngStream{cfg.seed, 1}.substream(i));
                for (std::size_t k = 0; k < p.times.size(); ++k) {
                    file << i << ',' << format_double(p.times[k]) << ',' << format_double(p.z_values[k])
                         << ',' << format_double(p.s_values[k]) << ',' << to_string(tag) << ','
                         << cfg.seed << '\n';
                }
            }
            append_run_log(cfg.output_dir, "paths", "simulate model=" + sim_model);
            out << "wrote " << path.string() << '\n';
            return kExitOk;
        }

        if (estimate->parsed()) {
            const Experiment quantity = est_quantity.empty() ? cfg.experiment : parse_experiment(est_quantity);
            cfg.experiment = quantity;
            if (est_n) cfg.n = *est_n;
            if (est_t) cfg.t = *est_t;
            if (!est_routes.empty()) cfg.routes = est_routes;
            const std::string hash = config_hash(cfg);
            const auto& p = cfg.model;
            std::vector<ResultRecord> recs;
            auto push = [&](const MCEstimate& e, std::string name, std::optional<double> ref,
                            std::string prov, std::optional<bool> pass = std::nullopt) {
                recs.push_back(record_from(e, std::move(name), ref, std::move(prov), pass, cfg.seed, hash));
            };
            switch (quantity) {
                case Experiment::Extinction: {
                    const std::optional<double> ref =
                        p.alpha > 0.0 ? std::optional(extinction_probability(p.z0, p)) : std::nullopt;
                    for (const auto& r : cfg.routes) {
                        const auto m = cli::parse_extinction_method(r);
                        SchemeConfig sc = cfg.scheme;
                        if (m == ExtinctionMethod::RaoBlackwell && !common.dt) sc.dt = 1e-2;
                        const auto e = estimate_extinction(p, m, cfg.n, cfg.t, sc, o);
                        push(e, "extinction." + r, ref, ref ? "closed_form" : "",
                             ref ? std::optional(std::abs(e.mean - *ref) <= 3.0 * e.std_error) : std::nullopt);
                    }
                    break;
                }
                case Experiment::ConditionedSurvival: {
                    std::vector<std::string> routes = est_routes;
                    if (routes.empty()) routes = {"h_transform_sim", "negated_alpha_sim", "reweighting"};
                    SchemeConfig sc = cfg.scheme;
                    sc.horizon = cfg.t;
                    for (const auto& r : routes) {
                        push(estimate_conditioned_survival(p, cfg.t, cli::parse_survival_route(r), cfg.n, sc, o),
                             "conditioned_survival.t=" + format_double(cfg.t) + "." + r, std::nullopt, "");
                    }
                    break;
                }
                case Experiment::Martingale: {
                    const std::vector<double> ck = est_grid.empty() ? std::vector<double>{0.5, 1.0, 2.0} : est_grid;
                    const auto suite = martingale_suite(p, ck, cfg.n, cfg.scheme, o);
                    for (std::size_t f = 0; f < 3; ++f) {
                        for (std::size_t j = 0; j < ck.size(); ++j) {
                            const auto& e = suite.coarse[f][j];
                            push(e, std::string(to_string(kAllMartingaleFunctionals[f])) + ".t=" + format_double(ck[j]),
                                 suite.initial[f], "initial_value",
                                 std::abs(e.mean - suite.initial[f]) <= 3.0 * e.std_error);
                        }
                    }
                    break;
                }
                case Experiment::Laplace: {
                    const std::vector<double> lam = est_grid.empty() ? cfg.lambda_grid : est_grid;
                    const double t = est_t ? *est_t : 20.0;
                    for (const auto& r : laplace_limit_test(p, lam, t, cfg.n, 1e-2, o, LaplaceMethod::Sampled,
                                                            cfg.quadrature)) {
                        push(r.empirical, "laplace.lambda=" + format_double(r.lambda), r.quadrature,
                             "laplace_Y_inverse_gamma",
                             std::abs(r.empirical.mean - r.quadrature) <= 3.0 * r.empirical.std_error);
                    }
                    break;
                }
                case Experiment::Equivalence: {
                    const double t = est_t ? *est_t : 1.0;
                    const auto r = conditioned_law_equivalence_test(p, t, cfg.n, cfg.scheme, o);
                    recs.push_back({"ks.conditioned_vs_negated_alpha.statistic", r.matched.statistic, 0.0, r.n,
                                    r.matched.critical_value, "ks_critical_1pct", !r.matched.rejects(), cfg.seed,
                                    hash});
                    recs.push_back({"ks.conditioned_vs_plus_alpha.statistic", r.control.statistic, 0.0, r.n,
                                    r.control.critical_value, "ks_critical_1pct", r.control.rejects(), cfg.seed,
                                    hash});
                    break;
                }
                case Experiment::Dufresne: {
                    const double horizon = est_t ? *est_t : 40.0;
                    const auto r = dufresne_selection_test(p, cfg.n, horizon, 1e-2, o);
                    recs.push_back({"ks.inverse_gamma.statistic", r.inverse_gamma.statistic, 0.0, r.n,
                                    r.inverse_gamma.critical_value, "ks_critical_1pct",
                                    !r.inverse_gamma.rejects(), cfg.seed, hash});
                    recs.push_back({"ks.as_printed.statistic", r.as_printed.statistic, 0.0, r.n,
                                    r.as_printed.critical_value, "ks_critical_1pct", r.as_printed.rejects(),
                                    cfg.seed, hash});
                    break;
                }
                default:
                    throw ConfigError("estimate does not handle experiment '" +
                                      std::string(to_string(quantity)) + "'");
            }
            cli::emit(cfg, "estimate", recs, format, out);
            return kExitOk;
        }

        if (rates->parsed()) {
            cfg.experiment = Experiment::Rates;
            if (rate_n) cfg.n = *rate_n;
            if (!rate_grid.empty()) cfg.t_grid = rate_grid;
            const std::string hash = config_hash(cfg);
            std::vector<ResultRecord> recs;
            std::vector<NamedCurve> curves;
            for (double a : rate_alphas) {
                const ModelParams p = cfg.model.with_alpha(a);
                const auto ex = decay_exponents(p);
                const auto curve = conditioned_survival_curve(p, cfg.t_grid, cfg.n, rate_dt, o, true);
                const std::string tag = "alpha=" + format_double(a);
                for (const auto& pt : curve) {
                    recs.push_back(record_from(pt.estimate, tag + ".survival.t=" + format_double(pt.t),
                                               std::nullopt, "", std::nullopt, cfg.seed, hash));
                }
                const RateFit fit = fit_rate_from_points(curve, ex.power);
                recs.push_back({tag + ".rate", fit.exponential_rate, 0.0, cfg.n, ex.rate, "decay_exponent",
                                std::abs(fit.exponential_rate - ex.rate) <= 0.1 * ex.rate, cfg.seed, hash});
                recs.push_back({tag + ".fit_rmse", fit.fit_rmse, 0.0, fit.points.size(), std::nullopt, "",
                                std::nullopt, cfg.seed, hash});
                curves.push_back({tag + " (" + std::string(to_string(classify_regime(p))) + ")", fit});
            }
            write_rate_plot(cfg.output_dir, "rates", curves);
            cli::emit(cfg, "rates", recs, format, out);
            return kExitOk;
        }

        if (specfun->parsed()) {
            const std::string hash = config_hash(cfg);
            std::vector<ResultRecord> recs;
            auto add = [&](std::string name, double v, std::optional<double> ref, std::string prov) {
                recs.push_back({std::move(name), v, 0.0, 0, ref, std::move(prov), std::nullopt, cfg.seed, hash});
            };
            const bool any = sf_psi || sf_phi || sf_integral || sf_constant || sf_laplace;
            if (sf_psi || !any) {
                for (double a : sf_a) add("psi.a=" + format_double(a), psi(a, cfg.quadrature), psi_closed_form(a), "closed_form");
            }
            if (sf_phi) {
                for (double a : sf_a) {
                    add("phi_beta.a=" + format_double(a) + ".beta=" + format_double(sf_beta),
                        phi_beta(a, sf_beta, cfg.quadrature), std::nullopt, "");
                }
            }
            if (sf_integral) add("integral_a_psi", integral_a_psi(cfg.quadrature), 1.0 / std::sqrt(2.0 * std::numbers::pi), "closed_form");
            if (sf_constant) {
                const auto& p = cfg.model;
                const Regime regime = classify_regime(p);
                const auto c = theorem1_constant(p, regime, p.z0, cfg.quadrature, cli::parse_reading(sf_reading));
                add("limit_constant." + std::string(to_string(regime)) + "." + sf_reading, c.value, std::nullopt, "");
            }
            if (sf_laplace) {
                for (double l : sf_lambda) {
                    add("laplace_Y.lambda=" + format_double(l) + "." + sf_reading,
                        laplace_Y(l, cfg.model.z0, cfg.model, cli::parse_reading(sf_reading), cfg.quadrature),
                        std::nullopt, "");
                }
            }
            write_results(out, recs, format);
            return kExitOk;
        }

        if (verify->parsed()) {
            const VerifyPreset preset = VerifyPreset::named(preset_name);
            const auto report = run_verify(preset, cfg.seed, cfg.threads, only, [&](const CriterionOutcome& c) {
                out << "criterion " << c.id << ' ' << (c.passed() ? "PASS" : "FAIL") << "  " << c.title
                    << "  (" << cli::fixed(c.seconds, 3) << " s)\n";
                out.flush();
            });
            const ExperimentConfig vcfg = [&] {
                ExperimentConfig v = verify_config(preset, cfg.seed);
                v.output_dir = cfg.output_dir;
                return v;
            }();
            const auto path = write_results(vcfg.output_dir, "verify", report.records, format);
            std::ostringstream log;
            for (const auto& c : report.criteria) {
                log << "criterion=" << c.id << " seconds=" << c.seconds << ' ';
            }
            append_run_log(vcfg.output_dir, "verify", log.str());
            out << "\n";
            cli::print_records(out, report.records);
            out << "\nwrote " << path.string() << '\n';
            for (const auto& c : report.criteria) {
                for (const auto& n : c.notes) out << "criterion " << c.id << ": " << n << '\n';
            }
            return report.all_passed() ? kExitOk : kExitVerificationFailed;
        }

        if (bridge->parsed()) {
            cfg.experiment = Experiment::Bridge;
            cfg.bridge_scale = bridge_scale;
            cfg.n = bridge_reps;
            cfg.t = bridge_horizon;
            const std::string hash = config_hash(cfg);
            const auto e = bridge_extinction(cfg.model, bridge_scale, bridge_reps, bridge_horizon, o);
            std::vector<ResultRecord> recs;
            std::optional<double> ref;
            if (cfg.model.alpha > 0.0 && cfg.model.sigma_e > 0.0 && cfg.model.sigma_b > 0.0) {
                ref = extinction_probability(cfg.model.z0, cfg.model);
            }
            recs.push_back(record_from(e, "bpre_extinction.n=" + std::to_string(bridge_scale), ref,
                                       ref ? "closed_form" : "",
                                       ref ? std::optional(std::abs(e.mean - *ref) <= 3.0 * e.std_error)
                                           : std::nullopt,
                                       cfg.seed, hash));
            cli::emit(cfg, "bridge", recs, format, out);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NotComputable& e) {
        err << "not computable: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace bdre
