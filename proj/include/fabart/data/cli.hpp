#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fabart/data/chain_io.hpp"
#include "fabart/data/config.hpp"
#include "fabart/data/csv.hpp"
#include "fabart/eval/scores.hpp"
#include "fabart/favar/forecast.hpp"
#include "fabart/identify/girf.hpp"
#include "fabart/sim/experiment.hpp"

namespace fabart::data {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

struct CliContext {
    RunConfig config;
    fs::path out_dir;
    std::ostream& out;
};

namespace cli {

inline fs::path ensure_dir(const fs::path& base, const char* sub) {
    const fs::path p = base / sub;
    fs::create_directories(p);
    return p;
}

inline std::ofstream open(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw DataError("cannot write " + p.string());
    os.precision(17);
    return os;
}

inline LoadOptions load_options(const RunConfig& c) {
    LoadOptions o;
    o.z_column = c.data.z_column;
    o.z_transform = c.data.z_transform;
    o.exclude = c.data.exclude;
    return o;
}

inline favar::PanelData estimation_panel(const CliContext& ctx, const std::optional<std::string>& end) {
    if (ctx.config.data.panel.empty()) throw ConfigError("data.panel is not set");
    LoadReport rep;
    auto p = load_panel(ctx.config.data.panel, load_options(ctx.config), &rep);
    if (end) {
        const auto it = std::find(p.dates.begin(), p.dates.end(), *end);
        if (it == p.dates.end()) throw ConfigError("estimation end date " + *end + " is not in the panel window");
        const auto len = static_cast<Eigen::Index>(it - p.dates.begin()) + 1;
        p.dates.resize(static_cast<std::size_t>(len));
        p.x.conservativeResize(len, Eigen::NoChange);
        if (p.has_z()) p.z.conservativeResize(len);
    }
    ctx.out << "load: " << p.periods() << " periods x " << p.n_vars() << " series, window " << p.dates.front() << " to "
            << p.dates.back() << (p.has_z() ? ", observed factor " + p.z_name : std::string()) << '\n';
    return p;
}

inline void write_truth_and_panels(const CliContext& ctx) {
    const auto& s = ctx.config.sim;
    const fs::path dir = ensure_dir(ctx.out_dir, "tables");
    Rng rng(ctx.config.seed);
    Rng f_rng = rng.split(0);
    const Vector f = sim::simulate_factor(s.spec, f_rng);
    std::vector<std::string> dates;
    for (Eigen::Index t = 0; t < f.size(); ++t) dates.push_back(std::to_string(t + 1));
    {
        auto os = open(dir / "sim_truth_factor.csv");
        write_matrix(os, {"date", "F"}, f, dates);
    }
    for (auto kind : s.experiment.kinds) {
        sim::DgpSpec spec = s.spec;
        spec.kind = kind;
        Rng p_rng = rng.split(1);
        const auto p = sim::simulate_panel(f, spec, p_rng);
        std::vector<std::string> header{"date"};
        for (Eigen::Index j = 0; j < p.x.cols(); ++j) header.push_back("X" + std::to_string(j + 1));
        auto os = open(dir / (std::string("sim_panel_") + sim::kind_name(kind) + ".csv"));
        write_matrix(os, header, p.x, dates);
        auto ls = open(dir / (std::string("sim_loadings_") + sim::kind_name(kind) + ".csv"));
        Matrix br(p.loadings.size(), 2);
        br << p.loadings, p.idio_var;
        std::vector<std::string> rows;
        for (Eigen::Index j = 0; j < p.x.cols(); ++j) rows.push_back("X" + std::to_string(j + 1));
        write_matrix(ls, {"series", "loading", "idio_var"}, br, rows);
    }
    ctx.out << "simulate: " << s.experiment.kinds.size() << " panels of " << s.spec.n_obs << " x " << s.spec.n_vars
            << " written to " << dir.string() << '\n';
}

inline void run_montecarlo(const CliContext& ctx) {
    const auto& s = ctx.config.sim;
    const fs::path dir = ensure_dir(ctx.out_dir, "tables");
    sim::ExperimentOptions opt = s.experiment;
    opt.threads = ctx.config.threads;
    const Rng rng(ctx.config.seed);
    const auto exp = sim::recursive_forecast_experiment(s.spec, opt, rng);
    {
        auto os = open(dir / "rmse_table.csv");
        sim::write_rmse_table(os, exp);
    }
    for (const auto& k : exp.kinds)
        ctx.out << "forecast experiment " << sim::kind_name(k.kind) << ": FABART/RW " << k.ratio(k.fabart) << ", FAVAR/RW "
                << k.ratio(k.favar) << '\n';

    sim::ExperimentOptions mc_opt = opt;
    mc_opt.chain.n_draws = s.mc_draws;
    mc_opt.chain.n_burn = s.mc_burn;
    const auto mc = sim::monte_carlo(s.spec, s.n_reps, mc_opt, rng.split(99));
    auto os = open(dir / "mc_correlations.csv");
    os << "dgp,replication,correlation,sign\n";
    auto es = open(dir / "mc_errors.csv");
    es << "dgp,replication,t,error\n";
    for (const auto& r : mc) {
        for (std::size_t i = 0; i < r.correlations.size(); ++i) {
            os << sim::kind_name(r.kind) << ',' << i << ',' << r.correlations[i] << ',' << r.signs[i] << '\n';
            for (Eigen::Index t = 0; t < r.errors.cols(); ++t)
                es << sim::kind_name(r.kind) << ',' << i << ',' << t + 1 << ',' << r.errors(static_cast<Eigen::Index>(i), t)
                   << '\n';
        }
        ctx.out << "montecarlo " << sim::kind_name(r.kind) << ": mean correlation " << r.mean_correlation()
                << ", error grand mean " << r.grand_mean_error() << '\n';
    }
}

inline void run_estimate(const CliContext& ctx, const std::optional<std::string>& end) {
    const auto panel = estimation_panel(ctx, end);
    auto cfg = ctx.config.favar;
    cfg.threads = ctx.config.threads;
    Rng rng(ctx.config.seed);
    favar::ChainOptions opt;
    const auto res = favar::run_chain(panel, cfg, rng, opt);
    write_chain(ensure_dir(ctx.out_dir, "draws"), res, ctx.config.seed);
    {
        const Matrix f = res.mean_factors();
        std::vector<std::string> header{"date"};
        for (Eigen::Index j = 0; j < f.cols(); ++j) header.push_back("F" + std::to_string(j + 1));
        auto os = open(ensure_dir(ctx.out_dir, "tables") / "factors_mean.csv");
        write_matrix(os, header, f, panel.dates);
    }
    const auto& tr = res.trace.back();
    ctx.out << "estimate: " << cfg.n_draws << " iterations, " << res.draws.size() << " retained; last sweep mean sigma "
            << tr.mean_sigma << ", tree acceptance " << tr.tree_accept_rate << '\n';
}

inline favar::ChainResult load_draws(const CliContext& ctx, const std::string& draws_dir) {
    const fs::path d = draws_dir.empty() ? ctx.out_dir / "draws" : fs::path(draws_dir);
    if (!fs::exists(d / "meta.csv")) throw DataError("no chain dump in " + d.string() + " (run estimate first)");
    auto r = read_chain(d);
    ctx.out << "load draws: " << r.draws.size() << " retained draws from " << d.string() << '\n';
    return r;
}

inline void run_forecast(const CliContext& ctx, const std::string& draws_dir) {
    const auto res = load_draws(ctx, draws_dir);
    const auto& fc = ctx.config.forecast;
    Rng rng = Rng(ctx.config.seed).split(7);
    favar::ForecastOptions opt;
    opt.paths_per_draw = fc.paths_per_draw;
    const auto ens = favar::forecast(res, fc.horizon, rng, opt);
    const fs::path dir = ensure_dir(ctx.out_dir, "forecasts");
    const std::string origin = res.model.panel.dates.empty() ? std::to_string(res.model.periods()) : res.model.panel.dates.back();
    auto os = open(dir / "ensemble.csv");
    os << "origin,path,horizon,variable,value\n";
    for (std::size_t p = 0; p < ens.paths.size(); ++p)
        for (int h = 1; h <= fc.horizon; ++h)
            for (std::size_t c = 0; c < ens.names.size(); ++c)
                os << origin << ',' << p << ',' << h << ',' << ens.names[c] << ','
                   << ens.paths[p](h - 1, static_cast<Eigen::Index>(c)) << '\n';
    auto ss = open(dir / "summary.csv");
    ss << "origin,variable,horizon,mean,q16,q50,q84\n";
    for (std::size_t c = 0; c < ens.names.size(); ++c)
        for (int h = 1; h <= fc.horizon; ++h) {
            const Vector v = ens.column_draws(c, h);
            std::vector<double> vv(v.data(), v.data() + v.size());
            ss << origin << ',' << ens.names[c] << ',' << h << ',' << v.mean() << ',' << identify::quantile(vv, 0.16) << ','
               << identify::quantile(vv, 0.5) << ',' << identify::quantile(vv, 0.84) << '\n';
        }
    ctx.out << "forecast: " << ens.paths.size() << " paths, horizon " << fc.horizon << ", origin " << origin << '\n';
}

inline void run_girf(const CliContext& ctx, const std::string& draws_dir) {
    const auto res = load_draws(ctx, draws_dir);
    const auto& g = ctx.config.girf;
    if (ctx.config.data.instrument.empty()) throw ConfigError("data.instrument is not set");
    if (!res.model.has_z()) throw ConfigError("GIRF identification needs an observed factor (data.z_column)");
    identify::Instrument inst;
    inst.m = read_instrument(ctx.config.data.instrument, res.model.panel.dates);
    identify::ProxyOptions popt;
    popt.weak_f = g.weak_f;
    popt.min_overlap = g.min_overlap;
    const auto sd = identify::structural_draws(res, inst, popt);
    std::vector<Vector> impacts;
    const fs::path dir = ensure_dir(ctx.out_dir, "girf");
    {
        auto os = open(dir / "structural.csv");
        os << "draw,rho_sq,first_stage_f,n_obs";
        const auto names = detail::state_names(res.model);
        for (const auto& n : names) os << ",impact_" << n;
        os << '\n';
        for (std::size_t d = 0; d < sd.size(); ++d) {
            os << d << ',' << sd[d].rho_sq << ',' << sd[d].first_stage_f << ',' << sd[d].n_obs;
            for (Eigen::Index i = 0; i < sd[d].impact_column.size(); ++i) os << ',' << sd[d].impact_column(i);
            os << '\n';
            impacts.push_back(sd[d].impact_column);
        }
    }
    identify::GirfOptions opt;
    opt.horizons = g.horizons;
    opt.n_sim = g.n_sim;
    opt.shock_size = g.shock_size;
    opt.mirror = g.mirror;
    opt.threads = ctx.config.threads;
    const Rng rng = Rng(ctx.config.seed).split(11);
    std::vector<int> signs;
    if (g.sign != "negative") signs.push_back(1);
    if (g.sign != "positive") signs.push_back(-1);
    auto os = open(dir / "girf.csv");
    std::vector<identify::GirfResult> results;
    for (std::size_t i = 0; i < signs.size(); ++i) {
        opt.sign = signs[i];
        results.push_back(identify::girf(res, impacts, opt, rng));
        std::ostringstream tmp;
        identify::write_girf_table(tmp, results.back());
        const std::string body = tmp.str();
        os << (i == 0 ? body : body.substr(body.find('\n') + 1));
        ctx.out << "girf " << (signs[i] > 0 ? "+" : "-") << ": " << results.back().used_draws.size() << " draws, exclusion rate "
                << results.back().exclusion_rate() << '\n';
    }
    if (results.size() == 2) {
        const Matrix a = identify::asymmetry(results[0], results[1]);
        auto as = open(dir / "asymmetry.csv");
        as << "variable,horizon,asymmetry\n";
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            for (Eigen::Index k = 0; k < a.rows(); ++k)
                as << results[0].names[static_cast<std::size_t>(c)] << ',' << k << ',' << a(k, c) << '\n';
    }
    double rho = 0.0;
    for (const auto& s : sd) rho += s.rho_sq / static_cast<double>(sd.size());
    ctx.out << "identify: mean instrument reliability proxy " << rho << '\n';
}

struct EnsembleKey {
    std::string origin;
    int horizon;
    std::string variable;
    bool operator<(const EnsembleKey& o) const {
        return std::tie(origin, horizon, variable) < std::tie(o.origin, o.horizon, o.variable);
    }
};

inline void run_evaluate(const CliContext& ctx, const std::vector<std::string>& ensemble_files) {
    std::vector<std::string> files = ensemble_files;
    if (files.empty()) files.push_back((ctx.out_dir / "forecasts" / "ensemble.csv").string());
    std::map<EnsembleKey, std::vector<double>> draws;
    for (const auto& f : files) {
        const auto rows = detail::read_rows(f);
        if (rows.header != std::vector<std::string>{"origin", "path", "horizon", "variable", "value"})
            throw DataError(f + ": not a forecast ensemble file");
        for (const auto& r : rows.rows)
            draws[{r[0], detail::integer(r[2], f), r[3]}].push_back(detail::num(r[4], f));
    }
    const std::string realized_path = ctx.config.data.realized.empty() ? ctx.config.data.panel : ctx.config.data.realized;
    if (realized_path.empty()) throw ConfigError("data.realized (or data.panel) is not set");
    auto lo = load_options(ctx.config);
    lo.exclude.clear();
    const auto raw = read_table(realized_path);
    const auto realized = load_panel(raw, lo);
    std::map<std::string, std::size_t> date_index;
    for (std::size_t i = 0; i < realized.dates.size(); ++i) date_index[realized.dates[i]] = i;
    auto realized_value = [&](const std::string& var, std::size_t t) -> std::optional<double> {
        if (var == realized.z_name && realized.has_z()) return realized.z(static_cast<Eigen::Index>(t));
        for (std::size_t j = 0; j < realized.names.size(); ++j)
            if (realized.names[j] == var) return realized.x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
        return std::nullopt;
    };

    const auto& ev = ctx.config.eval;
    eval::LogScoreOptions lso;
    lso.bandwidth = ev.bandwidth;
    struct Acc {
        std::vector<double> fc, act, ls, rw;
        int floored = 0;
    };
    std::map<std::pair<std::string, int>, Acc> acc;
    const fs::path dir = ensure_dir(ctx.out_dir, "tables");
    auto ps = open(dir / "scores.csv");
    ps << "variable,horizon,origin,target_date,realized,mean_forecast,log_score,cumulative_abs_log_score\n";
    std::map<std::pair<std::string, int>, double> cum;
    for (const auto& [key, v] : draws) {
        if (!ev.targets.empty() && std::find(ev.targets.begin(), ev.targets.end(), key.variable) == ev.targets.end()) continue;
        const auto oi = date_index.find(key.origin);
        if (oi == date_index.end()) continue;
        const std::size_t t = oi->second + static_cast<std::size_t>(key.horizon);
        if (t >= realized.dates.size()) continue;
        const auto y = realized_value(key.variable, t);
        const auto y0 = realized_value(key.variable, oi->second);
        if (!y || !y0) continue;
        eval::PredictiveEnsemble e;
        e.draws = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        e.target_name = key.variable;
        e.origin_date = key.origin;
        e.horizon = key.horizon;
        const auto s = eval::log_score(e, *y, lso);
        auto& a = acc[{key.variable, key.horizon}];
        a.fc.push_back(e.draws.mean());
        a.act.push_back(*y);
        a.ls.push_back(s.value);
        a.rw.push_back(*y0);
        a.floored += s.floored ? 1 : 0;
        double& c = cum[{key.variable, key.horizon}];
        c += std::abs(s.value);
        ps << key.variable << ',' << key.horizon << ',' << key.origin << ',' << realized.dates[t] << ',' << *y << ','
           << e.draws.mean() << ',' << s.value << ',' << c << '\n';
    }
    if (acc.empty()) throw DataError("no forecast ensemble overlaps the realized data");
    auto ts = open(dir / "evaluation.csv");
    ts << "variable,horizon,n,rmse,rw_rmse,rmse_ratio," << (ev.average ? "avg_log_score" : "sum_log_score")
       << ",floored\n";
    int floored = 0;
    for (const auto& [k, a] : acc) {
        const auto map = [](const std::vector<double>& x) {
            return Vector(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
        };
        const double r = eval::rmse(map(a.fc), map(a.act));
        const double rw = eval::rmse(map(a.rw), map(a.act));
        ts << k.first << ',' << k.second << ',' << a.fc.size() << ',' << r << ',' << rw << ','
           << (rw > 0 ? r / rw : std::numeric_limits<double>::quiet_NaN()) << ','
           << eval::aggregate_log_scores(map(a.ls), ev.average) << ',' << a.floored << '\n';
        floored += a.floored;
    }
    ctx.out << "evaluate: " << acc.size() << " variable-horizon cells scored, " << floored << " log scores floored\n";
}

}  // namespace cli

/// Entry point shared by the command-line tool and the tests.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Nonparametric factor-augmented VAR with Bayesian additive regression trees"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir = "fabart_out", draws_dir, end_date;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::vector<std::string> ensembles;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "configuration file (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "random seed (overrides run.seed)");
        sub->add_option("--threads", threads, "worker threads (overrides run.threads)");
        sub->add_option("--out-dir", out_dir, "output directory");
    };
    auto* simulate = app.add_subcommand("simulate", "simulate factor panels for each DGP");
    auto* montecarlo = app.add_subcommand("montecarlo", "forecast experiment and factor-recovery Monte Carlo");
    auto* estimate = app.add_subcommand("estimate", "run the Gibbs sampler and dump draws");
    auto* forecast = app.add_subcommand("forecast", "predictive ensemble from dumped draws");
    auto* girf = app.add_subcommand("girf", "instrument identification and generalized impulse responses");
    auto* evaluate = app.add_subcommand("evaluate", "RMSE and log-score tables for forecast ensembles");
    for (auto* s : {simulate, montecarlo, estimate, forecast, girf, evaluate}) add_common(s);
    estimate->add_option("--end", end_date, "last date of the estimation window");
    for (auto* s : {forecast, girf}) s->add_option("--draws", draws_dir, "chain dump directory (default OUT/draws)");
    evaluate->add_option("--ensemble", ensembles, "forecast ensemble files (default OUT/forecasts/ensemble.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsageError;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    CliContext ctx{cfg, fs::path(out_dir), out};
    try {
        fs::create_directories(ctx.out_dir);
        if (simulate->parsed()) cli::write_truth_and_panels(ctx);
        else if (montecarlo->parsed()) cli::run_montecarlo(ctx);
        else if (estimate->parsed())
            cli::run_estimate(ctx, end_date.empty() ? std::nullopt : std::optional<std::string>(end_date));
        else if (forecast->parsed()) cli::run_forecast(ctx, draws_dir);
        else if (girf->parsed()) cli::run_girf(ctx, draws_dir);
        else if (evaluate->parsed()) cli::run_evaluate(ctx, ensembles);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

}  // namespace fabart::data
