#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fabart/core/error.hpp"
#include "fabart/eval/scores.hpp"
#include "fabart/favar/config.hpp"
#include "fabart/sim/experiment.hpp"

namespace fabart::data {

struct DataSection {
    std::string panel;
    std::string z_column;
    int z_transform = 0;
    std::string instrument;
    std::string realized;
    std::vector<std::string> exclude;
};

struct ForecastSection {
    int horizon = 12;
    int paths_per_draw = 1;
};

struct GirfSection {
    int horizons = 40;
    int n_sim = 500;
    double shock_size = 0.1;
    /// "both", "positive" or "negative".
    std::string sign = "both";
    bool mirror = false;
    double weak_f = 10.0;
    int min_overlap = 24;
};

struct EvalSection {
    std::vector<std::string> targets;
    bool average = true;
    eval::Bandwidth bandwidth = eval::Bandwidth::Silverman;
};

struct SimSection {
    sim::DgpSpec spec;
    int n_reps = 20;
    sim::ExperimentOptions experiment;
    /// Chain length for the Monte Carlo replications.
    int mc_draws = 200;
    int mc_burn = 100;
};

struct RunConfig {
    DataSection data;
    favar::FavarConfig favar;
    ForecastSection forecast;
    GirfSection girf;
    EvalSection eval;
    SimSection sim;
    std::uint64_t seed = 20240101u;
    unsigned threads = 1;
};

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

namespace detail {

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "data.panel", "data.z_column", "data.z_transform", "data.instrument", "data.realized", "data.exclude",
        "favar.n_factors", "favar.n_lags", "favar.n_draws", "favar.n_burn", "favar.thin", "favar.training_obs",
        "favar.iota", "favar.lambda", "favar.const_tightness", "favar.initial_state_var", "favar.measurement",
        "bart.n_trees", "bart.alpha", "bart.beta", "bart.kappa", "bart.nu", "bart.quantile", "bart.leaf_scale",
        "forecast.horizon", "forecast.paths_per_draw",
        "girf.horizons", "girf.n_sim", "girf.shock_size", "girf.sign", "girf.mirror", "girf.weak_f", "girf.min_overlap",
        "eval.targets", "eval.average", "eval.bandwidth",
        "sim.n_obs", "sim.n_vars", "sim.intercept", "sim.ar1", "sim.ar2", "sim.ar3", "sim.innov_sd", "sim.loading_lo",
        "sim.loading_hi", "sim.idio_lo", "sim.idio_hi", "sim.burn_in", "sim.kinds", "sim.n_reps", "sim.eval_start",
        "sim.n_lags", "sim.n_draws", "sim.n_burn", "sim.training_obs", "sim.mc_draws", "sim.mc_burn",
        "run.seed", "run.threads"};
    return keys;
}

template <class T>
T get(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
    if (!pt.get_optional<std::string>(key)) return fallback;
    try {
        return pt.get<T>(key);
    } catch (const boost::property_tree::ptree_error&) {
        throw ConfigError("config key " + key + " has an invalid value");
    }
}

}  // namespace detail

/// Reads an INI file with sections [data] [favar] [bart] [forecast] [girf]
/// [eval] [sim] [run]. Missing keys keep their defaults; unknown keys are errors.
inline RunConfig parse_config(std::istream& is, const std::string& source = "config") {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ": " + e.message() + " at line " + std::to_string(e.line()));
    }
    for (const auto& [section, body] : tree) {
        for (const auto& [key, _] : body) {
            const std::string full = section + "." + key;
            if (!detail::known_keys().count(full)) throw ConfigError(source + ": unknown key " + full);
        }
    }
    using detail::get;
    RunConfig c;
    c.data.panel = get<std::string>(tree, "data.panel", "");
    c.data.z_column = get<std::string>(tree, "data.z_column", "");
    c.data.z_transform = get(tree, "data.z_transform", 0);
    c.data.instrument = get<std::string>(tree, "data.instrument", "");
    c.data.realized = get<std::string>(tree, "data.realized", "");
    c.data.exclude = split_list(get<std::string>(tree, "data.exclude", ""));

    auto& f = c.favar;
    f.n_factors = get(tree, "favar.n_factors", f.n_factors);
    f.n_lags = get(tree, "favar.n_lags", f.n_lags);
    f.n_draws = get(tree, "favar.n_draws", f.n_draws);
    f.n_burn = get(tree, "favar.n_burn", f.n_burn);
    f.thin = get(tree, "favar.thin", f.thin);
    f.training_obs = get(tree, "favar.training_obs", f.training_obs);
    f.iota = get(tree, "favar.iota", f.iota);
    f.lambda_soc = get(tree, "favar.lambda", f.lambda_soc);
    f.const_tightness = get(tree, "favar.const_tightness", f.const_tightness);
    f.initial_state_var = get(tree, "favar.initial_state_var", f.initial_state_var);
    const auto meas = get<std::string>(tree, "favar.measurement", "bart");
    if (meas == "bart") f.measurement = favar::MeasurementModel::Bart;
    else if (meas == "linear") f.measurement = favar::MeasurementModel::Linear;
    else throw ConfigError("favar.measurement must be bart or linear");

    auto& b = f.bart_prior;
    b.n_trees = get(tree, "bart.n_trees", b.n_trees);
    b.alpha = get(tree, "bart.alpha", b.alpha);
    b.beta = get(tree, "bart.beta", b.beta);
    b.kappa = get(tree, "bart.kappa", b.kappa);
    b.nu = get(tree, "bart.nu", b.nu);
    b.quantile = get(tree, "bart.quantile", b.quantile);
    const auto ls = get<std::string>(tree, "bart.leaf_scale", "standard");
    if (ls == "standard") b.leaf_scale = bart::LeafScale::Standard;
    else if (ls == "range_over_nu") b.leaf_scale = bart::LeafScale::RangeOverNu;
    else throw ConfigError("bart.leaf_scale must be standard or range_over_nu");

    c.forecast.horizon = get(tree, "forecast.horizon", c.forecast.horizon);
    c.forecast.paths_per_draw = get(tree, "forecast.paths_per_draw", c.forecast.paths_per_draw);

    auto& g = c.girf;
    g.horizons = get(tree, "girf.horizons", g.horizons);
    g.n_sim = get(tree, "girf.n_sim", g.n_sim);
    g.shock_size = get(tree, "girf.shock_size", g.shock_size);
    g.sign = get<std::string>(tree, "girf.sign", g.sign);
    if (g.sign != "both" && g.sign != "positive" && g.sign != "negative")
        throw ConfigError("girf.sign must be both, positive or negative");
    g.mirror = get(tree, "girf.mirror", g.mirror);
    g.weak_f = get(tree, "girf.weak_f", g.weak_f);
    g.min_overlap = get(tree, "girf.min_overlap", g.min_overlap);

    c.eval.targets = split_list(get<std::string>(tree, "eval.targets", ""));
    c.eval.average = get(tree, "eval.average", c.eval.average);
    const auto bw = get<std::string>(tree, "eval.bandwidth", "silverman");
    if (bw == "silverman") c.eval.bandwidth = eval::Bandwidth::Silverman;
    else if (bw == "scott") c.eval.bandwidth = eval::Bandwidth::Scott;
    else throw ConfigError("eval.bandwidth must be silverman or scott");

    auto& s = c.sim;
    s.spec.n_obs = get(tree, "sim.n_obs", s.spec.n_obs);
    s.spec.n_vars = get(tree, "sim.n_vars", s.spec.n_vars);
    s.spec.intercept = get(tree, "sim.intercept", s.spec.intercept);
    s.spec.ar_coefs[0] = get(tree, "sim.ar1", s.spec.ar_coefs[0]);
    s.spec.ar_coefs[1] = get(tree, "sim.ar2", s.spec.ar_coefs[1]);
    s.spec.ar_coefs[2] = get(tree, "sim.ar3", s.spec.ar_coefs[2]);
    s.spec.innov_sd = get(tree, "sim.innov_sd", s.spec.innov_sd);
    s.spec.loading_lo = get(tree, "sim.loading_lo", s.spec.loading_lo);
    s.spec.loading_hi = get(tree, "sim.loading_hi", s.spec.loading_hi);
    s.spec.idio_lo = get(tree, "sim.idio_lo", s.spec.idio_lo);
    s.spec.idio_hi = get(tree, "sim.idio_hi", s.spec.idio_hi);
    s.spec.burn_in = get(tree, "sim.burn_in", s.spec.burn_in);
    const auto kinds = split_list(get<std::string>(tree, "sim.kinds", "linear,quadratic,tanh"));
    s.experiment.kinds.clear();
    for (const auto& k : kinds) s.experiment.kinds.push_back(sim::parse_kind(k));
    if (s.experiment.kinds.empty()) throw ConfigError("sim.kinds is empty");
    s.n_reps = get(tree, "sim.n_reps", s.n_reps);
    s.experiment.eval_start = get(tree, "sim.eval_start", s.experiment.eval_start);
    auto& ch = s.experiment.chain;
    ch.n_lags = get(tree, "sim.n_lags", ch.n_lags);
    ch.n_draws = get(tree, "sim.n_draws", ch.n_draws);
    ch.n_burn = get(tree, "sim.n_burn", ch.n_burn);
    ch.training_obs = get(tree, "sim.training_obs", ch.training_obs);
    ch.bart_prior = b;
    ch.iota = f.iota;
    ch.lambda_soc = f.lambda_soc;
    ch.const_tightness = f.const_tightness;
    s.mc_draws = get(tree, "sim.mc_draws", s.mc_draws);
    s.mc_burn = get(tree, "sim.mc_burn", s.mc_burn);

    c.seed = get<std::uint64_t>(tree, "run.seed", c.seed);
    c.threads = get(tree, "run.threads", c.threads);

    f.validate();
    ch.validate();
    s.spec.validate();
    if (c.forecast.horizon < 1) throw ConfigError("forecast.horizon must be at least 1");
    if (c.forecast.paths_per_draw < 1) throw ConfigError("forecast.paths_per_draw must be at least 1");
    if (g.horizons < 0 || g.n_sim < 1) throw ConfigError("girf.horizons must be >= 0 and girf.n_sim >= 1");
    if (s.n_reps < 1) throw ConfigError("sim.n_reps must be at least 1");
    if (s.mc_burn < 0 || s.mc_burn >= s.mc_draws) throw ConfigError("sim.mc_burn must be below sim.mc_draws");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    auto c = parse_config(in, path);
    // relative data paths are taken relative to the config file
    const auto base = std::filesystem::path(path).parent_path();
    for (auto* p : {&c.data.panel, &c.data.instrument, &c.data.realized})
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    return c;
}

}  // namespace fabart::data
