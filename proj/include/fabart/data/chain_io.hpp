#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fabart/data/csv.hpp"
#include "fabart/favar/gibbs.hpp"

namespace fabart::data {

namespace fs = std::filesystem;

// Layout of a chain directory (one CSV per block, header row first, rows in
// draw order):
//   meta.csv             key,value
//   panel.csv            date,[Z],X1..XN   (transformed, unstandardized)
//   standardization.csv  series,mean,scale
//   rescale.csv          series,mid,range,sigma_xi
//   factors.csv          draw,date,F1..FJ
//   var_coef.csv         draw,regressor,<state names>
//   innov_cov.csv        draw,row,<state names>
//   loadings.csv         draw,series,<state names>
//   meas_var.csv         draw,series,value
//   forest_sigma.csv     draw,equation,sigma
//   trees.csv            draw,equation,tree,node,parent,left,right,variable,threshold,value
//   diagnostics.csv      iteration,mean_sigma,loading_norm,tree_accept_rate,mean_leaves

namespace detail {

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw DataError("cannot write " + p.string());
    os.precision(17);
    return os;
}

inline std::vector<std::string> state_names(const favar::FavarModel& m) {
    std::vector<std::string> n;
    if (m.has_z()) n.push_back(m.panel.z_name.empty() ? "Z" : m.panel.z_name);
    for (int j = 0; j < m.n_factors; ++j) n.push_back("F" + std::to_string(j + 1));
    return n;
}

inline std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

struct CsvRows {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvRows read_rows(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open " + p.string());
    CsvRows r;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (r.header.empty()) r.header = std::move(cells);
        else {
            if (cells.size() != r.header.size())
                throw DataError(p.string() + ": ragged row with " + std::to_string(cells.size()) + " fields");
            r.rows.push_back(std::move(cells));
        }
    }
    return r;
}

inline double num(const std::string& s, const fs::path& p) { return parse_value(s, p.string()); }

inline int integer(const std::string& s, const fs::path& p) {
    try {
        return std::stoi(s);
    } catch (const std::exception&) {
        throw DataError(p.string() + ": expected an integer, found '" + s + "'");
    }
}

}  // namespace detail

inline void write_chain(const fs::path& dir, const favar::ChainResult& r, std::uint64_t seed = 0) {
    fs::create_directories(dir);
    const auto& m = r.model;
    const auto& c = r.config;
    const auto names = detail::state_names(m);
    const Eigen::Index n = m.n_vars();
    std::vector<std::string> xnames = m.panel.names;
    if (xnames.empty())
        for (Eigen::Index j = 0; j < n; ++j) xnames.push_back("X" + std::to_string(j + 1));

    {
        auto os = detail::open_out(dir / "meta.csv");
        os << "key,value\n";
        os << "retained," << r.draws.size() << '\n';
        os << "n_factors," << c.n_factors << "\nn_lags," << c.n_lags << "\nn_draws," << c.n_draws << "\nn_burn,"
           << c.n_burn << "\nthin," << c.thin << "\ntraining_obs," << c.training_obs << "\niota," << c.iota
           << "\nlambda," << c.lambda() << "\nconst_tightness," << c.const_tightness << "\ninitial_state_var,"
           << c.initial_state_var << "\nmeasurement," << (c.measurement == favar::MeasurementModel::Bart ? "bart" : "linear")
           << "\nn_trees," << c.bart_prior.n_trees << "\nalpha," << c.bart_prior.alpha << "\nbeta," << c.bart_prior.beta
           << "\nkappa," << c.bart_prior.kappa << "\nnu," << c.bart_prior.nu << "\nquantile," << c.bart_prior.quantile
           << "\nleaf_scale," << (c.bart_prior.leaf_scale == bart::LeafScale::Standard ? "standard" : "range_over_nu")
           << "\nhas_z," << (m.has_z() ? 1 : 0) << "\nz_name," << m.panel.z_name << "\nseed," << seed
           << "\nforests," << (!r.draws.empty() && !r.draws.front().forests.empty() ? 1 : 0) << '\n';
    }
    {
        auto os = detail::open_out(dir / "panel.csv");
        os << "date";
        if (m.has_z()) os << ',' << names[0];
        os << ',' << detail::join(xnames) << '\n';
        for (Eigen::Index t = 0; t < m.periods(); ++t) {
            os << (m.panel.dates.empty() ? std::to_string(t + 1) : m.panel.dates[static_cast<std::size_t>(t)]);
            if (m.has_z()) os << ',' << m.panel.z(t);
            for (Eigen::Index j = 0; j < n; ++j) os << ',' << m.panel.x(t, j);
            os << '\n';
        }
    }
    {
        auto os = detail::open_out(dir / "standardization.csv");
        os << "series,mean,scale\n";
        if (m.has_z()) os << names[0] << ',' << m.z_mean << ',' << m.z_scale << '\n';
        for (Eigen::Index j = 0; j < n; ++j)
            os << xnames[static_cast<std::size_t>(j)] << ',' << m.x_scaler.mean(j) << ',' << m.x_scaler.scale(j) << '\n';
        auto rs = detail::open_out(dir / "rescale.csv");
        rs << "series,mid,range,sigma_xi\n";
        for (Eigen::Index j = 0; j < n; ++j)
            rs << xnames[static_cast<std::size_t>(j)] << ',' << m.target_mid(j) << ',' << m.target_range(j) << ','
               << m.sigma_xi(j) << '\n';
    }
    auto fac = detail::open_out(dir / "factors.csv");
    auto vc = detail::open_out(dir / "var_coef.csv");
    auto ic = detail::open_out(dir / "innov_cov.csv");
    auto ld = detail::open_out(dir / "loadings.csv");
    auto mv = detail::open_out(dir / "meas_var.csv");
    auto fs_ = detail::open_out(dir / "forest_sigma.csv");
    auto tr = detail::open_out(dir / "trees.csv");
    std::vector<std::string> fnames(names.end() - m.n_factors, names.end());
    fac << "draw,date," << detail::join(fnames) << '\n';
    vc << "draw,regressor," << detail::join(names) << '\n';
    ic << "draw,row," << detail::join(names) << '\n';
    ld << "draw,series," << detail::join(names) << '\n';
    mv << "draw,series,value\n";
    fs_ << "draw,equation,sigma\n";
    tr << "draw,equation,tree,node,parent,left,right,variable,threshold,value\n";
    std::vector<std::string> regs;
    for (int l = 1; l <= c.n_lags; ++l)
        for (const auto& s : names) regs.push_back("lag" + std::to_string(l) + "_" + s);
    regs.push_back("const");
    std::vector<std::string> series;
    if (m.has_z()) series.push_back(names[0]);
    series.insert(series.end(), xnames.begin(), xnames.end());

    for (std::size_t d = 0; d < r.draws.size(); ++d) {
        const auto& dr = r.draws[d];
        for (Eigen::Index t = 0; t < dr.factors.rows(); ++t) {
            fac << d << ',' << (m.panel.dates.empty() ? std::to_string(t + 1) : m.panel.dates[static_cast<std::size_t>(t)]);
            for (Eigen::Index j = 0; j < dr.factors.cols(); ++j) fac << ',' << dr.factors(t, j);
            fac << '\n';
        }
        const Matrix& coef = dr.state.var.coef;
        for (Eigen::Index i = 0; i < coef.rows(); ++i) {
            vc << d << ',' << regs[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < coef.cols(); ++j) vc << ',' << coef(i, j);
            vc << '\n';
        }
        for (Eigen::Index i = 0; i < dr.state.innov_cov.rows(); ++i) {
            ic << d << ',' << names[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < dr.state.innov_cov.cols(); ++j) ic << ',' << dr.state.innov_cov(i, j);
            ic << '\n';
        }
        for (Eigen::Index i = 0; i < dr.state.loadings.rows(); ++i) {
            ld << d << ',' << series[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < dr.state.loadings.cols(); ++j) ld << ',' << dr.state.loadings(i, j);
            ld << '\n';
        }
        for (Eigen::Index j = 0; j < n; ++j) mv << d << ',' << xnames[static_cast<std::size_t>(j)] << ',' << dr.state.meas_var(j) << '\n';
        for (std::size_t e = 0; e < dr.forests.size(); ++e) {
            fs_ << d << ',' << e << ',' << dr.forests[e].sigma << '\n';
            for (std::size_t s = 0; s < dr.forests[e].trees.size(); ++s) {
                const auto& nodes = dr.forests[e].trees[s].nodes();
                for (std::size_t k = 0; k < nodes.size(); ++k) {
                    const auto& nd = nodes[k];
                    tr << d << ',' << e << ',' << s << ',' << k << ',' << nd.parent << ',' << nd.left << ',' << nd.right << ','
                       << nd.rule.variable << ',' << nd.rule.threshold << ',' << nd.value << '\n';
                }
            }
        }
    }
    auto dg = detail::open_out(dir / "diagnostics.csv");
    dg << "iteration,mean_sigma,loading_norm,tree_accept_rate,mean_leaves\n";
    for (const auto& t : r.trace)
        dg << t.iteration << ',' << t.mean_sigma << ',' << t.loading_norm << ',' << t.tree_accept_rate << ',' << t.mean_leaves
           << '\n';
}

/// Rebuilds a ChainResult from a directory written by write_chain.
inline favar::ChainResult read_chain(const fs::path& dir) {
    using detail::integer;
    using detail::num;
    std::map<std::string, std::string> meta;
    for (const auto& row : detail::read_rows(dir / "meta.csv").rows) meta[row[0]] = row[1];
    auto need = [&](const std::string& k) {
        const auto it = meta.find(k);
        if (it == meta.end()) throw DataError((dir / "meta.csv").string() + ": missing key " + k);
        return it->second;
    };
    const fs::path mp = dir / "meta.csv";
    favar::FavarConfig c;
    c.n_factors = integer(need("n_factors"), mp);
    c.n_lags = integer(need("n_lags"), mp);
    c.n_draws = integer(need("n_draws"), mp);
    c.n_burn = integer(need("n_burn"), mp);
    c.thin = integer(need("thin"), mp);
    c.training_obs = integer(need("training_obs"), mp);
    c.iota = num(need("iota"), mp);
    c.lambda_soc = num(need("lambda"), mp);
    c.const_tightness = num(need("const_tightness"), mp);
    c.initial_state_var = num(need("initial_state_var"), mp);
    c.measurement = need("measurement") == "bart" ? favar::MeasurementModel::Bart : favar::MeasurementModel::Linear;
    c.bart_prior.n_trees = integer(need("n_trees"), mp);
    c.bart_prior.alpha = num(need("alpha"), mp);
    c.bart_prior.beta = num(need("beta"), mp);
    c.bart_prior.kappa = num(need("kappa"), mp);
    c.bart_prior.nu = num(need("nu"), mp);
    c.bart_prior.quantile = num(need("quantile"), mp);
    c.bart_prior.leaf_scale = need("leaf_scale") == "standard" ? bart::LeafScale::Standard : bart::LeafScale::RangeOverNu;
    const bool has_z = integer(need("has_z"), mp) != 0;
    const bool has_forests = integer(need("forests"), mp) != 0;
    const auto retained = static_cast<std::size_t>(integer(need("retained"), mp));

    const fs::path pp = dir / "panel.csv";
    const auto pr = detail::read_rows(pp);
    if (pr.header.size() < 2 || pr.rows.empty()) throw DataError(pp.string() + ": empty panel");
    const auto T_rows = static_cast<Eigen::Index>(pr.rows.size());
    const auto n_cols = static_cast<Eigen::Index>(pr.header.size() - 1);
    Matrix vals(T_rows, n_cols);
    favar::PanelData panel;
    for (Eigen::Index t = 0; t < T_rows; ++t) {
        const auto& row = pr.rows[static_cast<std::size_t>(t)];
        panel.dates.push_back(row[0]);
        for (Eigen::Index j = 0; j < n_cols; ++j) vals(t, j) = num(row[static_cast<std::size_t>(j) + 1], pp);
    }
    if (has_z) {
        panel.z_name = need("z_name");
        panel.z = vals.col(0);
        panel.x = vals.rightCols(n_cols - 1);
        panel.names.assign(pr.header.begin() + 2, pr.header.end());
    } else {
        panel.x = vals;
        panel.names.assign(pr.header.begin() + 1, pr.header.end());
    }
    favar::ChainResult r;
    r.config = c;
    r.model = favar::FavarModel::build(panel, c);
    const auto& m = r.model;
    const Eigen::Index T = m.periods(), J = m.n_factors, M = m.n_state_vars(), N = m.n_vars();
    r.draws.resize(retained);
    for (auto& d : r.draws) {
        d.factors.resize(T, J);
        d.state.has_z = has_z;
        d.state.var = favar::VarCoefficients(Matrix::Zero(M * c.n_lags + 1, M), static_cast<int>(M), c.n_lags);
        d.state.innov_cov.resize(M, M);
        d.state.loadings.resize(N + (has_z ? 1 : 0), M);
        d.state.meas_var.resize(N);
        if (has_forests)
            for (Eigen::Index e = 0; e < N; ++e)
                d.forests.push_back(bart::Forest{{}, 1.0, static_cast<std::size_t>(e)});
    }
    auto fill = [&](const std::string& file, Eigen::Index rows_per_draw, auto target) {
        const fs::path p = dir / file;
        const auto rows = detail::read_rows(p).rows;
        if (rows.size() != retained * static_cast<std::size_t>(rows_per_draw))
            throw DataError(p.string() + ": expected " + std::to_string(retained * rows_per_draw) + " rows");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto d = static_cast<std::size_t>(integer(rows[i][0], p));
            Matrix& mat = target(r.draws.at(d));
            const auto row = static_cast<Eigen::Index>(i % static_cast<std::size_t>(rows_per_draw));
            for (Eigen::Index j = 0; j < mat.cols(); ++j) mat(row, j) = num(rows[i][static_cast<std::size_t>(j) + 2], p);
        }
    };
    fill("factors.csv", T, [](favar::ChainDraw& d) -> Matrix& { return d.factors; });
    fill("var_coef.csv", M * c.n_lags + 1, [](favar::ChainDraw& d) -> Matrix& { return d.state.var.coef; });
    fill("innov_cov.csv", M, [](favar::ChainDraw& d) -> Matrix& { return d.state.innov_cov; });
    fill("loadings.csv", N + (has_z ? 1 : 0), [](favar::ChainDraw& d) -> Matrix& { return d.state.loadings; });
    {
        const fs::path p = dir / "meas_var.csv";
        const auto rows = detail::read_rows(p).rows;
        if (rows.size() != retained * static_cast<std::size_t>(N)) throw DataError(p.string() + ": unexpected row count");
        for (std::size_t i = 0; i < rows.size(); ++i)
            r.draws.at(static_cast<std::size_t>(integer(rows[i][0], p))).state.meas_var(static_cast<Eigen::Index>(i % static_cast<std::size_t>(N))) =
                num(rows[i][2], p);
    }
    if (has_forests) {
        const fs::path sp = dir / "forest_sigma.csv";
        for (const auto& row : detail::read_rows(sp).rows)
            r.draws.at(static_cast<std::size_t>(integer(row[0], sp))).forests.at(static_cast<std::size_t>(integer(row[1], sp))).sigma =
                num(row[2], sp);
        const fs::path tp = dir / "trees.csv";
        const auto rows = detail::read_rows(tp).rows;
        std::vector<bart::RegressionTree::Node> nodes;
        auto flush = [&](std::size_t d, std::size_t e) {
            if (nodes.empty()) return;
            r.draws.at(d).forests.at(e).trees.push_back(bart::RegressionTree::from_nodes(std::move(nodes)));
            nodes.clear();
        };
        std::size_t cd = 0, ce = 0, cs = 0;
        for (const auto& row : rows) {
            const auto d = static_cast<std::size_t>(integer(row[0], tp));
            const auto e = static_cast<std::size_t>(integer(row[1], tp));
            const auto s = static_cast<std::size_t>(integer(row[2], tp));
            if (!nodes.empty() && (d != cd || e != ce || s != cs)) flush(cd, ce);
            cd = d;
            ce = e;
            cs = s;
            bart::RegressionTree::Node nd;
            nd.parent = integer(row[4], tp);
            nd.left = integer(row[5], tp);
            nd.right = integer(row[6], tp);
            nd.rule.variable = static_cast<std::size_t>(integer(row[7], tp));
            nd.rule.threshold = num(row[8], tp);
            nd.value = num(row[9], tp);
            nodes.push_back(nd);
        }
        flush(cd, ce);
        for (const auto& d : r.draws)
            for (const auto& f : d.forests)
                if (f.trees.size() != static_cast<std::size_t>(c.bart_prior.n_trees))
                    throw DataError(tp.string() + ": forest with " + std::to_string(f.trees.size()) + " trees");
    }
    const fs::path dp = dir / "diagnostics.csv";
    if (fs::exists(dp))
        for (const auto& row : detail::read_rows(dp).rows) {
            favar::IterationTrace tr;
            tr.iteration = integer(row[0], dp);
            tr.mean_sigma = num(row[1], dp);
            tr.loading_norm = num(row[2], dp);
            tr.tree_accept_rate = num(row[3], dp);
            tr.mean_leaves = num(row[4], dp);
            r.trace.push_back(tr);
        }
    return r;
}

}  // namespace fabart::data
