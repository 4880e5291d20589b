// tcasym: command-line front end.
//
// Exit codes: 0 success, 2 config/validation error, 3 numerical failure
// (no bracket, non-convergence), 4 verification failure.

#include <tcasym/analysis.hpp>
#include <tcasym/asymptotics.hpp>
#include <tcasym/config.hpp>
#include <tcasym/hjb.hpp>
#include <tcasym/io.hpp>
#include <tcasym/model.hpp>
#include <tcasym/simulate.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tcasym;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kVerify = 4 };

struct Common {
    std::string config;
    std::string format = "csv";
    std::string out;
    std::optional<double> lambda;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "parameter file (key = value)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", c.out, "output directory (default: stdout)");
    cmd->add_option("--lambda", c.lambda, "override the cost from the config");
}

MarketParams load(const Common& c) {
    MarketParams m = load_params(c.config);
    if (c.lambda) m.lambda = *c.lambda;
    return m;
}

// Writes `text` to <out>/<name>, or to stdout when no directory was given.
void emit(const Common& c, const std::string& name, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    fs::create_directories(c.out);
    write_text((fs::path(c.out) / name).string(), text);
}

std::vector<Family> families(const std::string& f) {
    if (f == "minus") return {Family::minus};
    if (f == "plus") return {Family::plus};
    return {Family::minus, Family::plus};
}

int cmd_constants(const Common& c) {
    const MarketParams m = load(c);
    const auto rep = validate(m);
    if (!rep.ok()) {
        std::cerr << "validation failed: " << rep.summary() << '\n';
        return kConfig;
    }
    const DerivedConstants k = derive_constants(m);
    if (c.format == "json") {
        emit(c, "constants.json", json({{"params", to_json(m)}, {"constants", to_json(k)}}).dump(2));
    } else {
        std::ostringstream os;
        os.precision(17);
        os << "name,value\ntheta," << k.theta << "\nA," << k.A << "\ngamma2," << k.gamma2 << "\nnu," << k.nu
           << "\nB," << k.B << "\nM," << k.M << "\nxi_max," << k.xi_max << '\n';
        emit(c, "constants.csv", os.str());
    }
    return kOk;
}

int cmd_boundaries(const Common& c, const std::string& family, std::size_t times, double ftol) {
    const MarketParams m = load(c);
    const DerivedConstants k = derive_constants(m);
    RootOptions opt;
    opt.ftol = ftol;
    for (Family f : families(family)) {
        const BoundarySet b = solve_boundaries(f, m.lambda, m, k, uniform_times(m.T, times), opt);
        const std::string stem = std::string("boundaries_") + to_string(f);
        if (c.format == "json") emit(c, stem + ".json", to_json(b).dump(2));
        else emit(c, stem + ".csv", boundaries_csv(b));
    }
    return kOk;
}

int cmd_solve(const Common& c, const std::string& scheme, std::optional<std::size_t> nz, std::optional<std::size_t> nt,
              std::optional<double> zmin, std::optional<double> zmax, double cells, std::size_t layers) {
    const MarketParams m = load(c);
    const DerivedConstants k = derive_constants(m);
    GridSpec g = default_grid(m, k, cells, parse_scheme(scheme));
    if (zmin) g.z_min = *zmin;
    if (zmax) g.z_max = *zmax;
    if (nz) g.nz = *nz;
    g.max_layers = layers;
    if (nt) g.nt = *nt;
    else if (g.scheme == Scheme::explicit_projected) g.nt = cfl_min_steps(m, k, g);
    const GridSolution s = solve_hjb(m, k, g);
    json head = header_json(s);
    head["u_t0_theta"] = interpolate(s, m.t0, k.theta);
    head["merton_t0"] = merton_reduced(m.t0, m, k);
    if (c.out.empty()) {
        std::cout << head.dump(2) << '\n';
        return kOk;
    }
    emit(c, "solution.json", head.dump(2));
    emit(c, "values.csv", values_csv(s));
    return kOk;
}

int cmd_simulate(const Common& c, const std::string& strategy, PathConfig cfg, bool no_antithetic) {
    const MarketParams m = load(c);
    const DerivedConstants k = derive_constants(m);
    cfg.antithetic = !no_antithetic;
    cfg.t0 = m.t0;
    SimulationResult r;
    if (strategy == "merton") r = simulate_merton(m, cfg);
    else r = simulate_reflected(m, solve_boundaries(Family::minus, m.lambda, m, k), cfg);
    if (c.format == "json") {
        json j = to_json(r);
        j["strategy"] = strategy;
        j["lambda"] = m.lambda;
        j["seed"] = cfg.seed;
        j["dt"] = cfg.dt;
        emit(c, "simulation.json", j.dump(2));
    } else {
        emit(c, "simulation.csv", simulation_csv(m.lambda, r));
    }
    return r.ruin_count > 0 && m.p < 0 ? kNumerical : kOk;
}

int cmd_verify(const Common& c, const std::string& family, VerifyOptions o) {
    const MarketParams m = load(c);
    const DerivedConstants k = derive_constants(m);
    json out = json::array();
    bool failed = false, numerical = false;
    for (Family f : families(family)) {
        const VerifyReport r = verify_family(f, m.lambda, m, k, o);
        out.push_back(to_json(r));
        if (!r.error.empty()) numerical = true;
        else if (!r.ok()) failed = true;
        std::cerr << to_string(f) << ": " << (r.ok() ? "pass" : (r.error.empty() ? "FAIL" : "ERROR " + r.error))
                  << '\n';
    }
    if (c.format == "json") {
        emit(c, "verify.json", out.dump(2));
    } else {
        std::ostringstream os;
        os << "family,lambda,ok,points,worst_hjb,worst_final,violations,error\n";
        for (const auto& r : out)
            os << r["family"].get<std::string>() << ',' << r["lambda"].get<double>() << ','
               << (r["ok"].get<bool>() ? 1 : 0) << ',' << r["points"].get<std::size_t>() << ',' << r["worst_hjb"]
               << ',' << r["worst_final"] << ',' << r["violations"].size() << ','
               << (r.contains("error") ? r["error"].get<std::string>() : "") << '\n';
        emit(c, "verify.csv", os.str());
    }
    if (numerical) return kNumerical;
    return failed ? kVerify : kOk;
}

int cmd_sweep(const Common& c, std::vector<double> lambdas, double cells, bool sandwich, double k_lo, double k_hi) {
    const MarketParams m = load(c);
    derive_constants(m);
    if (lambdas.empty()) lambdas = {m.lambda};
    GridPolicy pol;
    pol.cells_per_width = cells;
    const SweepReport rep = expansion_study(m, lambdas, pol);
    bool failed = !rep.loss_increasing;
    json j = to_json(rep);
    if (sandwich) {
        json rows = json::array();
        for (const auto& s : sandwich_study(m, lambdas, k_lo, k_hi, pol)) {
            rows.push_back(to_json(s));
            failed = failed || !s.pass();
        }
        j["sandwich"] = rows;
    }
    if (!rep.fit) std::cerr << "note: insufficient points for a slope fit\n";
    if (c.format == "json") {
        emit(c, "sweep.json", j.dump(2));
    } else {
        emit(c, "sweep.csv", sweep_csv(rep));
        if (!c.out.empty()) {
            emit(c, "sweep_plot.csv", sweep_plot_data(rep));
            emit(c, "sweep.json", j.dump(2));
        }
    }
    return failed ? kVerify : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotics of optimal investment with small proportional transaction costs"};
    app.require_subcommand(1);

    Common cc, cb, cs, csim, cv, csw;

    auto* constants = app.add_subcommand("constants", "print the derived constants");
    add_common(constants, cc);

    auto* boundaries = app.add_subcommand("boundaries", "free-boundary curves zeta1(t), zeta2(t)");
    add_common(boundaries, cb);
    std::string b_family = "both";
    std::size_t b_times = kDefaultBoundaryTimes;
    double b_ftol = 1e-12;
    boundaries->add_option("--family", b_family)->check(CLI::IsMember({"minus", "plus", "both"}));
    boundaries->add_option("--times", b_times, "uniform time samples on [0, T]")->check(CLI::Range(2, 100000000));
    boundaries->add_option("--ftol", b_ftol, "root tolerance on |f|");

    auto* solve = app.add_subcommand("solve", "finite-difference value function u(t, z)");
    add_common(solve, cs);
    std::string s_scheme = "explicit";
    std::optional<std::size_t> s_nz, s_nt;
    std::optional<double> s_zmin, s_zmax;
    double s_cells = 40.0;
    std::size_t s_layers = 1001;
    solve->add_option("--scheme", s_scheme)->check(CLI::IsMember({"explicit", "penalty"}));
    solve->add_option("--nz", s_nz);
    solve->add_option("--nt", s_nt);
    solve->add_option("--z-min", s_zmin);
    solve->add_option("--z-max", s_zmax);
    solve->add_option("--cells-per-width", s_cells, "grid points across nu lambda^(1/3)");
    solve->add_option("--layers", s_layers, "stored time layers");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo of the reflected or Merton strategy");
    add_common(simulate, csim);
    std::string sim_strategy = "reflected";
    PathConfig pcfg;
    bool no_anti = false;
    simulate->add_option("--strategy", sim_strategy)->check(CLI::IsMember({"reflected", "merton"}));
    simulate->add_option("--paths", pcfg.n_paths);
    simulate->add_option("--dt", pcfg.dt);
    simulate->add_option("--seed", pcfg.seed);
    simulate->add_option("--x0", pcfg.x0);
    simulate->add_option("--y0", pcfg.y0);
    simulate->add_option("--threads", pcfg.threads);
    simulate->add_flag("--no-antithetic", no_anti);

    auto* verify = app.add_subcommand("verify", "sub/supersolution checks for w- and w+");
    add_common(verify, cv);
    std::string v_family = "both";
    VerifyOptions vopt;
    verify->add_option("--family", v_family)->check(CLI::IsMember({"minus", "plus", "both"}));
    verify->add_option("--nt", vopt.nt);
    verify->add_option("--nz", vopt.nz);
    verify->add_option("--tube", vopt.tube, "excluded half-width around the boundary curves");
    verify->add_option("--tol", vopt.rel_tol, "relative tolerance");

    auto* sweep = app.add_subcommand("sweep", "loss(lambda) study, optional sandwich check");
    add_common(sweep, csw);
    std::vector<double> sw_lambdas;
    double sw_cells = 40.0, sw_klo = 0.3, sw_khi = 0.7;
    bool sw_sandwich = false;
    sweep->add_option("--lambdas", sw_lambdas, "cost values")->delimiter(',');
    sweep->add_option("--cells-per-width", sw_cells);
    sweep->add_flag("--sandwich", sw_sandwich);
    sweep->add_option("--k-lo", sw_klo);
    sweep->add_option("--k-hi", sw_khi);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*constants) return cmd_constants(cc);
        if (*boundaries) return cmd_boundaries(cb, b_family, b_times, b_ftol);
        if (*solve) return cmd_solve(cs, s_scheme, s_nz, s_nt, s_zmin, s_zmax, s_cells, s_layers);
        if (*simulate) return cmd_simulate(csim, sim_strategy, pcfg, no_anti);
        if (*verify) return cmd_verify(cv, v_family, vopt);
        if (*sweep) return cmd_sweep(csw, sw_lambdas, sw_cells, sw_sandwich, sw_klo, sw_khi);
    } catch (const NoBracket& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const CflError& e) {
        std::cerr << "grid error: " << e.what() << '\n';
        return kConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
