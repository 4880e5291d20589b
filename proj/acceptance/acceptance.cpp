// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <tcasym/analysis.hpp>
#include <tcasym/asymptotics.hpp>
#include <tcasym/hjb.hpp>
#include <tcasym/model.hpp>
#include <tcasym/simulate.hpp>

#include "../tests/oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace tcasym;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Clock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// appends a runtime budget check to an outcome
Outcome within_budget(Outcome o, const Clock& clk, double budget) {
    const double s = clk.seconds();
    while (o.detail.size() >= 2 && o.detail.compare(o.detail.size() - 2, 2, "; ") == 0) o.detail.resize(o.detail.size() - 2);
    o.detail += "; runtime " + fmt("%.1f", s) + " s (budget " + fmt("%.0f", budget) + " s)";
    if (s > budget) o.pass = false;
    return o;
}

Outcome constants_match(const MarketParams& m) {
    Clock clk;
    const DerivedConstants c = derive_constants(m);
    const oracle::Constants o = oracle::constants(m);
    const std::pair<const char*, std::pair<double, oracle::Big>> rows[] = {
        {"theta", {c.theta, o.theta}}, {"A", {c.A, o.A}}, {"gamma2", {c.gamma2, o.gamma2}},
        {"nu", {c.nu, o.nu}},          {"B", {c.B, o.B}}, {"M", {c.M, o.M}}};
    double worst = 0.0;
    std::string worst_name;
    for (const auto& [name, v] : rows) {
        const double e = oracle::rel_err(v.first, v.second);
        if (e >= worst) worst = e, worst_name = name;
    }
    Outcome out{worst <= 1e-12, "max rel err " + fmt("%.2e", worst) + " (" + worst_name + ")"};
    return within_budget(out, clk, 1.0);
}

Outcome boundary_roots(const MarketParams& base) {
    Clock clk;
    const std::vector<double> lambdas{1e-3, 1e-4, 1e-5};
    bool pass = true;
    std::ostringstream os;
    double worst_res = 0.0;
    for (Family fam : {Family::minus, Family::plus}) {
        // max_t |delta_i - leading| / l^(2/3) for each lambda, per boundary
        std::vector<double> dev1, dev2;
        for (double l : lambdas) {
            const MarketParams m = base.with_lambda(l);
            const DerivedConstants c = derive_constants(m);
            try {
                const BoundarySet b = solve_boundaries(fam, l, m, c, std::size_t{64});
                worst_res = std::max(worst_res, b.max_residual());
                if (b.max_residual() > 1e-12) pass = false;
                if (!b.all_inside_lemma_bracket()) {
                    pass = false;
                    int w = 0;
                    for (std::size_t i = 0; i < b.size(); ++i) w = std::max({w, b.widenings1[i], b.widenings2[i]});
                    os << to_string(fam) << "@" << l << ": outside bracket (" << w << " widenings); ";
                }
                double d1 = 0, d2 = 0;
                const double l23 = std::pow(l, 2.0 / 3.0);
                for (std::size_t i = 0; i < b.size(); ++i) {
                    const double t = b.times[i];
                    d1 = std::max(d1, std::abs(b.delta1[i] - delta_leading(1, t, l, m, c)) / l23);
                    d2 = std::max(d2, std::abs(b.delta2[i] - delta_leading(2, t, l, m, c)) / l23);
                }
                dev1.push_back(d1);
                dev2.push_back(d2);
            } catch (const std::exception& e) {
                pass = false;
                os << to_string(fam) << "@" << l << ": " << e.what() << "; ";
                dev1.push_back(NAN);
                dev2.push_back(NAN);
            }
        }
        for (const auto* dev : {&dev1, &dev2})
            for (std::size_t k = 1; k < dev->size(); ++k)
                if (!((*dev)[k] < (*dev)[k - 1])) pass = false;
        os << to_string(fam) << " dev/l^(2/3) (1e-3,1e-4,1e-5): d1 [" << dev1[0] << ", " << dev1[1] << ", "
           << dev1[2] << "] d2 [" << dev2[0] << ", " << dev2[1] << ", " << dev2[2] << "]; ";
    }
    os << "max |f| " << fmt("%.2e", worst_res);
    return within_budget({pass, os.str()}, clk, 5.0);
}

Outcome solution_signs(const MarketParams& base) {
    Clock clk;
    const double l = 1e-4;
    const MarketParams m = base.with_lambda(l);
    const DerivedConstants c = derive_constants(m);
    bool pass = true;
    std::ostringstream os;
    for (Family fam : {Family::plus, Family::minus}) {
        const VerifyReport r = verify_family(fam, l, m, c, VerifyOptions{});
        pass = pass && r.ok();
        os << to_string(fam) << ": ";
        if (!r.error.empty()) {
            os << "error: " << r.error << "; ";
            continue;
        }
        os << (r.ok() ? "ok" : "violations " + std::to_string(r.violations.size())) << " worst H/|w| "
           << fmt("%.2e", r.worst_hjb) << ", final margin " << fmt("%.2e", r.worst_final);
        if (fam == Family::plus) os << ", min g " << fmt("%.2e", r.min_g);
        os << "; ";
    }
    return within_budget({pass, os.str()}, clk, 30.0);
}

Outcome pasting(const MarketParams& base) {
    Clock clk;
    const double l = 1e-5;
    const MarketParams m = base.with_lambda(l);
    const DerivedConstants c = derive_constants(m);
    bool pass = true;
    std::ostringstream os;
    os << "lambda " << l << ": ";
    for (Family fam : {Family::minus, Family::plus}) {
        try {
            const PastingReport r = smooth_pasting(SubSupSurface::build(fam, l, m, c), 50);
            const bool ok = r.max_value_jump <= 1e-9 && r.max_slope_jump <= 1e-9;
            pass = pass && ok;
            os << to_string(fam) << " value jump " << fmt("%.2e", r.max_value_jump) << " slope jump "
               << fmt("%.2e", r.max_slope_jump) << "; ";
        } catch (const std::exception& e) {
            pass = false;
            os << to_string(fam) << ": " << e.what() << "; ";
        }
    }
    return within_budget({pass, os.str()}, clk, 1.0);
}

Outcome sandwich(const MarketParams& base) {
    Clock clk;
    bool pass = true;
    std::ostringstream os;
    for (double l : {1e-3, 1e-4}) {
        Clock one;
        const MarketParams m = base.with_lambda(l);
        const DerivedConstants c = derive_constants(m);
        const SandwichRow row = sandwich_row(m, c, refined_solve(m, c), 0.3, 0.7);
        const bool ok = row.pass() && one.seconds() <= 300.0;
        pass = pass && ok;
        os << "lambda " << l << ": " << (ok ? "ok" : "fail");
        if (!row.error.empty()) os << " (" << row.error << ")";
        os << " upper margin " << fmt("%.2e", row.min_upper_margin) << " lower margin "
           << fmt("%.2e", row.min_lower_margin) << " vs error est " << fmt("%.2e", row.error_estimate) << " ["
           << fmt("%.1f", one.seconds()) << " s]; ";
    }
    return within_budget({pass, os.str()}, clk, 600.0);
}

Outcome loss_law(const MarketParams& base) {
    Clock clk;
    const std::vector<double> lambdas{1e-2, std::pow(10.0, -2.5), 1e-3, std::pow(10.0, -3.5), 1e-4};
    const SweepReport r = expansion_study(base, lambdas);
    std::ostringstream os;
    bool pass = r.fit.has_value() && r.fit->slope >= 0.60 && r.fit->slope <= 0.75;
    const double rel = r.relative_coefficient_error(r.rows.size() - 1);
    pass = pass && rel <= 0.15;
    if (r.fit)
        os << "slope " << fmt("%.4f", r.fit->slope) << " CI [" << fmt("%.4f", r.fit->ci_low) << ", "
           << fmt("%.4f", r.fit->ci_high) << "] R^2 " << fmt("%.5f", r.fit->r_squared);
    else
        os << "no fit (" << r.note << ")";
    os << "; loss/l^(2/3) at 1e-4 " << fmt("%.5f", r.rows.back().coefficient) << " vs predicted "
       << fmt("%.5f", r.predicted_coefficient) << " (rel " << fmt("%.3f", rel) << ")";
    if (r.two_term)
        os << "; two-term fit c1 " << fmt("%.5f", r.two_term->c1) << " c2 " << fmt("%.4f", r.two_term->c2);
    if (!r.loss_increasing) {
        pass = false;
        os << "; loss not increasing in lambda";
    }
    return within_budget({pass, os.str()}, clk, 1800.0);
}

Outcome frictionless(const MarketParams& base) {
    Clock clk;
    const MarketParams m = base.with_lambda(1e-8);
    const DerivedConstants c = derive_constants(m);
    GridSpec g = default_grid(m, c, 40.0, Scheme::implicit_penalty);
    g.nt = 2000;
    g.nz = 4000;
    g.max_layers = 3;
    const GridSolution s = solve_hjb(m, c, g);
    const double u = interpolate(s, 0.0, c.theta);
    const double want = merton_reduced(0.0, m, c);
    const double rel = std::abs(u - want) / std::abs(want);

    PathConfig cfg;
    cfg.n_paths = 1000000;
    cfg.dt = 1e-2;
    cfg.x0 = 1.0 - c.theta;
    cfg.y0 = c.theta;
    const SimulationResult mc = simulate_merton(m, cfg);
    const double z = std::abs(mc.estimate - want) / mc.std_error;
    std::ostringstream os;
    os << "u_num(0,theta) rel err " << fmt("%.2e", rel) << " (grid " << g.nt << "x" << g.nz
       << "); Merton MC deviation " << fmt("%.2f", z) << " SE";
    return within_budget({rel <= 1e-3 && z <= 3.0, os.str()}, clk, 300.0);
}

Outcome near_optimal(const MarketParams& base) {
    Clock clk;
    PathConfig cfg;
    cfg.n_paths = 1000000;
    cfg.dt = 1e-4;
    const GapReport g = strategy_gap(base, {1e-2, 3e-3, 1e-3}, cfg);
    std::ostringstream os;
    bool pass = true;
    for (const GapRow& r : g.rows)
        if (!r.error.empty()) {
            pass = false;
            os << "lambda " << r.lambda << ": " << r.error << "; ";
        }
    if (!pass) return within_budget({false, os.str()}, clk, 1800.0);

    // rows are lambda-decreasing; the last is lambda = 1e-3
    const GapRow& r3 = g.rows.back();
    const bool in_band = r3.mc >= r3.w_minus - 3 * r3.std_error && r3.mc <= r3.u_num + 3 * r3.std_error;
    os << "lambda 1e-3: MC " << fmt("%.8f", r3.mc) << " +/- " << fmt("%.1e", r3.std_error) << " in ["
       << fmt("%.8f", r3.w_minus) << ", " << fmt("%.8f", r3.u_num) << "] " << (in_band ? "yes" : "no") << "; ";

    // C = gap / lambda is stable when the 3 SE intervals of all rows overlap
    double lo_max = -INFINITY, hi_min = INFINITY;
    os << "gap/lambda:";
    for (const GapRow& r : g.rows) {
        const double C = r.gap / r.lambda, e = 3 * r.std_error / r.lambda;
        lo_max = std::max(lo_max, C - e);
        hi_min = std::min(hi_min, C + e);
        os << " " << fmt("%.4f", C) << "+/-" << fmt("%.4f", e);
    }
    const bool stable = lo_max <= hi_min;
    // gap / lambda^(2/3) must decrease as lambda decreases, within 3 combined SE
    bool decreasing = true;
    os << "; gap/lambda^(2/3):";
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        const GapRow& r = g.rows[i];
        const double l23 = std::pow(r.lambda, 2.0 / 3.0);
        os << " " << fmt("%.5f", r.gap / l23);
        if (i == 0) continue;
        const GapRow& q = g.rows[i - 1];
        const double q23 = std::pow(q.lambda, 2.0 / 3.0);
        const double noise = 3 * std::hypot(r.std_error / l23, q.std_error / q23);
        if (r.gap / l23 > q.gap / q23 + noise) decreasing = false;
    }
    os << "; C stable " << (stable ? "yes" : "no") << ", scaled gap decreasing " << (decreasing ? "yes" : "no");
    return within_budget({in_band && stable && decreasing, os.str()}, clk, 1800.0);
}

Outcome homothetic(const MarketParams& base) {
    Clock clk;
    const double l = 1e-3;
    const MarketParams m = base.with_lambda(l);
    const DerivedConstants c = derive_constants(m);
    const BoundarySet b = solve_boundaries(Family::minus, l, m, c);
    PathConfig cfg;
    cfg.n_paths = 10000;
    cfg.dt = 1e-3;
    cfg.keep_paths = true;
    cfg.x0 = 1.0 - c.theta;
    cfg.y0 = c.theta;
    const SimulationResult a = simulate_reflected(m, b, cfg);
    cfg.x0 *= 2;
    cfg.y0 *= 2;
    const SimulationResult d = simulate_reflected(m, b, cfg);
    const double k = std::pow(2.0, m.p);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.path_values.size(); ++i)
        worst = std::max(worst, std::abs(d.path_values[i] / a.path_values[i] - k) / k);
    Outcome o{worst <= 1e-12, "max rel deviation of ratio from 2^p " + fmt("%.2e", worst) + " over " +
                                  std::to_string(a.path_values.size()) + " paths"};
    return within_budget(o, clk, 10.0);
}

Outcome stress_rerun() {
    const MarketParams m = MarketParams::stress();
    const std::pair<const char*, std::function<Outcome(const MarketParams&)>> parts[] = {
        {"1", constants_match}, {"2", boundary_roots}, {"3", solution_signs}, {"4", pasting}, {"5", sandwich}};
    bool pass = true;
    std::ostringstream os;
    for (const auto& [name, fn] : parts) {
        Outcome o;
        try {
            o = fn(m);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        pass = pass && o.pass;
        os << (os.tellp() > 0 ? " " : "") << "[" << name << " " << (o.pass ? "pass" : "fail") << ": " << o.detail << "]";
    }
    return {pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const MarketParams ref = MarketParams::reference();
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"closed-form constants", [&] { return constants_match(ref); }},
        {"free-boundary roots", [&] { return boundary_roots(ref); }},
        {"sub/supersolution signs", [&] { return solution_signs(ref); }},
        {"smooth pasting", [&] { return pasting(ref); }},
        {"sandwich w- <= u <= w+", [&] { return sandwich(ref); }},
        {"lambda^(2/3) loss law", [&] { return loss_law(ref); }},
        {"frictionless baselines", [&] { return frictionless(ref); }},
        {"nearly-optimal strategy", [&] { return near_optimal(ref); }},
        {"homotheticity", [&] { return homothetic(ref); }},
        {"negative-p rerun of 1-5", stress_rerun},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(n)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed ? 1 : 0;
}
