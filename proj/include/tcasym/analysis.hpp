#pragma once

// Cross-module studies: the lambda^(2/3) loss law, the w- <= u <= w+ sandwich
// and the optimality gap of the reflected strategy.

#include <tcasym/asymptotics.hpp>
#include <tcasym/fit.hpp>
#include <tcasym/hjb.hpp>
#include <tcasym/model.hpp>
#include <tcasym/simulate.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tcasym {

struct GridPolicy {
    double cells_per_width = 40.0;  // dz <= nu lambda^(1/3) / cells_per_width
    Scheme scheme = Scheme::explicit_projected;
    std::size_t penalty_nt = 2000;
};

/// A fine solve plus a half-resolution solve used as its error estimate.
struct RefinedSolve {
    GridSolution fine;
    GridSolution coarse;
    double value = 0.0;  // u(t0, theta) on the fine grid
    double error = 0.0;  // |fine - coarse| at (t0, theta)
};

inline GridSpec policy_grid(const MarketParams& m, const DerivedConstants& c, const GridPolicy& pol, double factor) {
    GridSpec g = default_grid(m, c, pol.cells_per_width * factor, pol.scheme);
    if (pol.scheme == Scheme::implicit_penalty)
        g.nt = static_cast<std::size_t>(std::ceil(static_cast<double>(pol.penalty_nt) * factor));
    return g;
}

inline RefinedSolve refined_solve(const MarketParams& m, const DerivedConstants& c, const GridPolicy& pol = {}) {
    RefinedSolve r;
    r.fine = solve_hjb(m, c, policy_grid(m, c, pol, 1.0));
    r.coarse = solve_hjb(m, c, policy_grid(m, c, pol, 0.5));
    r.value = interpolate(r.fine, m.t0, c.theta);
    r.error = std::abs(r.value - interpolate(r.coarse, m.t0, c.theta));
    return r;
}

struct ExpansionRow {
    double lambda = 0.0;
    double u_num = 0.0;
    double u_error = 0.0;
    double loss = 0.0;         // (1/p) e^{pA(T - t0)} - u_num(t0, theta)
    double coefficient = 0.0;  // loss / lambda^(2/3)
    std::size_t nz = 0, nt = 0;
};

struct SweepReport {
    MarketParams params;
    double predicted_coefficient = 0.0;  // gamma2 (T - t0) e^{pA(T - t0)}
    std::vector<ExpansionRow> rows;      // lambdas strictly decreasing
    std::optional<LinearFit> fit;        // log loss vs log lambda
    std::optional<TwoTermFit> two_term;  // loss = c1 lambda^(2/3) + c2 lambda
    bool loss_increasing = true;
    std::string note;

    double relative_coefficient_error(std::size_t i) const {
        return std::abs(rows[i].coefficient - predicted_coefficient) / predicted_coefficient;
    }
};

inline std::vector<double> sorted_decreasing(std::vector<double> lambdas) {
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    for (double l : lambdas)
        if (!(l > 0.0 && l < 1.0)) throw std::invalid_argument("lambda values must lie in (0, 1)");
    return lambdas;
}

inline SweepReport expansion_study(const MarketParams& base, std::vector<double> lambdas, const GridPolicy& pol = {}) {
    SweepReport rep;
    rep.params = base;
    lambdas = sorted_decreasing(std::move(lambdas));
    const DerivedConstants c0 = derive_constants(base);
    rep.predicted_coefficient = gamma2_at(base.t0, c0, base);
    for (double l : lambdas) {
        const MarketParams m = base.with_lambda(l);
        const DerivedConstants c = derive_constants(m);
        const RefinedSolve s = refined_solve(m, c, pol);
        ExpansionRow row;
        row.lambda = l;
        row.u_num = s.value;
        row.u_error = s.error;
        row.loss = merton_reduced(m.t0, m, c) - s.value;
        row.coefficient = row.loss / std::pow(l, 2.0 / 3.0);
        row.nz = s.fine.grid.nz;
        row.nt = s.fine.grid.nt;
        rep.rows.push_back(row);
    }
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].loss < rep.rows[i - 1].loss)) rep.loss_increasing = false;

    std::vector<double> x, y, e;
    for (const auto& r : rep.rows) {
        x.push_back(r.lambda);
        y.push_back(r.loss);
        e.push_back(std::max(r.u_error, 1e-3 * std::abs(r.loss)));
    }
    rep.fit = loglog_fit(x, y, e);
    if (!rep.fit) rep.note = "insufficient points";
    else if (rep.fit->low_r_squared) rep.note = "low R^2";
    if (x.size() >= 2) rep.two_term = two_term_fit(x, y, 2.0 / 3.0, 1.0);
    return rep;
}

struct SandwichRow {
    double lambda = 0.0;
    double min_upper_margin = 0.0;  // min (w+ - u)
    double min_lower_margin = 0.0;  // min (u - w-)
    double upper_t = 0.0, upper_z = 0.0, lower_t = 0.0, lower_z = 0.0;
    double error_estimate = 0.0;    // max |u_h - u_2h| over the window
    double max_width = 0.0;         // max (w+ - w-)
    std::size_t points = 0;
    std::string error;              // e.g. a family without roots at this lambda
    bool pass() const {
        return error.empty() && min_upper_margin >= -error_estimate && min_lower_margin >= -error_estimate;
    }
};

/// Compares u_num with w+ and w- on stored layers x grid nodes in [k_lo, k_hi].
inline SandwichRow sandwich_row(const MarketParams& m, const DerivedConstants& c, const RefinedSolve& s, double k_lo,
                                double k_hi, std::size_t n_times = kDefaultBoundaryTimes) {
    SandwichRow row;
    row.lambda = m.lambda;
    std::optional<SubSupSurface> wp, wm;
    try {
        wm.emplace(SubSupSurface::build(Family::minus, m.lambda, m, c, n_times));
    } catch (const std::exception& e) {
        row.error = std::string("w-: ") + e.what();
    }
    try {
        wp.emplace(SubSupSurface::build(Family::plus, m.lambda, m, c, n_times));
    } catch (const std::exception& e) {
        row.error += (row.error.empty() ? "" : "; ") + std::string("w+: ") + e.what();
    }
    const GridSolution& f = s.fine;
    row.min_upper_margin = row.min_lower_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.layers(); ++k) {
        const double t = f.times[k];
        for (std::size_t j = 0; j < f.grid.nz; ++j) {
            const double z = f.grid.z(j);
            if (z < k_lo || z > k_hi) continue;
            const double u = f.at(k, j);
            ++row.points;
            row.error_estimate = std::max(row.error_estimate, std::abs(u - interpolate(s.coarse, t, z)));
            double up = std::numeric_limits<double>::quiet_NaN(), dn = up;
            if (wp) {
                up = wp->value(t, z);
                if (up - u < row.min_upper_margin) {
                    row.min_upper_margin = up - u;
                    row.upper_t = t, row.upper_z = z;
                }
            }
            if (wm) {
                dn = wm->value(t, z);
                if (u - dn < row.min_lower_margin) {
                    row.min_lower_margin = u - dn;
                    row.lower_t = t, row.lower_z = z;
                }
            }
            if (wp && wm) row.max_width = std::max(row.max_width, up - dn);
        }
    }
    return row;
}

inline std::vector<SandwichRow> sandwich_study(const MarketParams& base, std::vector<double> lambdas, double k_lo,
                                               double k_hi, const GridPolicy& pol = {}) {
    std::vector<SandwichRow> rows;
    for (double l : sorted_decreasing(std::move(lambdas))) {
        const MarketParams m = base.with_lambda(l);
        const DerivedConstants c = derive_constants(m);
        rows.push_back(sandwich_row(m, c, refined_solve(m, c, pol), k_lo, k_hi));
    }
    return rows;
}

struct GapRow {
    double lambda = 0.0;
    double u_num = 0.0;
    double u_error = 0.0;
    double mc = 0.0;
    double std_error = 0.0;
    double w_minus = std::numeric_limits<double>::quiet_NaN();
    double gap = 0.0;  // u_num - mc
    bool signal = false;  // gap >= 3 std_error
    std::string error;
    double scaled_by_lambda() const { return gap / lambda; }
    double scaled_by_lambda23() const { return gap / std::pow(lambda, 2.0 / 3.0); }
};

struct GapReport {
    std::vector<GapRow> rows;        // lambdas decreasing
    std::optional<LinearFit> fit;    // log gap vs log lambda over rows with signal
};

/// Runs the reflected strategy on the w- boundaries from (t0, 1 - theta, theta)
/// and compares it with u_num at (t0, theta) for each lambda.
inline GapReport strategy_gap(const MarketParams& base, std::vector<double> lambdas, PathConfig cfg,
                              const GridPolicy& pol = {}) {
    GapReport rep;
    for (double l : sorted_decreasing(std::move(lambdas))) {
        GapRow row;
        row.lambda = l;
        const MarketParams m = base.with_lambda(l);
        const DerivedConstants c = derive_constants(m);
        try {
            const RefinedSolve s = refined_solve(m, c, pol);
            row.u_num = s.value;
            row.u_error = s.error;
            const BoundarySet b = solve_boundaries(Family::minus, l, m, c);
            row.w_minus = SubSupSurface(m, c, b).value(m.t0, c.theta);
            cfg.t0 = m.t0;
            cfg.x0 = 1.0 - c.theta;
            cfg.y0 = c.theta;
            const SimulationResult r = simulate_reflected(m, b, cfg);
            row.mc = r.estimate;
            row.std_error = r.std_error;
            row.gap = row.u_num - row.mc;
            row.signal = row.gap >= 3.0 * row.std_error;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rep.rows.push_back(row);
    }
    std::vector<double> x, y, e;
    for (const auto& r : rep.rows)
        if (r.error.empty() && r.signal) {
            x.push_back(r.lambda);
            y.push_back(r.gap);
            e.push_back(r.std_error);
        }
    rep.fit = loglog_fit(x, y, e);
    return rep;
}

}  // namespace tcasym
